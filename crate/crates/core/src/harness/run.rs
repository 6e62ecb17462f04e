use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::acquisition::{
    calibrate_sigma, choose_threshold, encode, encode_noisy, read_bitstream, write_bitstream, BinaryMeasurements,
    NoiseSpec, SensingEnsemble, Sidecar, ThresholdPolicy,
};
use crate::baselines::oracle_recover_image;
use crate::metrics::{csv_db, evaluate, iterate_snr, top_s_support, EvalReport};
use crate::parallel::par_map;
use crate::patch::{acquire_image, recover_image, PatchGrid, PatchStatus};
use crate::signal::{
    apply_blur, blur_image, build_convolution_matrix, build_patch_operator, make_spike_train, Grid, Image, SpikeTrain,
};
use crate::solver::bsr_recover;

use super::io::{write_hinton_csv, write_pgm, write_signal_csv};
use super::{ExperimentConfig, ExperimentKind, HarnessError, KernelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub kernel: String,
    pub trial: usize,
    pub seed: u64,
    pub input_snr_db: Option<f64>,
    /// `bsr` or `oracle`.
    pub method: &'static str,
    /// `ok`, or the error that zero-filled the estimate.
    pub status: String,
    pub report: EvalReport,
    pub flips: Option<usize>,
    pub degenerate_patches: usize,
    pub failed_patches: usize,
    /// Oracle comparisons only: whether BSR and the oracle keep the same
    /// top-`s` support.
    pub support_matches_oracle: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRow {
    pub kernel: String,
    pub seed: u64,
    pub input_snr_db: Option<f64>,
    pub iteration: usize,
    pub weighted_l1: f64,
    pub surrogate: f64,
    pub support_size: usize,
    pub slack_total: f64,
    pub tau: f64,
    pub recon_snr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalDump {
    /// File stem under `signals/`.
    pub name: String,
    pub grid: Grid,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub metrics: Vec<MetricRow>,
    pub iterations: Vec<IterationRow>,
    pub signals: Vec<SignalDump>,
    pub wall_time: Duration,
    pub jobs: usize,
}

impl RunOutput {
    pub fn rows<'a>(&'a self, kernel: &'a str, method: &'a str) -> impl Iterator<Item = &'a MetricRow> + 'a {
        self.metrics.iter().filter(move |r| r.kernel == kernel && r.method == method)
    }
}

#[derive(Default)]
struct UnitOutput {
    metrics: Vec<MetricRow>,
    iterations: Vec<IterationRow>,
    signals: Vec<SignalDump>,
}

/// `(one_bit_bits, full_precision_bits)`: one bit per measurement against 16
/// bits per blurred sample, summed over tiles for images.
pub fn bit_budget_report(config: &ExperimentConfig) -> Result<(u64, u64), HarnessError> {
    config.validate()?;
    let m = config.acquisition.measurements as u64;
    match config.signal.grid {
        Grid::Line(_) => Ok((m, 16 * config.blurred_len(&config.kernels[0]) as u64)),
        Grid::Image { rows, cols } => {
            let side = config.acquisition.patch.expect("validated").side;
            let p = kernel_size(&config.kernels[0]);
            let tiles = PatchGrid::new(rows, cols, side, p)?.origins.len() as u64;
            Ok((tiles * m, 16 * (rows * cols) as u64))
        }
    }
}

fn kernel_size(k: &KernelParams) -> usize {
    match *k {
        KernelParams::Gaussian { size, .. } => size,
        KernelParams::Sinc { length, .. } | KernelParams::GaussianLine { length, .. } => length,
    }
}

fn snr_tag(db: Option<f64>) -> String {
    db.map(|v| format!("_snr{v}")).unwrap_or_default()
}

fn failed_report(x: &[f64]) -> EvalReport {
    evaluate(x, &vec![0.0; x.len()])
}

fn line_unit(cfg: &ExperimentConfig, kernel: &KernelParams, trial: usize) -> Result<UnitOutput, HarnessError> {
    let seed = cfg.seeds.signal_seed(trial);
    let label = kernel.label();
    let x = make_spike_train(cfg.signal.grid, cfg.signal.spikes, seed, cfg.signal.amplitude)?;
    let truth = x.to_dense();
    let op = build_convolution_matrix(&kernel.build()?, truth.len())?;
    let z = apply_blur(&x, &op)?;
    let a = SensingEnsemble::new(cfg.acquisition.measurements, op.output_len(), cfg.seeds.sensing_seed(trial));
    let proj = a.project(&z)?;
    let tau = choose_threshold(&proj, cfg.acquisition.threshold)?;
    let phi = a.matrix() * op.matrix();

    let points: Vec<Option<f64>> = match cfg.kind {
        ExperimentKind::NoiseSweep => cfg.acquisition.input_snr_db.iter().map(|&v| Some(v)).collect(),
        _ => vec![None],
    };
    let margins: Vec<f64> = proj.iter().map(|p| p - tau).collect();
    let mut out = UnitOutput::default();
    out.signals.push(SignalDump {
        name: format!("truth_{label}_{seed}"),
        grid: cfg.signal.grid,
        values: truth.clone(),
    });
    for (k, db) in points.into_iter().enumerate() {
        let y = match db {
            None => encode(&z, &a, tau)?,
            Some(db) => {
                let noise = NoiseSpec { sigma: calibrate_sigma(&margins, db), seed: cfg.seeds.noise_seed(trial, k) };
                encode_noisy(&z, &a, tau, noise)?
            }
        };
        let flips = y.encoder.as_ref().map(|e| e.flips);
        let mut row = MetricRow {
            kernel: label.clone(),
            trial,
            seed,
            input_snr_db: db,
            method: "bsr",
            status: "ok".into(),
            report: failed_report(&truth),
            flips,
            degenerate_patches: 0,
            failed_patches: 0,
            support_matches_oracle: None,
        };
        match bsr_recover(phi.as_ref(), &y.signs, &cfg.solver) {
            Ok(r) => {
                row.report = evaluate(&truth, &r.x);
                out.iterations.extend(r.history.iter().map(|h| IterationRow {
                    kernel: label.clone(),
                    seed,
                    input_snr_db: db,
                    iteration: h.iteration,
                    weighted_l1: h.weighted_l1,
                    surrogate: h.surrogate,
                    support_size: h.support_size,
                    slack_total: h.slack_total,
                    tau: h.tau,
                    recon_snr_db: iterate_snr(&truth, &h.x),
                }));
                out.signals.push(SignalDump {
                    name: format!("estimate_{label}_{seed}{}", snr_tag(db)),
                    grid: cfg.signal.grid,
                    values: r.x,
                });
            }
            Err(e) => row.status = format!("failed: {e}"),
        }
        out.metrics.push(row);
    }
    Ok(out)
}

fn image_scene(
    cfg: &ExperimentConfig,
    kernel: &KernelParams,
    trial: usize,
) -> Result<(SpikeTrain, Image, Image), HarnessError> {
    let x = make_spike_train(cfg.signal.grid, cfg.signal.spikes, cfg.seeds.signal_seed(trial), cfg.signal.amplitude)?;
    let xi = Image::from_spikes(&x)?;
    let z = blur_image(&xi, &kernel.build()?)?;
    Ok((x, xi, z))
}

fn fixed_threshold(cfg: &ExperimentConfig) -> Result<f64, HarnessError> {
    match cfg.acquisition.threshold {
        ThresholdPolicy::Fixed(t) => Ok(t),
        ThresholdPolicy::Median => {
            Err(HarnessError::field("acquisition.threshold", "image experiments need a fixed threshold"))
        }
    }
}

fn image_unit(cfg: &ExperimentConfig, kernel: &KernelParams, trial: usize) -> Result<UnitOutput, HarnessError> {
    let seed = cfg.seeds.signal_seed(trial);
    let label = kernel.label();
    let patch = cfg.acquisition.patch.expect("validated");
    let (x, xi, z) = image_scene(cfg, kernel, trial)?;
    let p = kernel_size(kernel);
    let grid = PatchGrid::new(xi.rows, xi.cols, patch.side, p)?;
    let op = build_patch_operator(&kernel.build()?, patch.side)?;
    let m = cfg.acquisition.measurements;
    let base = cfg.seeds.sensing_seed(trial);
    let ys = acquire_image(&z, &grid, m, fixed_threshold(cfg)?, base, patch.sensing)?;
    let rec = recover_image(&ys, &grid, &op, &cfg.solver, patch.scale, 1)?;

    let mut out = UnitOutput::default();
    let failed: Vec<String> = rec
        .failed()
        .map(|o| match &o.status {
            PatchStatus::Failed(msg) => format!("({},{}) {msg}", o.origin.row, o.origin.col),
            _ => unreachable!(),
        })
        .collect();
    let mut bsr = MetricRow {
        kernel: label.clone(),
        trial,
        seed,
        input_snr_db: None,
        method: "bsr",
        status: if failed.is_empty() { "ok".into() } else { format!("failed tiles: {}", failed.join("; ")) },
        report: evaluate(&xi.data, &rec.image.data),
        flips: None,
        degenerate_patches: rec.patches.iter().filter(|o| matches!(o.status, PatchStatus::Degenerate { .. })).count(),
        failed_patches: failed.len(),
        support_matches_oracle: None,
    };
    out.signals.push(SignalDump {
        name: format!("truth_{label}_{seed}"),
        grid: cfg.signal.grid,
        values: xi.data.clone(),
    });
    out.signals.push(SignalDump {
        name: format!("estimate_{label}_{seed}"),
        grid: cfg.signal.grid,
        values: rec.image.data.clone(),
    });

    if cfg.kind == ExperimentKind::OracleCompare {
        let mut oracle = MetricRow {
            method: "oracle",
            status: "ok".into(),
            degenerate_patches: 0,
            failed_patches: 0,
            ..bsr.clone()
        };
        match oracle_recover_image(&z, &grid, &op, m, base, patch.sensing, &cfg.solver.lp) {
            Ok(img) => {
                oracle.report = evaluate(&xi.data, &img.data);
                let s = x.len();
                let same = top_s_support(&rec.image.data, s) == top_s_support(&img.data, s);
                bsr.support_matches_oracle = Some(same);
                oracle.support_matches_oracle = Some(same);
                out.signals.push(SignalDump {
                    name: format!("oracle_{label}_{seed}"),
                    grid: cfg.signal.grid,
                    values: img.data,
                });
            }
            Err(e) => {
                oracle.status = format!("failed: {e}");
                oracle.report = failed_report(&xi.data);
            }
        }
        out.metrics.push(bsr);
        out.metrics.push(oracle);
    } else {
        out.metrics.push(bsr);
    }
    Ok(out)
}

/// Runs every (kernel, trial) pair of the config on up to `jobs` threads.
/// Outputs are assembled in (kernel, trial) order.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<RunOutput, HarnessError> {
    config.validate()?;
    let start = Instant::now();
    let units: Vec<(usize, usize)> =
        (0..config.kernels.len()).flat_map(|k| (0..config.seeds.trials).map(move |t| (k, t))).collect();
    let results = par_map(&units, jobs, |&(k, t)| {
        let kernel = &config.kernels[k];
        if config.is_image() {
            image_unit(config, kernel, t)
        } else {
            line_unit(config, kernel, t)
        }
    });
    let mut output = RunOutput {
        config: config.clone(),
        config_hash: config.hash(),
        metrics: Vec::new(),
        iterations: Vec::new(),
        signals: Vec::new(),
        wall_time: Duration::ZERO,
        jobs,
    };
    for r in results {
        let u = r?;
        output.metrics.extend(u.metrics);
        output.iterations.extend(u.iterations);
        output.signals.extend(u.signals);
    }
    output.wall_time = start.elapsed();
    Ok(output)
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    File::create(path).and_then(|mut f| f.write_all(text.as_bytes())).map_err(|e| HarnessError::io(path, e))
}

fn opt_db(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    config_hash: &'a str,
    crate_version: &'a str,
    rng: &'a str,
    signal_seeds: Vec<u64>,
    sensing_seeds: Vec<u64>,
    noise_seed_base: u64,
    jobs: usize,
    wall_time_s: f64,
}

/// Writes the bundle under `dir`. Only `manifest.json` (wall time, job
/// count) differs between reruns of one config.
pub fn write_bundle(output: &RunOutput, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let cfg = &output.config;
    let hash = &output.config_hash;

    let mut csv = format!(
        "experiment,config_hash,seed,kernel,input_snr_db,method,status,{},flips,degenerate_patches,failed_patches,support_matches_oracle\n",
        EvalReport::CSV_HEADER
    );
    for r in &output.metrics {
        csv += &format!(
            "{},{hash},{},{},{},{},\"{}\",{},{},{},{},{}\n",
            cfg.name,
            r.seed,
            r.kernel,
            opt_db(r.input_snr_db),
            r.method,
            r.status.replace('"', "'"),
            r.report.csv_fields(),
            r.flips.map(|f| f.to_string()).unwrap_or_default(),
            r.degenerate_patches,
            r.failed_patches,
            r.support_matches_oracle.map(|b| b.to_string()).unwrap_or_default(),
        );
    }
    write_text(&dir.join("metrics.csv"), &csv)?;

    if !cfg.is_image() {
        let mut csv = String::from(
            "experiment,config_hash,seed,kernel,input_snr_db,iteration,weighted_l1,surrogate,support_size,slack_total,tau,recon_snr_db\n",
        );
        for r in &output.iterations {
            csv += &format!(
                "{},{hash},{},{},{},{},{},{},{},{},{},{}\n",
                cfg.name,
                r.seed,
                r.kernel,
                opt_db(r.input_snr_db),
                r.iteration,
                r.weighted_l1,
                r.surrogate,
                r.support_size,
                r.slack_total,
                r.tau,
                csv_db(r.recon_snr_db)
            );
        }
        write_text(&dir.join("iterations.csv"), &csv)?;
    }

    let signals = dir.join("signals");
    for s in &output.signals {
        write_signal_csv(&signals.join(format!("{}.csv", s.name)), &s.values)?;
        if let Grid::Image { rows, cols } = s.grid {
            let img = Image { rows, cols, data: s.values.clone() };
            write_pgm(&signals.join(format!("{}.pgm", s.name)), &img)?;
            write_hinton_csv(&signals.join(format!("{}_hinton.csv", s.name)), &img)?;
        }
    }

    write_text(&dir.join("config.json"), &cfg.to_json())?;
    let trials = 0..cfg.seeds.trials;
    let manifest = Manifest {
        experiment: &cfg.name,
        config_hash: hash,
        crate_version: env!("CARGO_PKG_VERSION"),
        rng: "ChaCha8 (rand_chacha), seeded per draw",
        signal_seeds: trials.clone().map(|t| cfg.seeds.signal_seed(t)).collect(),
        sensing_seeds: trials.map(|t| cfg.seeds.sensing_seed(t)).collect(),
        noise_seed_base: cfg.seeds.noise,
        jobs: output.jobs,
        wall_time_s: output.wall_time.as_secs_f64(),
    };
    write_text(&dir.join("manifest.json"), &serde_json::to_string_pretty(&manifest).expect("manifest serializes"))
}

#[derive(Debug, Clone)]
pub struct GeneratedTrial {
    pub truth: Vec<f64>,
    /// With encoder-private fields attached.
    pub measurements: Vec<BinaryMeasurements>,
}

/// Signal and measurements of one trial with the first kernel (and the first
/// SNR point of a noise sweep). With `out`, writes `truth.csv` (plus PGM and
/// Hinton CSV for images), `measurements.bsr`, the encoder-private
/// `encoder.json` sidecar and `config.json`.
pub fn generate(config: &ExperimentConfig, trial: usize, out: Option<&Path>) -> Result<GeneratedTrial, HarnessError> {
    config.validate()?;
    let kernel = &config.kernels[0];
    let (truth, measurements) = if config.is_image() {
        let patch = config.acquisition.patch.expect("validated");
        let (_, xi, z) = image_scene(config, kernel, trial)?;
        let grid = PatchGrid::new(xi.rows, xi.cols, patch.side, kernel_size(kernel))?;
        let ys = acquire_image(
            &z,
            &grid,
            config.acquisition.measurements,
            fixed_threshold(config)?,
            config.seeds.sensing_seed(trial),
            patch.sensing,
        )?;
        (xi.data, ys)
    } else {
        let x = make_spike_train(
            config.signal.grid,
            config.signal.spikes,
            config.seeds.signal_seed(trial),
            config.signal.amplitude,
        )?;
        let op = build_convolution_matrix(&kernel.build()?, x.grid().cells())?;
        let z = apply_blur(&x, &op)?;
        let a =
            SensingEnsemble::new(config.acquisition.measurements, op.output_len(), config.seeds.sensing_seed(trial));
        let proj = a.project(&z)?;
        let tau = choose_threshold(&proj, config.acquisition.threshold)?;
        let y = match (config.kind, config.acquisition.input_snr_db.first()) {
            (ExperimentKind::NoiseSweep, Some(&db)) => {
                let margins: Vec<f64> = proj.iter().map(|p| p - tau).collect();
                let noise = NoiseSpec { sigma: calibrate_sigma(&margins, db), seed: config.seeds.noise_seed(trial, 0) };
                encode_noisy(&z, &a, tau, noise)?
            }
            _ => encode(&z, &a, tau)?,
        };
        (x.to_dense(), vec![y])
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        write_signal_csv(&dir.join("truth.csv"), &truth)?;
        if let Grid::Image { rows, cols } = config.signal.grid {
            let img = Image { rows, cols, data: truth.clone() };
            write_pgm(&dir.join("truth.pgm"), &img)?;
            write_hinton_csv(&dir.join("truth_hinton.csv"), &img)?;
        }
        let path = dir.join("measurements.bsr");
        let file = File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
        write_bitstream(std::io::BufWriter::new(file), &measurements)?;
        let sidecar = serde_json::to_string_pretty(&Sidecar::from_records(&measurements)).expect("sidecar serializes");
        write_text(&dir.join("encoder.json"), &sidecar)?;
        write_text(&dir.join("config.json"), &config.to_json())?;
    }
    Ok(GeneratedTrial { truth, measurements })
}

/// Decodes a bitstream file with the config's first kernel. Sensing
/// matrices are regenerated from the seeds stored in the stream.
pub fn recover_file(config: &ExperimentConfig, path: &Path, jobs: usize) -> Result<Vec<f64>, HarnessError> {
    config.validate()?;
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let records = read_bitstream(std::io::BufReader::new(file))?;
    let kernel = config.kernels[0].build()?;
    match config.signal.grid {
        Grid::Line(n) => {
            let [y] = records.as_slice() else {
                return Err(HarnessError::Format(format!("expected one record, found {}", records.len())));
            };
            let op = build_convolution_matrix(&kernel, n)?;
            let a = SensingEnsemble::new(y.len(), op.output_len(), y.sensing_seed);
            let phi = a.matrix() * op.matrix();
            Ok(bsr_recover(phi.as_ref(), &y.signs, &config.solver)?.x)
        }
        Grid::Image { rows, cols } => {
            let patch = config.acquisition.patch.expect("validated");
            let grid = PatchGrid::new(rows, cols, patch.side, kernel.size())?;
            let op = build_patch_operator(&kernel, patch.side)?;
            Ok(recover_image(&records, &grid, &op, &config.solver, patch.scale, jobs)?.image.data)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_budgets() {
        let cfg = ExperimentConfig::preset("fig1").unwrap();
        assert_eq!(bit_budget_report(&cfg).unwrap(), (450, 4800));

        let mut cfg = ExperimentConfig::preset("table1-desk").unwrap();
        assert_eq!(bit_budget_report(&cfg).unwrap(), (16 * 512, 16 * 64 * 64));
        cfg.signal.grid = Grid::square(256);
        assert_eq!(bit_budget_report(&cfg).unwrap(), (256 * 512, 16 * 256 * 256));

        cfg.acquisition.measurements = 0;
        assert!(bit_budget_report(&cfg).is_err());
    }

    #[test]
    fn small_line_run_is_reproducible() {
        let mut cfg = ExperimentConfig::preset("fig1").unwrap();
        cfg.signal.grid = Grid::Line(40);
        cfg.signal.spikes = 2;
        cfg.kernels = vec![KernelParams::Sinc { length: 11, cutoff: 0.25 }];
        cfg.acquisition.measurements = 120;
        cfg.solver.iterations = 3;
        cfg.seeds.trials = 2;
        let a = run_experiment(&cfg, 2).unwrap();
        let b = run_experiment(&cfg, 1).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.metrics.len(), 2);
        assert_eq!(a.iterations.len(), 6);

        let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        write_bundle(&a, da.path()).unwrap();
        write_bundle(&b, db.path()).unwrap();
        for f in ["metrics.csv", "iterations.csv", "config.json", "signals/truth_sinc-11-0.25_0.csv"] {
            assert_eq!(std::fs::read(da.path().join(f)).unwrap(), std::fs::read(db.path().join(f)).unwrap(), "{f}");
        }
        let metrics = std::fs::read_to_string(da.path().join("metrics.csv")).unwrap();
        assert!(metrics.lines().skip(1).all(|l| l.contains(&a.config_hash)));
    }

    #[test]
    fn generate_then_recover() {
        let mut cfg = ExperimentConfig::preset("fig1").unwrap();
        cfg.signal.grid = Grid::Line(40);
        cfg.signal.spikes = 2;
        cfg.kernels = vec![KernelParams::Sinc { length: 11, cutoff: 0.25 }];
        cfg.acquisition.measurements = 120;
        cfg.solver.iterations = 3;
        let dir = tempfile::tempdir().unwrap();
        let g = generate(&cfg, 0, Some(dir.path())).unwrap();
        assert!(g.measurements[0].encoder.is_some());
        let xhat = recover_file(&cfg, &dir.path().join("measurements.bsr"), 1).unwrap();
        assert_eq!(xhat.len(), 40);
        assert!((xhat.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
