//! Acceptance suite. Each test prints one `[PASS]`/`[FAIL]` line and then
//! asserts it. Tests hold a common lock so that wall-clock budgets are not
//! distorted by each other.

mod common;

use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use bsr::acquisition::{encode, SensingEnsemble};
use bsr::baselines::oracle_recover_image;
use bsr::harness::{bit_budget_report, run_experiment, write_bundle, ExperimentConfig, RunOutput};
use bsr::lp::{solve_lp, verify_kkt, LpAlgorithm, LpSettings, LpStatus};
use bsr::metrics::{evaluate, top_s_support};
use bsr::patch::PatchGrid;
use bsr::signal::{
    apply_blur, blur_image, build_convolution_matrix, build_patch_operator, make_sinc_kernel, make_spike_train,
    AmplitudeLaw, Grid, Image,
};
use bsr::solver::{bsr_recover, sign_violation, BsrConfig, BsrError};
use common::{random_box_lp, vertex_oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static LOCK: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("[{}] criterion {id} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn preset_run(name: &'static str) -> &'static (RunOutput, f64) {
    static LINE: OnceLock<(RunOutput, f64)> = OnceLock::new();
    static NOISE: OnceLock<(RunOutput, f64)> = OnceLock::new();
    static IMAGES: OnceLock<(RunOutput, f64)> = OnceLock::new();
    let cell = match name {
        "fig1" => &LINE,
        "fig3" => &NOISE,
        "table1-desk" => &IMAGES,
        _ => unreachable!(),
    };
    cell.get_or_init(|| {
        let cfg = ExperimentConfig::preset(name).unwrap();
        let t0 = Instant::now();
        let out = run_experiment(&cfg, 1).unwrap();
        (out, t0.elapsed().as_secs_f64())
    })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    0.5 * (v[(k - 1) / 2] + v[k / 2])
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

#[test]
fn criterion_1_lp_against_vertex_enumeration() {
    let _g = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let t0 = Instant::now();
    let (mut worst_obj, mut worst_kkt, mut bad) = (0.0f64, 0.0f64, Vec::new());
    for k in 0..200u64 {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(0..=12);
        let lp = random_box_lp(10_000 + k, n, m);
        let oracle = vertex_oracle(&lp).expect("box-bounded and feasible by construction");
        let settings = if k % 2 == 0 {
            LpSettings::default()
        } else {
            LpSettings { algorithm: LpAlgorithm::Simplex, ..LpSettings::default() }
        };
        let sol = solve_lp(&lp, &settings).unwrap();
        if sol.status != LpStatus::Optimal {
            bad.push(k);
            continue;
        }
        worst_obj = worst_obj.max((sol.objective_value - oracle.objective).abs());
        worst_kkt = worst_kkt.max(verify_kkt(&lp, &sol));
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = bad.is_empty() && worst_obj <= 1e-6 && worst_kkt <= 1e-6 && secs < 10.0;
    report(
        1,
        "LP vs vertex oracle",
        pass,
        format!("200 LPs, max |Δobj| {worst_obj:.1e}, max KKT {worst_kkt:.1e}, non-optimal {bad:?}, {secs:.2} s"),
    );
}

#[test]
fn criterion_2_one_d_recovery() {
    let _g = serial();
    let (out, secs) = preset_run("fig1");
    let mut passed = 0;
    let mut detail = Vec::new();
    for row in &out.metrics {
        let snrs: Vec<f64> = out.iterations.iter().filter(|r| r.seed == row.seed).map(|r| r.recon_snr_db).collect();
        let worst_dip = snrs.windows(2).map(|w| w[0] - w[1]).fold(0.0f64, f64::max);
        let ok = row.status == "ok" && row.report.tpr == 1.0 && row.report.recon_snr_db >= 20.0 && worst_dip <= 1.0;
        passed += usize::from(ok);
        detail.push(format!(
            "seed {}: tpr {:.2} snr {:.1} dip {:.2}{}",
            row.seed,
            row.report.tpr,
            row.report.recon_snr_db,
            worst_dip,
            if ok { "" } else { " ✗" }
        ));
    }
    println!("  {}", detail.join("\n  "));
    report(
        2,
        "1-D recovery",
        passed >= 9 && *secs < 300.0,
        format!("{passed}/{} seeds (need 9), {secs:.1} s", out.metrics.len()),
    );
}

#[test]
fn criterion_3_desk_table_1() {
    let _g = serial();
    let (out, secs) = preset_run("table1-desk");
    let labels: Vec<String> = out.config.kernels.iter().map(|k| k.label()).collect();
    let mut snr1 = Vec::new();
    let mut re = Vec::new();
    let mut tpr = Vec::new();
    for l in &labels {
        let rows: Vec<_> = out.rows(l, "bsr").collect();
        tpr.push(rows.iter().map(|r| r.report.tpr).collect::<Vec<_>>());
        snr1.push(mean(rows.iter().map(|r| r.report.snr1_db)));
        re.push(mean(rows.iter().map(|r| r.report.re_db)));
        println!(
            "  {l}: mean tpr {:.3} snr1 {:.2} dB re {:.2} dB, failed tiles {}",
            mean(rows.iter().map(|r| r.report.tpr)),
            snr1.last().unwrap(),
            re.last().unwrap(),
            rows.iter().map(|r| r.failed_patches).sum::<usize>()
        );
    }
    let exact_52 = tpr[0].iter().filter(|&&t| t == 1.0).count();
    let tpr_94 = mean(tpr[2].iter().copied());
    let snr_down = snr1.windows(2).all(|w| w[1] < w[0]);
    let re_up = re.windows(2).all(|w| w[1] >= w[0]);
    let pass = exact_52 >= 9 && tpr_94 >= 0.9 && snr_down && re_up && *secs < 1800.0;
    report(
        3,
        "desk-scale image table",
        pass,
        format!(
            "TPR=1 on {exact_52}/10 for (5,2); mean TPR {tpr_94:.2} for (9,4); SNR1 {snr1:.2?} decreasing {snr_down}; RE {re:.2?} non-improving {re_up}; {secs:.0} s"
        ),
    );
}

#[test]
fn criterion_4_oracle_support() {
    let _g = serial();
    let (out, _) = preset_run("table1-desk");
    let cfg = &out.config;
    let kernel_params = cfg.kernels[0];
    let kernel = kernel_params.build().unwrap();
    let label = kernel_params.label();
    let patch = cfg.acquisition.patch.unwrap();
    let op = build_patch_operator(&kernel, patch.side).unwrap();
    let t0 = Instant::now();
    let mut agree = 0;
    for t in 0..cfg.seeds.trials {
        let seed = cfg.seeds.signal_seed(t);
        let x = make_spike_train(cfg.signal.grid, cfg.signal.spikes, seed, cfg.signal.amplitude).unwrap();
        let xi = Image::from_spikes(&x).unwrap();
        let z = blur_image(&xi, &kernel).unwrap();
        let grid = PatchGrid::new(xi.rows, xi.cols, patch.side, kernel.size()).unwrap();
        let oracle = oracle_recover_image(
            &z,
            &grid,
            &op,
            cfg.acquisition.measurements,
            cfg.seeds.sensing_seed(t),
            patch.sensing,
            &LpSettings::default(),
        )
        .unwrap();
        let name = format!("estimate_{label}_{seed}");
        let bsr = &out.signals.iter().find(|s| s.name == name).unwrap().values;
        let s = x.len();
        let same = top_s_support(bsr, s) == top_s_support(&oracle.data, s);
        agree += usize::from(same);
        println!(
            "  seed {seed}: supports equal {same}; oracle tpr {:.2} bsr tpr {:.2}",
            evaluate(&xi.data, &oracle.data).tpr,
            evaluate(&xi.data, bsr).tpr
        );
    }
    report(
        4,
        "oracle comparison",
        agree >= 8,
        format!(
            "BSR support equals oracle support on {agree}/{} seeds (need 8), oracle {:.0} s",
            cfg.seeds.trials,
            t0.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_5_noise_sweep() {
    let _g = serial();
    let (out, secs) = preset_run("fig3");
    let snrs = &out.config.acquisition.input_snr_db;
    let medians: Vec<f64> = snrs
        .iter()
        .map(|&db| {
            median(out.metrics.iter().filter(|r| r.input_snr_db == Some(db)).map(|r| r.report.recon_snr_db).collect())
        })
        .collect();
    let at15 = medians[snrs.iter().position(|&v| v == 15.0).unwrap()];
    // SNR points run from 30 dB down to 5 dB
    let worst_rise = medians.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
    let failures = out.metrics.iter().filter(|r| r.status != "ok").count();
    let pass = at15 >= 18.0 && worst_rise <= 1.0;
    report(
        5,
        "noise robustness",
        pass,
        format!(
            "median recon SNR {:?} dB at input {snrs:?} dB; at 15 dB {at15:.1} (need 18); worst rise {worst_rise:.2} dB; {failures} failed solves; {secs:.0} s",
            medians.iter().map(|v| (v * 10.0).round() / 10.0).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_6_invariants() {
    let _g = serial();
    let mut checks: Vec<(&str, bool)> = Vec::new();

    // encoder sign covariance under (z, τ) → (αz, ατ)
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut covariant = true;
    for trial in 0..20u64 {
        let z: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let tau = rng.random_range(-0.3..0.3);
        let a = SensingEnsemble::new(80, 50, trial);
        let y = encode(&z, &a, tau).unwrap().signs;
        for alpha in [1e-3, 0.5, 7.0, 1e4] {
            let zs: Vec<f64> = z.iter().map(|v| alpha * v).collect();
            covariant &= encode(&zs, &a, alpha * tau).unwrap().signs == y;
        }
    }
    checks.push(("encoder sign covariance", covariant));

    // unit norm of every line estimate
    let (fig1, _) = preset_run("fig1");
    let (fig3, _) = preset_run("fig3");
    let estimates: Vec<&[f64]> = [fig1, fig3]
        .iter()
        .flat_map(|o| o.signals.iter().filter(|s| s.name.starts_with("estimate_")).map(|s| s.values.as_slice()))
        .collect();
    let worst_norm =
        estimates.iter().map(|x| (x.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs()).fold(0.0f64, f64::max);
    checks.push(("unit-norm outputs", worst_norm <= 1e-9 && estimates.len() == 70));

    // metrics under positive rescaling
    let mut invariant = true;
    for s in fig1.signals.iter().filter(|s| s.name.starts_with("estimate_")) {
        let truth = &fig1.signals.iter().find(|t| t.name == s.name.replacen("estimate", "truth", 1)).unwrap().values;
        let base = evaluate(truth, &s.values);
        for c in [1e-4, 0.3, 12.0, 5e5] {
            let scaled: Vec<f64> = s.values.iter().map(|v| c * v).collect();
            let r = evaluate(truth, &scaled);
            let close = |a: f64, b: f64| a == b || (a - b).abs() <= 1e-9 * (1.0 + a.abs());
            invariant &= r.tpr == base.tpr
                && close(r.snr1_db, base.snr1_db)
                && close(r.re_db, base.re_db)
                && close(r.recon_snr_db, base.recon_snr_db);
        }
    }
    checks.push(("metric scale invariance", invariant));

    // byte-identical reruns
    let mut cfg = ExperimentConfig::preset("fig1").unwrap();
    cfg.seeds.trials = 2;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (d, jobs) in dirs.iter().zip([1, 2]) {
        write_bundle(&run_experiment(&cfg, jobs).unwrap(), d.path()).unwrap();
    }
    let mut files: Vec<_> = walk(dirs[0].path());
    files.retain(|p| !p.ends_with("manifest.json"));
    let identical = files.len() > 4
        && files.iter().all(|p| {
            let rel = p.strip_prefix(dirs[0].path()).unwrap();
            std::fs::read(p).unwrap() == std::fs::read(dirs[1].path().join(rel)).unwrap_or_default()
        });
    checks.push(("byte-identical reruns", identical));

    // flipped signs make the noiseless program infeasible, and BSR says so
    let kernel = make_sinc_kernel(5, 0.25).unwrap();
    let h = build_convolution_matrix(&kernel, 10).unwrap();
    let x = make_spike_train(Grid::Line(10), 2, 3, AmplitudeLaw::Uniform { low: 1.0, high: 5.0 }).unwrap();
    let z = apply_blur(&x, &h).unwrap();
    let a = SensingEnsemble::new(80, h.output_len(), 17);
    let phi = a.matrix() * h.matrix();
    let y = encode(&z, &a, -0.1).unwrap().signs;
    let simplex = LpSettings { algorithm: LpAlgorithm::Simplex, ..LpSettings::default() };
    let clean_feasible = bsr_recover(phi.as_ref(), &y, &BsrConfig::noiseless(3)).is_ok();
    let mut raised = clean_feasible;
    let margins: Vec<f64> = a.project(&z).unwrap().iter().map(|p| (p + 0.1).abs()).collect();
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&i, &j| margins[j].total_cmp(&margins[i]));
    for flips in [1, 2, 5] {
        let mut yf = y.clone();
        for &i in &order[..flips] {
            yf[i] = -yf[i];
        }
        let infeasible = sign_violation(phi.as_ref(), &yf, &simplex).unwrap() > 1e-6;
        let r = bsr_recover(phi.as_ref(), &yf, &BsrConfig::noiseless(3));
        raised &= infeasible && matches!(r, Err(BsrError::InfeasibleSigns { .. }));
    }
    checks.push(("noiseless infeasibility raised", raised));

    let pass = checks.iter().all(|c| c.1);
    let detail = checks.iter().map(|(n, ok)| format!("{n} {}", if *ok { "ok" } else { "FAILED" })).collect::<Vec<_>>();
    report(6, "invariants", pass, detail.join("; "));
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn criterion_7_bit_budget() {
    let _g = serial();
    let cfg = ExperimentConfig::preset("fig1").unwrap();
    let budget = bit_budget_report(&cfg).unwrap();
    report(7, "bit budget", budget == (450, 4800), format!("{budget:?} for the 1-D configuration"));
}
