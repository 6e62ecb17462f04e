use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bsr::harness::{
    bit_budget_report, generate, read_signal_csv, recover_file, run_experiment, write_bundle, write_signal_csv,
    ExperimentConfig, HarnessError, PRESETS,
};
use bsr::metrics::{evaluate, EvalReport};

#[derive(Parser)]
#[command(name = "bsr", version, about = "Point-source recovery from one-bit measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// JSON experiment config.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in config: fig1, table1-desk, fig2 or fig3.
    #[arg(long)]
    preset: Option<String>,
    /// Base seed: signal seeds start here, sensing at +1000, noise at +5000.
    #[arg(long)]
    seed: Option<u64>,
}

impl Source {
    fn load(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => ExperimentConfig::preset(name)?,
            (None, None) => {
                return Err(HarnessError::field(
                    "config",
                    format!("pass --config or --preset ({})", PRESETS.join(", ")),
                ))
            }
        };
        if let Some(s) = self.seed {
            cfg.seeds.signal = s;
            cfg.seeds.sensing = s.wrapping_add(1000);
            cfg.seeds.noise = s.wrapping_add(5000);
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write one trial's signal and its measurement bitstream.
    Generate {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "generated")]
        out: PathBuf,
    },
    /// Decode a measurement bitstream into a unit-norm estimate CSV.
    Recover {
        measurements: PathBuf,
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value = "estimate.csv")]
        out: PathBuf,
    },
    /// Score an estimate CSV against a truth CSV.
    Evaluate {
        truth: PathBuf,
        estimate: PathBuf,
        /// Write the metrics row here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every trial of an experiment and write the artifact bundle.
    Run {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Defaults to the config's output directory, then `runs/<name>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the one-bit and 16-bit storage budgets.
    Report {
        #[command(flatten)]
        source: Source,
    },
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Generate { source, out } => {
            let cfg = source.load()?;
            let g = generate(&cfg, 0, Some(&out))?;
            println!("wrote {} record(s) to {}", g.measurements.len(), out.display());
        }
        Command::Recover { measurements, source, jobs, out } => {
            let cfg = source.load()?;
            let xhat = recover_file(&cfg, &measurements, jobs)?;
            write_signal_csv(&out, &xhat)?;
            println!("wrote {}", out.display());
        }
        Command::Evaluate { truth, estimate, out } => {
            let x = read_signal_csv(&truth)?;
            let xhat = read_signal_csv(&estimate)?;
            if x.len() != xhat.len() {
                return Err(HarnessError::Format(format!("truth has {} samples, estimate {}", x.len(), xhat.len())));
            }
            let text = format!("{}\n{}\n", EvalReport::CSV_HEADER, evaluate(&x, &xhat).csv_fields());
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?,
                None => print!("{text}"),
            }
        }
        Command::Run { source, jobs, out } => {
            let cfg = source.load()?;
            let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("runs").join(&cfg.name));
            let output = run_experiment(&cfg, jobs)?;
            write_bundle(&output, &dir)?;
            let failed = output.metrics.iter().filter(|r| r.status != "ok").count();
            println!(
                "{}: {} rows in {:.1} s ({failed} with failures) -> {}",
                cfg.name,
                output.metrics.len(),
                output.wall_time.as_secs_f64(),
                dir.display()
            );
        }
        Command::Report { source } => {
            let cfg = source.load()?;
            let (one_bit, full) = bit_budget_report(&cfg)?;
            println!("one_bit_bits,full_precision_bits\n{one_bit},{full}");
        }
    }
    Ok(())
}
