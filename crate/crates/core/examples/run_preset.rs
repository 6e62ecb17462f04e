//! Runs a preset with fewer trials and writes its artifact bundle.
//! Usage: run_preset [preset] [trials] [out_dir]

use std::path::PathBuf;

use bsr::harness::{bit_budget_report, run_experiment, write_bundle, ExperimentConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "fig1".into());
    let trials = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join(format!("bsr-{name}")));

    let mut cfg = ExperimentConfig::preset(&name).expect("known preset");
    cfg.seeds.trials = trials;
    let (one_bit, full) = bit_budget_report(&cfg).unwrap();
    println!("{name} [{}]: {one_bit} one-bit vs {full} 16-bit storage bits", cfg.hash());

    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let output = run_experiment(&cfg, jobs).unwrap();
    for r in &output.metrics {
        println!(
            "{} seed {} {}{}: TPR {} SNR1 {:.2} recon {:.2} [{}]",
            r.kernel,
            r.seed,
            r.method,
            r.input_snr_db.map(|v| format!(" @{v} dB")).unwrap_or_default(),
            r.report.tpr,
            r.report.snr1_db,
            r.report.recon_snr_db,
            r.status
        );
    }
    write_bundle(&output, &out).unwrap();
    println!("bundle in {} ({:.1} s)", out.display(), output.wall_time.as_secs_f64());
}
