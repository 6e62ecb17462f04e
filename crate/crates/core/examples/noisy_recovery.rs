//! Slack-relaxed recovery from noisy signs. Usage: noisy_recovery [snr_db] [beta]

use bsr::acquisition::{calibrate_sigma, encode_noisy, NoiseSpec, SensingEnsemble};
use bsr::metrics::evaluate;
use bsr::signal::{apply_blur, build_convolution_matrix, make_gaussian_line, make_spike_train, AmplitudeLaw, Grid};
use bsr::solver::{bsr_recover, BsrConfig, BsrMode};

fn main() {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<f64>().expect("numeric argument"));
    let db = args.next().unwrap_or(15.0);
    let beta = args.next().unwrap_or(BsrMode::DEFAULT_BETA);

    let x = make_spike_train(Grid::Line(200), 6, 2, AmplitudeLaw::Uniform { low: 1.0, high: 5.0 }).unwrap();
    let h = build_convolution_matrix(&make_gaussian_line(101, 1.0).unwrap(), 200).unwrap();
    let z = apply_blur(&x, &h).unwrap();
    let a = SensingEnsemble::new(600, z.len(), 1002);
    let tau = -0.1;
    let margins: Vec<f64> = a.project(&z).unwrap().iter().map(|p| p - tau).collect();
    let noise = NoiseSpec { sigma: calibrate_sigma(&margins, db), seed: 11 };
    let y = encode_noisy(&z, &a, tau, noise).unwrap();

    let phi = a.matrix() * h.matrix();
    let r = bsr_recover(phi.as_ref(), &y.signs, &BsrConfig::noisy(8, beta)).unwrap();
    let ev = evaluate(&x.to_dense(), &r.x);
    let last = r.history.last().unwrap();
    println!(
        "input {db} dB ({} flips), β = {beta}: recon SNR {:.2} dB, TPR {:.2}, total slack {:.2}",
        y.encoder.unwrap().flips,
        ev.recon_snr_db,
        ev.tpr,
        last.slack_total
    );
}
