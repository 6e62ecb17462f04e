//! Noiseless recovery of six spikes from 450 sign measurements, with the
//! reconstruction SNR of every reweighted iterate.

use bsr::acquisition::{encode, SensingEnsemble};
use bsr::metrics::{evaluate, iterate_snr};
use bsr::signal::{apply_blur, build_convolution_matrix, make_sinc_kernel, make_spike_train, AmplitudeLaw, Grid};
use bsr::solver::{bsr_recover_with, BsrConfig};

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let x = make_spike_train(Grid::Line(200), 6, seed, AmplitudeLaw::Uniform { low: 1.0, high: 5.0 }).unwrap();
    let truth = x.to_dense();
    let h = build_convolution_matrix(&make_sinc_kernel(101, 0.25).unwrap(), 200).unwrap();
    let z = apply_blur(&x, &h).unwrap();
    let a = SensingEnsemble::new(450, z.len(), 1000 + seed);
    let y = encode(&z, &a, -0.1).unwrap();

    let phi = a.matrix() * h.matrix();
    let r = bsr_recover_with(phi.as_ref(), &y.signs, &BsrConfig::noiseless(10), |rec| {
        println!(
            "iteration {:2}: support {:3}, τ̂ {:+.4}, SNR {:6.2} dB",
            rec.iteration,
            rec.support_size,
            rec.tau,
            iterate_snr(&truth, &rec.x)
        );
    })
    .unwrap();

    let ev = evaluate(&truth, &r.x);
    println!("TPR {} recon SNR {:.2} dB, τ̂/‖x̂‖ = {:+.5}", ev.tpr, ev.recon_snr_db, r.tau);
    println!("true support      {:?}", x.support());
    println!("recovered support {:?}", bsr::metrics::top_s_support(&r.x, 6));
}
