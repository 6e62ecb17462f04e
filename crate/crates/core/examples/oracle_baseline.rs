//! Full-precision basis pursuit on the same sensing matrix, next to the
//! one-bit estimate.

use bsr::acquisition::{encode, SensingEnsemble};
use bsr::baselines::oracle_recover;
use bsr::lp::LpSettings;
use bsr::metrics::evaluate;
use bsr::signal::{apply_blur, build_convolution_matrix, make_sinc_kernel, make_spike_train, AmplitudeLaw, Grid};
use bsr::solver::{bsr_recover, BsrConfig};

fn main() {
    let x = make_spike_train(Grid::Line(100), 4, 9, AmplitudeLaw::Uniform { low: 1.0, high: 5.0 }).unwrap();
    let truth = x.to_dense();
    let h = build_convolution_matrix(&make_sinc_kernel(31, 0.25).unwrap(), 100).unwrap();
    let z = apply_blur(&x, &h).unwrap();
    let a = SensingEnsemble::new(130, z.len(), 5);
    let phi = a.matrix() * h.matrix();

    let y_fp = a.project(&z).unwrap();
    let oracle = oracle_recover(phi.as_ref(), &y_fp, &LpSettings::default()).unwrap();
    let one_bit = bsr_recover(phi.as_ref(), &encode(&z, &a, -0.1).unwrap().signs, &BsrConfig::noiseless(6)).unwrap();

    for (name, est) in [("oracle", &oracle), ("one-bit", &one_bit.x)] {
        let ev = evaluate(&truth, est);
        println!("{name:>8}: TPR {} recon SNR {:.2} dB", ev.tpr, ev.recon_snr_db);
    }
}
