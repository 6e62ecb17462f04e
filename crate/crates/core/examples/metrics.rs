//! Scale-aligned metrics. The estimate is only known up to a positive factor.

use bsr::metrics::{align_scale, evaluate, top_s_support};

fn main() {
    let x = [0.0, 4.0, 0.0, 0.0, 2.0, 0.0, 1.0, 0.0];
    let xhat = [0.01, 0.80, 0.0, 0.05, 0.41, 0.0, 0.19, 0.0];

    let (aligned, c) = align_scale(&x, &xhat);
    println!("c* = {c:.4}, aligned = {aligned:.3?}");
    println!("top-3 support {:?}", top_s_support(&xhat, 3));
    for scale in [1.0, 1e3] {
        let scaled: Vec<f64> = xhat.iter().map(|v| v * scale).collect();
        let ev = evaluate(&x, &scaled);
        println!(
            "×{scale}: TPR {} SNR1 {:.2} dB RE {:.2} dB recon {:.2} dB",
            ev.tpr, ev.snr1_db, ev.re_db, ev.recon_snr_db
        );
    }
    println!("{}\n{}", bsr::metrics::EvalReport::CSV_HEADER, evaluate(&x, &x).csv_fields());
}
