//! Location and amplitude metrics for recoveries that are only determined up
//! to a positive scale.
//!
//! Amplitude metrics are computed after the least-squares alignment
//! `c* = ⟨x, x̂⟩ / ‖x̂‖²`. Exact matches give `+∞` or `−∞` dB; CSV output
//! writes those as `±1e9` together with a flag column.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub const DB_SENTINEL: f64 = 1e9;

/// Indices of the `s` largest magnitudes, ties to the lower index, skipping
/// entries at or below `1e-8 · ‖x̂‖∞`. Returned in increasing order.
pub fn top_s_support(xhat: &[f64], s: usize) -> Vec<usize> {
    let peak = xhat.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-8 * peak;
    let mut idx: Vec<usize> = (0..xhat.len()).filter(|&i| xhat[i].abs() > floor).collect();
    idx.sort_by(|&a, &b| xhat[b].abs().total_cmp(&xhat[a].abs()).then(a.cmp(&b)));
    idx.truncate(s);
    idx.sort_unstable();
    idx
}

/// `|S ∩ Ŝ| / |S|`.
pub fn tpr(truth: &[usize], estimate: &[usize]) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let est: BTreeSet<usize> = estimate.iter().copied().collect();
    let hits = truth.iter().collect::<BTreeSet<_>>().into_iter().filter(|i| est.contains(i)).count();
    hits as f64 / truth.len() as f64
}

/// Least-squares scale `c*` and `c*·x̂`. A zero estimate aligns with `c* = 0`.
pub fn align_scale(x: &[f64], xhat: &[f64]) -> (Vec<f64>, f64) {
    let energy: f64 = xhat.iter().map(|v| v * v).sum();
    let c = if energy > 0.0 { x.iter().zip(xhat).map(|(a, b)| a * b).sum::<f64>() / energy } else { 0.0 };
    (xhat.iter().map(|v| c * v).collect(), c)
}

fn db(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            f64::NAN
        } else {
            f64::INFINITY
        }
    } else {
        10.0 * (num / den).log10()
    }
}

/// `10·log10(‖x_{S∩Ŝ}‖² / ‖x_{S∩Ŝ} − x̂_{S∩Ŝ}‖²)`; `−∞` for an empty
/// intersection.
pub fn snr1(x: &[f64], xhat_aligned: &[f64], truth: &[usize], estimate: &[usize]) -> f64 {
    let est: BTreeSet<usize> = estimate.iter().copied().collect();
    let common: BTreeSet<usize> = truth.iter().copied().filter(|i| est.contains(i)).collect();
    if common.is_empty() {
        return f64::NEG_INFINITY;
    }
    let num: f64 = common.iter().map(|&i| x[i] * x[i]).sum();
    let den: f64 = common.iter().map(|&i| (x[i] - xhat_aligned[i]).powi(2)).sum();
    db(num, den)
}

/// `10·log10(‖x̂ − x̂_Ŝ‖² / ‖x‖²)`: energy off the retained support.
pub fn relative_error(x: &[f64], xhat_aligned: &[f64], estimate: &[usize]) -> f64 {
    let est: BTreeSet<usize> = estimate.iter().copied().collect();
    let spurious: f64 = xhat_aligned.iter().enumerate().filter(|(i, _)| !est.contains(i)).map(|(_, v)| v * v).sum();
    let energy: f64 = x.iter().map(|v| v * v).sum();
    if spurious == 0.0 {
        return f64::NEG_INFINITY;
    }
    10.0 * (spurious / energy).log10()
}

/// `10·log10(‖x‖² / ‖x − x̂‖²)`.
pub fn recon_snr(x: &[f64], xhat_aligned: &[f64]) -> f64 {
    let num: f64 = x.iter().map(|v| v * v).sum();
    let den: f64 = x.iter().zip(xhat_aligned).map(|(a, b)| (a - b).powi(2)).sum();
    db(num, den)
}

/// Reconstruction SNR of an unnormalized iterate: scaled to unit norm, then
/// aligned to the truth.
pub fn iterate_snr(truth: &[f64], iterate: &[f64]) -> f64 {
    let norm = iterate.iter().map(|v| v * v).sum::<f64>().sqrt();
    let unit: Vec<f64> = if norm > 0.0 { iterate.iter().map(|v| v / norm).collect() } else { iterate.to_vec() };
    let (aligned, _) = align_scale(truth, &unit);
    recon_snr(truth, &aligned)
}

/// CSV form of a dB value: infinities become `±1e9`.
pub fn csv_db(v: f64) -> String {
    if v == f64::INFINITY {
        format!("{DB_SENTINEL:e}")
    } else if v == f64::NEG_INFINITY {
        format!("{:e}", -DB_SENTINEL)
    } else {
        format!("{v}")
    }
}

/// `finite`, `+inf`, `-inf` or `nan`.
pub fn db_flag(v: f64) -> &'static str {
    if v.is_finite() {
        "finite"
    } else if v == f64::INFINITY {
        "+inf"
    } else if v == f64::NEG_INFINITY {
        "-inf"
    } else {
        "nan"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tpr: f64,
    pub snr1_db: f64,
    pub re_db: f64,
    pub recon_snr_db: f64,
    pub s_used: usize,
    pub scale_factor: f64,
}

/// All metrics for an estimate against the true signal, keeping the `s`
/// dominant recovered entries where `s` is the true spike count.
pub fn evaluate(x: &[f64], xhat: &[f64]) -> EvalReport {
    assert_eq!(x.len(), xhat.len(), "truth and estimate lengths differ");
    let truth: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
    let s = truth.len();
    let estimate = top_s_support(xhat, s);
    let (aligned, c) = align_scale(x, xhat);
    EvalReport {
        tpr: tpr(&truth, &estimate),
        snr1_db: snr1(x, &aligned, &truth, &estimate),
        re_db: relative_error(x, &aligned, &estimate),
        recon_snr_db: recon_snr(x, &aligned),
        s_used: estimate.len(),
        scale_factor: c,
    }
}

impl EvalReport {
    pub const CSV_HEADER: &'static str =
        "tpr,snr1_db,snr1_flag,re_db,re_flag,recon_snr_db,recon_snr_flag,s_used,scale_factor";

    pub fn csv_fields(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.tpr,
            csv_db(self.snr1_db),
            db_flag(self.snr1_db),
            csv_db(self.re_db),
            db_flag(self.re_db),
            csv_db(self.recon_snr_db),
            db_flag(self.recon_snr_db),
            self.s_used,
            self.scale_factor
        )
    }
}
