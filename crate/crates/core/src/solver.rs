//! Binary super-resolution: iteratively reweighted ℓ1 over sign-consistency
//! linear programs.
//!
//! Iteration `p` solves
//!
//! ```text
//!     min  Σ λᵢ|xᵢ| (+ β Σ ξₖ)   s.t.  yₖ(φₖᵀx − τ) ≥ 1 (− ξₖ),  ξ ≥ 0
//! ```
//!
//! in epigraph form over `[x | t | τ | ξ]`, then sets `λᵢ = 1/(|x̂ᵢ| + ε)`.
//! The first solve uses unit weights. After the last solve `(x̂, τ̂)` are
//! divided by `‖x̂‖₂`.

use std::io::Write;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{solve_lp, LinearProgram, LpError, LpSettings, LpStatus, VarBounds};

#[derive(Debug, Error)]
pub enum BsrError {
    #[error("sign constraints are infeasible at iteration {iteration}: {reason}")]
    InfeasibleSigns { iteration: usize, reason: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("linear program failed at iteration {iteration}: {source}")]
    Lp { iteration: usize, source: LpError },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BsrMode {
    Noiseless,
    /// Slack-relaxed sign constraints with penalty `β` per unit of slack.
    /// Larger `β` suits cleaner measurements.
    Noisy {
        beta: f64,
    },
}

impl BsrMode {
    pub const DEFAULT_BETA: f64 = 0.02;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EpsilonRule {
    /// `ε = factor · ‖x̂⁽⁰⁾‖∞`, fixed after the first solve.
    RelativeToFirst(f64),
    Absolute(f64),
}

impl Default for EpsilonRule {
    fn default() -> Self {
        EpsilonRule::RelativeToFirst(1e-3)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsrConfig {
    pub iterations: usize,
    pub epsilon: EpsilonRule,
    pub mode: BsrMode,
    #[serde(skip)]
    pub lp: LpSettings,
}

impl BsrConfig {
    pub fn noiseless(iterations: usize) -> Self {
        Self { iterations, epsilon: EpsilonRule::default(), mode: BsrMode::Noiseless, lp: LpSettings::default() }
    }

    pub fn noisy(iterations: usize, beta: f64) -> Self {
        Self { mode: BsrMode::Noisy { beta }, ..Self::noiseless(iterations) }
    }

    fn validate(&self) -> Result<(), BsrError> {
        if self.iterations == 0 {
            return Err(BsrError::InvalidInput("at least one iteration is required".into()));
        }
        if let BsrMode::Noisy { beta } = self.mode {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(BsrError::InvalidInput(format!("β must be positive, got {beta}")));
            }
        }
        let eps = match self.epsilon {
            EpsilonRule::RelativeToFirst(f) | EpsilonRule::Absolute(f) => f,
        };
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(BsrError::InvalidInput(format!("ε parameter must be positive, got {eps}")));
        }
        Ok(())
    }
}

/// One outer iteration, before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub tau: f64,
    /// `‖Λ⁽ᵖ⁾x̂⁽ᵖ⁾‖₁` at this iteration's own weights.
    pub weighted_l1: f64,
    /// `Σξ`; zero in noiseless mode.
    pub slack_total: f64,
    pub surrogate: f64,
    pub support_size: usize,
    pub lp_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Irl1State {
    pub weights: Vec<f64>,
    pub iteration: usize,
    /// Set once the first solve has fixed it.
    pub epsilon: Option<f64>,
    pub history: Vec<IterationRecord>,
}

impl Irl1State {
    pub fn new(n: usize) -> Self {
        Self { weights: vec![1.0; n], iteration: 0, epsilon: None, history: Vec::new() }
    }

    fn reweight(&mut self, x: &[f64], rule: EpsilonRule) {
        let eps = *self.epsilon.get_or_insert_with(|| match rule {
            EpsilonRule::Absolute(e) => e,
            EpsilonRule::RelativeToFirst(f) => {
                let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                // An all-zero first solve cannot happen with mixed signs, but
                // keep the weights finite regardless.
                if peak > 0.0 {
                    f * peak
                } else {
                    f
                }
            }
        });
        for (w, xi) in self.weights.iter_mut().zip(x) {
            *w = 1.0 / (xi.abs() + eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsrResult {
    /// Unit ℓ2 norm.
    pub x: Vec<f64>,
    /// Threshold estimate on the scale of `x`.
    pub tau: f64,
    /// `‖x̂⁽ᴵ⁾‖₂`, the factor removed by normalization.
    pub scale: f64,
    pub epsilon: f64,
    pub history: Vec<IterationRecord>,
}

impl BsrResult {
    /// Pre-normalization estimate `(x̂⁽ᴵ⁾, τ̂⁽ᴵ⁾)`.
    pub fn raw(&self) -> (&[f64], f64) {
        let last = self.history.last().expect("at least one iteration");
        (&last.x, last.tau)
    }
}

/// `f₀(x) = Σ log(|xᵢ| + ε)`.
pub fn surrogate_objective(x: &[f64], eps: f64) -> f64 {
    x.iter().map(|v| (v.abs() + eps).ln()).sum()
}

/// Entries above `1e-4 · ‖x‖∞`.
pub fn support_size(x: &[f64]) -> usize {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    x.iter().filter(|v| v.abs() > 1e-4 * peak).count()
}

/// Column offsets of the epigraph layout `[x | t | τ | ξ]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LpLayout {
    pub n: usize,
    pub m: usize,
    pub slacks: bool,
}

impl LpLayout {
    pub fn x(&self, i: usize) -> usize {
        i
    }
    pub fn t(&self, i: usize) -> usize {
        self.n + i
    }
    pub fn tau(&self) -> usize {
        2 * self.n
    }
    pub fn xi(&self, k: usize) -> usize {
        2 * self.n + 1 + k
    }
    pub fn n_vars(&self) -> usize {
        2 * self.n + 1 + if self.slacks { self.m } else { 0 }
    }
}

fn check_signs(y: &[i8]) -> Result<(), BsrError> {
    if y.iter().any(|&s| s != 1 && s != -1) {
        return Err(BsrError::InvalidInput("signs must be ±1".into()));
    }
    if !(y.contains(&1) && y.contains(&-1)) {
        return Err(BsrError::InvalidInput("measurements must contain both signs".into()));
    }
    Ok(())
}

pub fn build_iteration_lp(
    phi: MatRef<'_, f64>,
    y: &[i8],
    weights: &[f64],
    mode: BsrMode,
) -> Result<LinearProgram, BsrError> {
    let (m, n) = (phi.nrows(), phi.ncols());
    if y.len() != m {
        return Err(BsrError::DimensionMismatch(format!("Φ has {m} rows but {} signs", y.len())));
    }
    if weights.len() != n {
        return Err(BsrError::DimensionMismatch(format!("Φ has {n} columns but {} weights", weights.len())));
    }
    let layout = LpLayout { n, m, slacks: matches!(mode, BsrMode::Noisy { .. }) };
    let nv = layout.n_vars();

    let mut c = vec![0.0; nv];
    for i in 0..n {
        c[layout.t(i)] = weights[i];
    }
    if let BsrMode::Noisy { beta } = mode {
        for k in 0..m {
            c[layout.xi(k)] = beta;
        }
    }

    let mut g = Mat::<f64>::zeros(2 * n + m, nv);
    for i in 0..n {
        g[(2 * i, layout.t(i))] = 1.0;
        g[(2 * i, layout.x(i))] = -1.0;
        g[(2 * i + 1, layout.t(i))] = 1.0;
        g[(2 * i + 1, layout.x(i))] = 1.0;
    }
    for k in 0..m {
        let row = 2 * n + k;
        let yk = f64::from(y[k]);
        for i in 0..n {
            g[(row, layout.x(i))] = yk * phi[(k, i)];
        }
        g[(row, layout.tau())] = -yk;
        if layout.slacks {
            g[(row, layout.xi(k))] = 1.0;
        }
    }
    let mut bounds = vec![VarBounds::FREE; nv];
    if layout.slacks {
        for b in bounds.iter_mut().skip(layout.xi(0)) {
            *b = VarBounds::NONNEGATIVE;
        }
    }
    let h = (0..2 * n).map(|_| 0.0).chain((0..m).map(|_| 1.0)).collect();
    LinearProgram::builder(c)
        .inequalities(g, h)
        .bounds(bounds)
        .build()
        .map_err(|e| BsrError::InvalidInput(e.to_string()))
}

/// Smallest total slack `Σξ` that makes the sign constraints satisfiable.
/// Zero (up to solver tolerance) exactly when the noiseless program is feasible.
pub fn sign_violation(phi: MatRef<'_, f64>, y: &[i8], lp: &LpSettings) -> Result<f64, BsrError> {
    let n = phi.ncols();
    let mut program = build_iteration_lp(phi, y, &vec![0.0; n], BsrMode::Noisy { beta: 1.0 })?;
    // Keep the otherwise cost-free x and τ bounded.
    let layout = LpLayout { n, m: phi.nrows(), slacks: true };
    let scale = 1e6;
    let mut bounds = program.bounds().to_vec();
    for j in 0..=layout.tau() {
        bounds[j] = VarBounds::new(-scale, scale);
    }
    program = LinearProgram::builder(program.objective().to_vec())
        .inequalities(program.inequality_matrix().to_owned(), program.inequality_rhs().to_vec())
        .bounds(bounds)
        .build()
        .map_err(|e| BsrError::InvalidInput(e.to_string()))?;
    let sol = solve_lp(&program, lp).map_err(|source| BsrError::Lp { iteration: 0, source })?;
    Ok(sol.objective_value)
}

/// One LP solve of the outer loop; returns `(x̂, τ̂, Σξ, LP iterations)`.
fn solve_iteration(
    phi: MatRef<'_, f64>,
    y: &[i8],
    state: &Irl1State,
    config: &BsrConfig,
) -> Result<(Vec<f64>, f64, f64, usize), BsrError> {
    let n = phi.ncols();
    let program = build_iteration_lp(phi, y, &state.weights, config.mode)?;
    let iteration = state.iteration;
    let sol = match solve_lp(&program, &config.lp) {
        Ok(sol) => sol,
        Err(source) if config.mode == BsrMode::Noiseless => {
            // A breakdown on an infeasible instance is reported as such when
            // the slack program confirms it.
            let violation = sign_violation(phi, y, &config.lp)?;
            if violation > 1e-6 {
                return Err(BsrError::InfeasibleSigns {
                    iteration,
                    reason: format!("minimum total slack {violation:.3e}"),
                });
            }
            return Err(BsrError::Lp { iteration, source });
        }
        Err(source) => return Err(BsrError::Lp { iteration, source }),
    };
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(BsrError::InfeasibleSigns { iteration, reason: sol.reason.unwrap_or_default() })
        }
        LpStatus::Unbounded => {
            return Err(BsrError::Lp {
                iteration,
                source: LpError::Numerical("weighted ℓ1 program reported unbounded".into()),
            })
        }
    }
    let layout = LpLayout { n, m: phi.nrows(), slacks: matches!(config.mode, BsrMode::Noisy { .. }) };
    let x = sol.primal[..n].to_vec();
    let tau = sol.primal[layout.tau()];
    let slack = if layout.slacks { sol.primal[layout.xi(0)..].iter().sum() } else { 0.0 };
    Ok((x, tau, slack, sol.iterations))
}

/// Runs `config.iterations` reweighted solves. `observer` sees every record
/// as it is produced.
pub fn bsr_recover_with(
    phi: MatRef<'_, f64>,
    y: &[i8],
    config: &BsrConfig,
    mut observer: impl FnMut(&IterationRecord),
) -> Result<BsrResult, BsrError> {
    config.validate()?;
    check_signs(y)?;
    if phi.nrows() != y.len() {
        return Err(BsrError::DimensionMismatch(format!("Φ has {} rows but {} signs", phi.nrows(), y.len())));
    }
    if (0..phi.ncols()).any(|j| (0..phi.nrows()).any(|i| !phi[(i, j)].is_finite())) {
        return Err(BsrError::InvalidInput("Φ has non-finite entries".into()));
    }
    let n = phi.ncols();
    let mut state = Irl1State::new(n);
    for p in 0..config.iterations {
        state.iteration = p;
        let (x, tau, slack_total, lp_iterations) = solve_iteration(phi, y, &state, config)?;
        let weighted_l1 = state.weights.iter().zip(&x).map(|(w, v)| w * v.abs()).sum();
        state.reweight(&x, config.epsilon);
        let eps = state.epsilon.expect("set by reweight");
        let record = IterationRecord {
            iteration: p,
            surrogate: surrogate_objective(&x, eps),
            support_size: support_size(&x),
            x,
            tau,
            weighted_l1,
            slack_total,
            lp_iterations,
        };
        observer(&record);
        state.history.push(record);
    }

    let last = state.history.last().expect("iterations ≥ 1");
    let scale = last.x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(scale > 0.0) {
        return Err(BsrError::InvalidInput("final estimate is identically zero".into()));
    }
    Ok(BsrResult {
        x: last.x.iter().map(|v| v / scale).collect(),
        tau: last.tau / scale,
        scale,
        epsilon: state.epsilon.expect("set after the first solve"),
        history: state.history,
    })
}

pub fn bsr_recover(phi: MatRef<'_, f64>, y: &[i8], config: &BsrConfig) -> Result<BsrResult, BsrError> {
    bsr_recover_with(phi, y, config, |_| {})
}

/// `Φ = A H`.
pub fn sensing_operator(a: &Mat<f64>, h: &Mat<f64>) -> Mat<f64> {
    a * h
}

/// Per-iteration CSV. With `truth`, each iterate is normalized and aligned
/// to it before its reconstruction SNR is reported.
pub fn write_diagnostics_csv(
    mut out: impl Write,
    history: &[IterationRecord],
    truth: Option<&[f64]>,
) -> Result<(), BsrError> {
    writeln!(out, "iteration,weighted_l1,surrogate,support_size,slack_total,tau,recon_snr_db")?;
    for r in history {
        let snr = match truth {
            Some(t) => crate::metrics::csv_db(crate::metrics::iterate_snr(t, &r.x)),
            None => String::new(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.iteration, r.weighted_l1, r.surrogate, r.support_size, r.slack_total, r.tau, snr
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_sizes() {
        let phi = Mat::from_fn(1, 2, |_, j| j as f64 + 1.0);
        let lp = build_iteration_lp(phi.as_ref(), &[1], &[1.0, 1.0], BsrMode::Noiseless).unwrap();
        assert_eq!((lp.n_vars(), lp.n_inequalities()), (5, 5));

        let phi = Mat::from_fn(3, 2, |i, j| (i + j) as f64);
        let lp = build_iteration_lp(phi.as_ref(), &[1, -1, 1], &[1.0, 1.0], BsrMode::Noisy { beta: 0.5 }).unwrap();
        assert_eq!(lp.n_vars(), 8);
        for k in 0..3 {
            assert_eq!(lp.objective()[5 + k], 0.5);
            assert_eq!(lp.bounds()[5 + k], VarBounds::NONNEGATIVE);
        }
    }

    #[test]
    fn dimension_checks() {
        let phi = Mat::<f64>::zeros(2, 3);
        assert!(matches!(
            build_iteration_lp(phi.as_ref(), &[1], &[1.0; 3], BsrMode::Noiseless),
            Err(BsrError::DimensionMismatch(_))
        ));
        assert!(matches!(
            build_iteration_lp(phi.as_ref(), &[1, -1], &[1.0; 2], BsrMode::Noiseless),
            Err(BsrError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn all_equal_signs_rejected() {
        let phi = Mat::from_fn(3, 2, |i, j| (i * 2 + j) as f64);
        let err = bsr_recover(phi.as_ref(), &[1, 1, 1], &BsrConfig::noiseless(2)).unwrap_err();
        assert!(matches!(err, BsrError::InvalidInput(_)));
    }

    #[test]
    fn surrogate_values() {
        assert_eq!(surrogate_objective(&[0.0, 0.0], 1.0), 0.0);
        let e = std::f64::consts::E;
        assert!((surrogate_objective(&[e - 1.0, 0.0], 1.0) - 1.0).abs() < 1e-15);
        assert!((surrogate_objective(&[-(e - 1.0)], 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reweighting_rule() {
        let mut state = Irl1State::new(3);
        assert_eq!(state.weights, vec![1.0; 3]);
        state.reweight(&[2.0, -0.5, 0.0], EpsilonRule::RelativeToFirst(1e-3));
        let eps = 2e-3;
        assert_eq!(state.epsilon, Some(eps));
        assert_eq!(state.weights, vec![1.0 / (2.0 + eps), 1.0 / (0.5 + eps), 1.0 / eps]);
        // ε stays fixed after the first solve.
        state.reweight(&[10.0, 0.0, 0.0], EpsilonRule::RelativeToFirst(1e-3));
        assert_eq!(state.epsilon, Some(eps));
    }

    #[test]
    fn one_dimensional_threshold_problem() {
        // x scalar, φₖ = k: signs split at φ = 2.5 → x̂ > 0, τ̂/x̂ in (2, 3).
        let phi = Mat::from_fn(5, 1, |k, _| k as f64);
        let y = [-1, -1, -1, 1, 1];
        let r = bsr_recover(phi.as_ref(), &y, &BsrConfig::noiseless(3)).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-9);
        assert!(r.tau > 2.0 && r.tau < 3.0);
        let (raw_x, raw_tau) = r.raw();
        for k in 0..5 {
            let margin = f64::from(y[k]) * (k as f64 * raw_x[0] - raw_tau);
            assert!(margin >= 1.0 - 1e-6);
        }
    }
}
