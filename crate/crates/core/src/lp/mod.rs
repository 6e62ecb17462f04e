//! Dense linear programming.
//!
//! Every reconstruction path in this crate reduces to a linear program of the
//! form
//!
//! ```text
//!     minimize    cᵀv
//!     subject to  G v ≥ h
//!                 E v = b
//!                 l ≤ v ≤ u        (bounds may be infinite)
//! ```
//!
//! The main solver is a Mehrotra predictor-corrector interior-point method
//! working on the normal equations. A dense two-phase simplex is available as
//! a reference implementation for small problems.

mod dump;
mod ipm;
mod kkt;
mod normal;
mod simplex;

use faer::{Mat, MatRef};
use thiserror::Error;

pub use dump::{read_lp_text, write_lp_text};
pub use kkt::{kkt_residuals, verify_kkt, KktResiduals};

#[derive(Debug, Error)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("iteration limit reached after {iterations} iterations (KKT residual {residual:.3e})")]
    IterationLimit { iterations: usize, residual: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("failed to parse LP text: {0}")]
    Parse(String),
}

/// Lower and upper bound of a single variable. Either side may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarBounds {
    pub lower: f64,
    pub upper: f64,
}

impl VarBounds {
    pub const FREE: VarBounds = VarBounds { lower: f64::NEG_INFINITY, upper: f64::INFINITY };

    pub const NONNEGATIVE: VarBounds = VarBounds { lower: 0.0, upper: f64::INFINITY };

    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn has_lower(&self) -> bool {
        self.lower.is_finite()
    }

    pub fn has_upper(&self) -> bool {
        self.upper.is_finite()
    }
}

/// An immutable LP instance. Construct with [`LinearProgram::builder`].
#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    ineq_matrix: Mat<f64>,
    ineq_rhs: Vec<f64>,
    eq_matrix: Mat<f64>,
    eq_rhs: Vec<f64>,
    bounds: Vec<VarBounds>,
}

impl LinearProgram {
    /// Starts a problem with the given objective; all variables free, no constraints.
    pub fn builder(objective: Vec<f64>) -> LpBuilder {
        let n = objective.len();
        LpBuilder {
            objective,
            ineq_matrix: Mat::zeros(0, n),
            ineq_rhs: Vec::new(),
            eq_matrix: Mat::zeros(0, n),
            eq_rhs: Vec::new(),
            bounds: vec![VarBounds::FREE; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_inequalities(&self) -> usize {
        self.ineq_rhs.len()
    }

    pub fn n_equalities(&self) -> usize {
        self.eq_rhs.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn inequality_matrix(&self) -> MatRef<'_, f64> {
        self.ineq_matrix.as_ref()
    }

    pub fn inequality_rhs(&self) -> &[f64] {
        &self.ineq_rhs
    }

    pub fn equality_matrix(&self) -> MatRef<'_, f64> {
        self.eq_matrix.as_ref()
    }

    pub fn equality_rhs(&self) -> &[f64] {
        &self.eq_rhs
    }

    pub fn bounds(&self) -> &[VarBounds] {
        &self.bounds
    }

    pub fn objective_value(&self, v: &[f64]) -> f64 {
        dot(&self.objective, v)
    }

    /// Returns a copy with inequality row `row` removed.
    pub fn without_inequality(&self, row: usize) -> LinearProgram {
        let keep: Vec<usize> = (0..self.n_inequalities()).filter(|&r| r != row).collect();
        let g = Mat::from_fn(keep.len(), self.n_vars(), |i, j| self.ineq_matrix[(keep[i], j)]);
        LinearProgram { ineq_matrix: g, ineq_rhs: keep.iter().map(|&r| self.ineq_rhs[r]).collect(), ..self.clone() }
    }

    /// Returns a copy with every objective coefficient multiplied by `factor`.
    pub fn with_scaled_objective(&self, factor: f64) -> LinearProgram {
        LinearProgram { objective: self.objective.iter().map(|c| c * factor).collect(), ..self.clone() }
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        if self.ineq_matrix.ncols() != n || self.eq_matrix.ncols() != n {
            return Err(LpError::Malformed(format!(
                "constraint matrices have {} / {} columns, expected {n}",
                self.ineq_matrix.ncols(),
                self.eq_matrix.ncols()
            )));
        }
        if self.ineq_matrix.nrows() != self.ineq_rhs.len() {
            return Err(LpError::Malformed(format!(
                "inequality matrix has {} rows but rhs has {}",
                self.ineq_matrix.nrows(),
                self.ineq_rhs.len()
            )));
        }
        if self.eq_matrix.nrows() != self.eq_rhs.len() {
            return Err(LpError::Malformed(format!(
                "equality matrix has {} rows but rhs has {}",
                self.eq_matrix.nrows(),
                self.eq_rhs.len()
            )));
        }
        if self.bounds.len() != n {
            return Err(LpError::Malformed(format!("{} bounds given for {n} variables", self.bounds.len())));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("non-finite objective coefficient".into()));
        }
        if self.ineq_rhs.iter().chain(&self.eq_rhs).any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("non-finite right-hand side".into()));
        }
        for m in [&self.ineq_matrix, &self.eq_matrix] {
            for j in 0..n {
                if m.col_as_slice(j).iter().any(|a| !a.is_finite()) {
                    return Err(LpError::Malformed("non-finite matrix entry".into()));
                }
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if b.lower.is_nan() || b.upper.is_nan() || b.lower == f64::INFINITY || b.upper == f64::NEG_INFINITY {
                return Err(LpError::Malformed(format!("invalid bounds on variable {j}")));
            }
            if b.lower > b.upper {
                return Err(LpError::Malformed(format!(
                    "variable {j} has lower bound {} above upper bound {}",
                    b.lower, b.upper
                )));
            }
        }
        Ok(())
    }
}

pub struct LpBuilder {
    objective: Vec<f64>,
    ineq_matrix: Mat<f64>,
    ineq_rhs: Vec<f64>,
    eq_matrix: Mat<f64>,
    eq_rhs: Vec<f64>,
    bounds: Vec<VarBounds>,
}

impl LpBuilder {
    /// Constraints `G v ≥ h`.
    pub fn inequalities(mut self, g: Mat<f64>, h: Vec<f64>) -> Self {
        self.ineq_matrix = g;
        self.ineq_rhs = h;
        self
    }

    /// Constraints `E v = b`.
    pub fn equalities(mut self, e: Mat<f64>, b: Vec<f64>) -> Self {
        self.eq_matrix = e;
        self.eq_rhs = b;
        self
    }

    pub fn bounds(mut self, bounds: Vec<VarBounds>) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn bound(mut self, var: usize, bounds: VarBounds) -> Self {
        if var < self.bounds.len() {
            self.bounds[var] = bounds;
        }
        self
    }

    pub fn build(self) -> Result<LinearProgram, LpError> {
        let lp = LinearProgram {
            objective: self.objective,
            ineq_matrix: self.ineq_matrix,
            ineq_rhs: self.ineq_rhs,
            eq_matrix: self.eq_matrix,
            eq_rhs: self.eq_rhs,
            bounds: self.bounds,
        };
        lp.validate()?;
        Ok(lp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpAlgorithm {
    InteriorPoint,
    /// Dense tableau simplex with Bland's rule. Only sensible for small problems.
    Simplex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpSettings {
    pub algorithm: LpAlgorithm,
    pub tol_feas: f64,
    pub tol_kkt: f64,
    pub max_iterations: usize,
}

impl Default for LpSettings {
    fn default() -> Self {
        Self { algorithm: LpAlgorithm::InteriorPoint, tol_feas: 1e-7, tol_kkt: 1e-6, max_iterations: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Primal point and dual certificate.
///
/// Duals follow the sign convention of the Lagrangian stationarity condition
/// `c = Gᵀz + Eᵀy + z_l − z_u` with `z, z_l, z_u ≥ 0`.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    pub objective_value: f64,
    pub dual_inequality: Vec<f64>,
    pub dual_equality: Vec<f64>,
    pub dual_lower: Vec<f64>,
    pub dual_upper: Vec<f64>,
    pub max_kkt_residual: f64,
    pub iterations: usize,
    /// Why the problem was declared infeasible or unbounded.
    pub reason: Option<String>,
}

impl LpSolution {
    pub(crate) fn not_optimal(lp: &LinearProgram, status: LpStatus, iterations: usize, reason: String) -> Self {
        Self {
            status,
            primal: vec![0.0; lp.n_vars()],
            objective_value: match status {
                LpStatus::Infeasible => f64::INFINITY,
                _ => f64::NEG_INFINITY,
            },
            dual_inequality: vec![0.0; lp.n_inequalities()],
            dual_equality: vec![0.0; lp.n_equalities()],
            dual_lower: vec![0.0; lp.n_vars()],
            dual_upper: vec![0.0; lp.n_vars()],
            max_kkt_residual: f64::INFINITY,
            iterations,
            reason: Some(reason),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solves `lp`. An `Optimal` status is only returned once the KKT residual of
/// the returned point is at most `settings.tol_kkt`.
pub fn solve_lp(lp: &LinearProgram, settings: &LpSettings) -> Result<LpSolution, LpError> {
    lp.validate()?;
    match settings.algorithm {
        LpAlgorithm::InteriorPoint => ipm::solve(lp, settings),
        LpAlgorithm::Simplex => simplex::solve(lp, settings),
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn column(m: MatRef<'_, f64>, j: usize) -> Option<&[f64]> {
    m.col(j).try_as_col_major().map(|c| c.as_slice())
}

/// `out = M v`.
pub(crate) fn mat_vec(m: MatRef<'_, f64>, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.nrows()];
    for (j, &vj) in v.iter().enumerate() {
        if vj == 0.0 {
            continue;
        }
        match column(m, j) {
            Some(col) => {
                for (o, a) in out.iter_mut().zip(col) {
                    *o += a * vj;
                }
            }
            None => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += m[(i, j)] * vj;
                }
            }
        }
    }
    out
}

/// `out = Mᵀ v`.
pub(crate) fn mat_t_vec(m: MatRef<'_, f64>, v: &[f64]) -> Vec<f64> {
    (0..m.ncols())
        .map(|j| match column(m, j) {
            Some(col) => dot(col, v),
            None => (0..m.nrows()).map(|i| m[(i, j)] * v[i]).sum(),
        })
        .collect()
}
