use super::{dot, inf_norm, mat_t_vec, mat_vec, LinearProgram, LpSolution};

/// Scaled KKT residuals of a primal/dual pair.
///
/// Primal violations are divided by `1 + max(‖h‖∞, ‖b‖∞)`, dual sign and
/// stationarity violations by `1 + ‖c‖∞`, and complementarity products by
/// `1 + |cᵀv|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub primal: f64,
    pub dual: f64,
    pub stationarity: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.stationarity).max(self.complementarity)
    }
}

pub fn kkt_residuals(lp: &LinearProgram, sol: &LpSolution) -> KktResiduals {
    let v = &sol.primal;
    let c = lp.objective();
    let h = lp.inequality_rhs();
    let b = lp.equality_rhs();
    let g = lp.inequality_matrix();
    let e = lp.equality_matrix();

    let primal_scale = 1.0 + inf_norm(h).max(inf_norm(b));
    let dual_scale = 1.0 + inf_norm(c);
    let obj_scale = 1.0 + dot(c, v).abs();

    let gv = mat_vec(g, v);
    let ev = mat_vec(e, v);

    let mut primal: f64 = 0.0;
    let mut complementarity: f64 = 0.0;
    for i in 0..h.len() {
        let slack = gv[i] - h[i];
        primal = primal.max(-slack);
        complementarity = complementarity.max((sol.dual_inequality[i] * slack).abs());
    }
    for i in 0..b.len() {
        primal = primal.max((ev[i] - b[i]).abs());
    }

    let mut dual: f64 =
        sol.dual_inequality.iter().chain(&sol.dual_lower).chain(&sol.dual_upper).fold(0.0, |m, &z| m.max(-z));

    for (j, bnd) in lp.bounds().iter().enumerate() {
        if bnd.has_lower() {
            primal = primal.max(bnd.lower - v[j]);
            complementarity = complementarity.max((sol.dual_lower[j] * (v[j] - bnd.lower)).abs());
        } else {
            dual = dual.max(sol.dual_lower[j].abs());
        }
        if bnd.has_upper() {
            primal = primal.max(v[j] - bnd.upper);
            complementarity = complementarity.max((sol.dual_upper[j] * (bnd.upper - v[j])).abs());
        } else {
            dual = dual.max(sol.dual_upper[j].abs());
        }
    }

    let gtz = mat_t_vec(g, &sol.dual_inequality);
    let ety = mat_t_vec(e, &sol.dual_equality);
    let stationarity = (0..c.len())
        .map(|j| (c[j] - gtz[j] - ety[j] - sol.dual_lower[j] + sol.dual_upper[j]).abs())
        .fold(0.0, f64::max);

    KktResiduals {
        primal: primal.max(0.0) / primal_scale,
        dual: dual / dual_scale,
        stationarity: stationarity / dual_scale,
        complementarity: complementarity / obj_scale,
    }
}

/// Maximum scaled KKT residual (see [`KktResiduals`]).
pub fn verify_kkt(lp: &LinearProgram, sol: &LpSolution) -> f64 {
    kkt_residuals(lp, sol).max()
}
