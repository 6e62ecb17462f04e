//! Mehrotra predictor-corrector interior-point method.
//!
//! Internally the problem is row-equilibrated (every row of `G` and `E` has
//! unit ∞-norm) and the objective is divided by its ∞-norm. Inequality slacks
//! `s ≈ Gv − h` and bound slacks `w_l ≈ v − l`, `w_u ≈ u − v` are carried as
//! separate, strictly positive iterates; their defining equations are primal
//! residuals, so a bound slack never collapses to zero through rounding.

use faer::Mat;

use super::normal::NormalEquations;
use super::{dot, inf_norm, kkt_residuals, LinearProgram, LpError, LpSettings, LpSolution, LpStatus};

/// Internal relative tolerance on the equilibrated problem. The dual
/// residual typically floors near 1e-10 in double precision.
const TOL_INTERNAL: f64 = 1e-9;
const STEP_FRACTION: f64 = 0.995;
const STALL_ITERATIONS: usize = 5;
const REFINE_STEPS: usize = 1;
const CENTERING_LAG: f64 = 10.0;
const REGULARIZATION: f64 = 1e-13;

struct Scaled {
    n: usize,
    c: Vec<f64>,
    obj_scale: f64,
    g: Mat<f64>,
    g_sparse: RowSparse,
    h: Vec<f64>,
    g_rows: Vec<usize>,
    g_scale: Vec<f64>,
    e: Mat<f64>,
    b: Vec<f64>,
    e_rows: Vec<usize>,
    e_scale: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Nonzeros of a matrix by row, for the products taken every iteration.
struct RowSparse {
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl RowSparse {
    fn new(m: &Mat<f64>) -> Self {
        let mut rows = vec![Vec::new(); m.nrows()];
        for j in 0..m.ncols() {
            for (i, row) in rows.iter_mut().enumerate() {
                let a = m[(i, j)];
                if a != 0.0 {
                    row.push((j, a));
                }
            }
        }
        Self { ncols: m.ncols(), rows }
    }

    fn mul(&self, v: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|&(j, a)| a * v[j]).sum()).collect()
    }

    fn tmul(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (r, &zr) in self.rows.iter().zip(z) {
            if zr != 0.0 {
                for &(j, a) in r {
                    out[j] += a * zr;
                }
            }
        }
        out
    }
}

enum Presolved {
    Ready(Box<Scaled>),
    Infeasible(String),
}

fn presolve(lp: &LinearProgram) -> Presolved {
    let n = lp.n_vars();
    let g0 = lp.inequality_matrix();
    let h0 = lp.inequality_rhs();

    let mut g_rows = Vec::new();
    let mut g_scale = Vec::new();
    for i in 0..lp.n_inequalities() {
        let norm = (0..n).fold(0.0f64, |m, j| m.max(g0[(i, j)].abs()));
        if norm == 0.0 {
            if h0[i] > 0.0 {
                return Presolved::Infeasible(format!("inequality row {i} reads 0 ≥ {}", h0[i]));
            }
            continue;
        }
        g_rows.push(i);
        g_scale.push(1.0 / norm);
    }
    let g = Mat::from_fn(g_rows.len(), n, |r, j| g0[(g_rows[r], j)] * g_scale[r]);
    let h = g_rows.iter().zip(&g_scale).map(|(&i, s)| h0[i] * s).collect();

    let (e_rows, e_scale) = match independent_equalities(lp) {
        Ok(rows) => rows,
        Err(reason) => return Presolved::Infeasible(reason),
    };
    let e0 = lp.equality_matrix();
    let e = Mat::from_fn(e_rows.len(), n, |r, j| e0[(e_rows[r], j)] * e_scale[r]);
    let b = e_rows.iter().zip(&e_scale).map(|(&i, s)| lp.equality_rhs()[i] * s).collect();

    let cnorm = inf_norm(lp.objective());
    let obj_scale = if cnorm > 0.0 { cnorm } else { 1.0 };
    Presolved::Ready(Box::new(Scaled {
        n,
        c: lp.objective().iter().map(|c| c / obj_scale).collect(),
        obj_scale,
        g_sparse: RowSparse::new(&g),
        g,
        h,
        g_rows,
        g_scale,
        e,
        b,
        e_rows,
        e_scale,
        lower: lp.bounds().iter().map(|b| b.lower).collect(),
        upper: lp.bounds().iter().map(|b| b.upper).collect(),
    }))
}

/// Drops linearly dependent equality rows (modified Gram-Schmidt with one
/// re-orthogonalization pass), reporting inconsistent ones as infeasible.
fn independent_equalities(lp: &LinearProgram) -> Result<(Vec<usize>, Vec<f64>), String> {
    let n = lp.n_vars();
    let e = lp.equality_matrix();
    let b = lp.equality_rhs();
    let mut basis: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut rows = Vec::new();
    let mut scales = Vec::new();
    for i in 0..lp.n_equalities() {
        let norm = (0..n).fold(0.0f64, |m, j| m.max(e[(i, j)].abs()));
        if norm == 0.0 {
            if b[i].abs() > 1e-12 {
                return Err(format!("equality row {i} reads 0 = {}", b[i]));
            }
            continue;
        }
        let mut r: Vec<f64> = (0..n).map(|j| e[(i, j)] / norm).collect();
        let mut rb = b[i] / norm;
        let before = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        for _ in 0..2 {
            for (q, qb) in &basis {
                let coef = dot(q, &r);
                for (rj, qj) in r.iter_mut().zip(q) {
                    *rj -= coef * qj;
                }
                rb -= coef * qb;
            }
        }
        let after = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if after <= 1e-9 * before {
            let scale_b = 1.0 + (b[i] / norm).abs();
            if rb.abs() > 1e-7 * scale_b {
                return Err(format!(
                    "equality row {i} is a combination of earlier rows with a different right-hand side"
                ));
            }
            continue;
        }
        for rj in r.iter_mut() {
            *rj /= after;
        }
        basis.push((r, rb / after));
        rows.push(i);
        scales.push(1.0 / norm);
    }
    Ok((rows, scales))
}

fn initial_value(lower: f64, upper: f64) -> f64 {
    match (lower.is_finite(), upper.is_finite()) {
        (false, false) => 0.0,
        (true, false) => (lower + 1.0).max(0.0),
        (false, true) => (upper - 1.0).min(0.0),
        (true, true) => {
            let width = upper - lower;
            let margin = (width / 4.0).min(1.0);
            if lower + margin <= 0.0 && 0.0 <= upper - margin {
                0.0
            } else {
                0.5 * (lower + upper)
            }
        }
    }
}

/// Largest `α ∈ (0, 1]` keeping `x + α dx ≥ 0`.
fn max_step(x: &[f64], dx: &[f64], active: impl Fn(usize) -> bool) -> f64 {
    let mut alpha: f64 = 1.0;
    for i in 0..x.len() {
        if active(i) && dx[i] < 0.0 {
            alpha = alpha.min(-x[i] / dx[i]);
        }
    }
    alpha
}

pub(super) fn solve(lp: &LinearProgram, settings: &LpSettings) -> Result<LpSolution, LpError> {
    let sc = match presolve(lp) {
        Presolved::Ready(sc) => sc,
        Presolved::Infeasible(reason) => return Ok(LpSolution::not_optimal(lp, LpStatus::Infeasible, 0, reason)),
    };
    let n = sc.n;
    let mg = sc.h.len();
    let me = sc.b.len();
    let has_l: Vec<bool> = sc.lower.iter().map(|l| l.is_finite()).collect();
    let has_u: Vec<bool> = sc.upper.iter().map(|u| u.is_finite()).collect();
    let n_pairs = mg + has_l.iter().filter(|&&x| x).count() + has_u.iter().filter(|&&x| x).count();
    if n_pairs == 0 {
        return solve_equality_only(lp, &sc, settings);
    }

    let mut ne = NormalEquations::new(sc.g.as_ref(), sc.e.clone());

    let mut v: Vec<f64> = (0..n).map(|j| initial_value(sc.lower[j], sc.upper[j])).collect();
    let gv0 = sc.g_sparse.mul(&v);
    let mut s: Vec<f64> = gv0.iter().zip(&sc.h).map(|(gv, h)| (gv - h).max(1.0)).collect();
    let mut z = vec![1.0; mg];
    let mut y = vec![0.0; me];
    let mut zl: Vec<f64> = has_l.iter().map(|&f| if f { 1.0 } else { 0.0 }).collect();
    let mut zu: Vec<f64> = has_u.iter().map(|&f| if f { 1.0 } else { 0.0 }).collect();
    let mut wl: Vec<f64> = (0..n).map(|j| if has_l[j] { v[j] - sc.lower[j] } else { 1.0 }).collect();
    let mut wu: Vec<f64> = (0..n).map(|j| if has_u[j] { sc.upper[j] - v[j] } else { 1.0 }).collect();

    let h_norm = inf_norm(&sc.h).max(inf_norm(&sc.b));
    let c_norm = inf_norm(&sc.c);
    let mut best_kkt = f64::INFINITY;
    let mut fallback: Option<LpSolution> = None;
    let mut fallback_age = 0;

    for iter in 0..settings.max_iterations {
        let rho_l: Vec<f64> = (0..n).map(|j| if has_l[j] { v[j] - sc.lower[j] - wl[j] } else { 0.0 }).collect();
        let rho_u: Vec<f64> = (0..n).map(|j| if has_u[j] { sc.upper[j] - v[j] - wu[j] } else { 0.0 }).collect();
        let gv = sc.g_sparse.mul(&v);
        let r_g: Vec<f64> = (0..mg).map(|i| gv[i] - s[i] - sc.h[i]).collect();
        let ev = super::mat_vec(sc.e.as_ref(), &v);
        let r_e: Vec<f64> = (0..me).map(|i| ev[i] - sc.b[i]).collect();
        let gtz = sc.g_sparse.tmul(&z);
        let ety = super::mat_t_vec(sc.e.as_ref(), &y);
        let r_d: Vec<f64> = (0..n).map(|j| sc.c[j] - gtz[j] - ety[j] - zl[j] + zu[j]).collect();

        let pobj = dot(&sc.c, &v);
        let mut dobj = dot(&sc.h, &z) + dot(&sc.b, &y);
        for j in 0..n {
            if has_l[j] {
                dobj += sc.lower[j] * zl[j];
            }
            if has_u[j] {
                dobj -= sc.upper[j] * zu[j];
            }
        }
        let mut compl = dot(&s, &z);
        for j in 0..n {
            if has_l[j] {
                compl += wl[j] * zl[j];
            }
            if has_u[j] {
                compl += wu[j] * zu[j];
            }
        }
        let mu = compl / n_pairs as f64;

        let pres = inf_norm(&r_g).max(inf_norm(&r_e)).max(inf_norm(&rho_l)).max(inf_norm(&rho_u)) / (1.0 + h_norm);
        let dres = inf_norm(&r_d) / (1.0 + c_norm);
        // Complementarity rather than pobj − dobj: the latter also carries
        // rᵀv terms that floor out once ‖v‖ is large.
        let gap = compl.abs() / (1.0 + pobj.abs().max(dobj.abs()));
        if pres <= TOL_INTERNAL && dres <= TOL_INTERNAL && gap <= TOL_INTERNAL {
            let sol = unscale(lp, &sc, &v, &z, &y, &zl, &zu, iter);
            let kkt = kkt_residuals(lp, &sol);
            best_kkt = best_kkt.min(kkt.max());
            if kkt.max() <= settings.tol_kkt && kkt.primal <= settings.tol_feas {
                return Ok(sol);
            }
        } else if pres <= 1e3 * TOL_INTERNAL && dres <= 1e3 * TOL_INTERNAL && gap <= 1e3 * TOL_INTERNAL {
            // Close enough that the unscaled KKT conditions may already hold;
            // kept in case the remaining iterations break down numerically.
            let sol = unscale(lp, &sc, &v, &z, &y, &zl, &zu, iter);
            let kkt = kkt_residuals(lp, &sol);
            best_kkt = best_kkt.min(kkt.max());
            if kkt.max() <= settings.tol_kkt && kkt.primal <= settings.tol_feas {
                fallback = Some(sol);
            }
        }
        if let Some(sol) = &fallback {
            // Stalled just short of the internal tolerance.
            if fallback_age == STALL_ITERATIONS {
                return Ok(sol.clone());
            }
            fallback_age += 1;
        }

        if let Some(reason) = primal_infeasibility(&sc, &z, &y, &zl, &zu, &has_l, &has_u, pres) {
            return Ok(LpSolution::not_optimal(lp, LpStatus::Infeasible, iter, reason));
        }
        if let Some(reason) = dual_infeasibility(&sc, &v, dres) {
            return Ok(LpSolution::not_optimal(lp, LpStatus::Unbounded, iter, reason));
        }

        let w: Vec<f64> = (0..mg).map(|i| z[i] / s[i]).collect();
        let d: Vec<f64> = (0..n)
            .map(|j| {
                let mut dj = 0.0;
                if has_l[j] {
                    dj += zl[j] / wl[j];
                }
                if has_u[j] {
                    dj += zu[j] / wu[j];
                }
                dj
            })
            .collect();
        // Fixed rather than relative to the largest diagonal: late in the
        // solve that diagonal reaches 1e10 and a proportional shift swamps
        // the dual residual in directions only weakly constrained by G.
        let mut reg = REGULARIZATION;
        let mut factored = false;
        for _ in 0..8 {
            if ne.factor(&w, &d, reg).is_ok() {
                factored = true;
                break;
            }
            reg *= 100.0;
        }
        if !factored {
            if let Some(sol) = fallback {
                return Ok(sol);
            }
            return Err(LpError::Numerical(format!("normal equations could not be factorized at iteration {iter}")));
        }

        let newton = |r_sz: &[f64], r_l: &[f64], r_u: &[f64]| {
            let tmp: Vec<f64> = (0..mg).map(|i| r_sz[i] / s[i] - w[i] * r_g[i]).collect();
            let gt_tmp = sc.g_sparse.tmul(&tmp);
            let r1: Vec<f64> = (0..n)
                .map(|j| {
                    let mut r = -r_d[j] + gt_tmp[j];
                    if has_l[j] {
                        r += (r_l[j] - zl[j] * rho_l[j]) / wl[j];
                    }
                    if has_u[j] {
                        r -= (r_u[j] - zu[j] * rho_u[j]) / wu[j];
                    }
                    r
                })
                .collect();
            let r2: Vec<f64> = r_e.iter().map(|r| -r).collect();
            let (mut dv, mut dy) = ne.solve(&r1, &r2);
            // Iterative refinement against the unregularized system.
            for _ in 0..REFINE_STEPS {
                let gdv = sc.g_sparse.mul(&dv);
                let wg: Vec<f64> = (0..mg).map(|i| w[i] * gdv[i]).collect();
                let mv = sc.g_sparse.tmul(&wg);
                let ety = super::mat_t_vec(sc.e.as_ref(), &dy);
                let e1: Vec<f64> = (0..n).map(|j| r1[j] - mv[j] - d[j] * dv[j] + ety[j]).collect();
                let edv = super::mat_vec(sc.e.as_ref(), &dv);
                let e2: Vec<f64> = (0..me).map(|i| r2[i] - edv[i]).collect();
                let (cv, cy) = ne.solve(&e1, &e2);
                dv.iter_mut().zip(&cv).for_each(|(a, b)| *a += b);
                dy.iter_mut().zip(&cy).for_each(|(a, b)| *a += b);
            }
            let gdv = sc.g_sparse.mul(&dv);
            let ds: Vec<f64> = (0..mg).map(|i| gdv[i] + r_g[i]).collect();
            let dz: Vec<f64> = (0..mg).map(|i| (r_sz[i] - z[i] * ds[i]) / s[i]).collect();
            let dwl: Vec<f64> = (0..n).map(|j| if has_l[j] { dv[j] + rho_l[j] } else { 0.0 }).collect();
            let dwu: Vec<f64> = (0..n).map(|j| if has_u[j] { rho_u[j] - dv[j] } else { 0.0 }).collect();
            let dzl: Vec<f64> =
                (0..n).map(|j| if has_l[j] { (r_l[j] - zl[j] * dwl[j]) / wl[j] } else { 0.0 }).collect();
            let dzu: Vec<f64> =
                (0..n).map(|j| if has_u[j] { (r_u[j] - zu[j] * dwu[j]) / wu[j] } else { 0.0 }).collect();
            Direction { dv, ds, dz, dy, dwl, dwu, dzl, dzu }
        };
        let step_lengths = |dir: &Direction| {
            let ap = max_step(&s, &dir.ds, |_| true).min(max_step(&wl, &dir.dwl, |j| has_l[j])).min(max_step(
                &wu,
                &dir.dwu,
                |j| has_u[j],
            ));
            let ad = max_step(&z, &dir.dz, |_| true).min(max_step(&zl, &dir.dzl, |j| has_l[j])).min(max_step(
                &zu,
                &dir.dzu,
                |j| has_u[j],
            ));
            (ap, ad)
        };

        // Predictor.
        let r_sz: Vec<f64> = (0..mg).map(|i| -s[i] * z[i]).collect();
        let r_l: Vec<f64> = (0..n).map(|j| if has_l[j] { -wl[j] * zl[j] } else { 0.0 }).collect();
        let r_u: Vec<f64> = (0..n).map(|j| if has_u[j] { -wu[j] * zu[j] } else { 0.0 }).collect();
        let aff = newton(&r_sz, &r_l, &r_u);
        let (ap, ad) = step_lengths(&aff);
        let mut compl_aff = 0.0;
        for i in 0..mg {
            compl_aff += (s[i] + ap * aff.ds[i]) * (z[i] + ad * aff.dz[i]);
        }
        for j in 0..n {
            if has_l[j] {
                compl_aff += (wl[j] + ap * aff.dwl[j]) * (zl[j] + ad * aff.dzl[j]);
            }
            if has_u[j] {
                compl_aff += (wu[j] + ap * aff.dwu[j]) * (zu[j] + ad * aff.dzu[j]);
            }
        }
        let mu_aff = compl_aff / n_pairs as f64;
        let mut sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        // Keep centering while infeasibility lags the gap: once μ is far
        // below the residuals the normal equations can no longer reduce them.
        if gap < CENTERING_LAG * pres.max(dres) {
            sigma = sigma.max(0.5);
        }

        // Corrector.
        let target = sigma * mu;
        let r_sz: Vec<f64> = (0..mg).map(|i| target - s[i] * z[i] - aff.ds[i] * aff.dz[i]).collect();
        let r_l: Vec<f64> =
            (0..n).map(|j| if has_l[j] { target - wl[j] * zl[j] - aff.dwl[j] * aff.dzl[j] } else { 0.0 }).collect();
        let r_u: Vec<f64> =
            (0..n).map(|j| if has_u[j] { target - wu[j] * zu[j] - aff.dwu[j] * aff.dzu[j] } else { 0.0 }).collect();
        let dir = newton(&r_sz, &r_l, &r_u);
        let (ap, ad) = step_lengths(&dir);
        // A common step keeps infeasibility and complementarity shrinking
        // together; separate steps let μ collapse while dres stalls.
        let ap = (STEP_FRACTION * ap.min(ad)).min(1.0);
        let ad = ap;

        for j in 0..n {
            v[j] += ap * dir.dv[j];
            if has_l[j] {
                wl[j] += ap * dir.dwl[j];
                zl[j] += ad * dir.dzl[j];
            }
            if has_u[j] {
                wu[j] += ap * dir.dwu[j];
                zu[j] += ad * dir.dzu[j];
            }
        }
        for i in 0..mg {
            s[i] += ap * dir.ds[i];
            z[i] += ad * dir.dz[i];
        }
        for i in 0..me {
            y[i] += ad * dir.dy[i];
        }
        if v.iter().chain(&z).chain(&s).any(|x| !x.is_finite()) {
            return match fallback {
                Some(sol) => Ok(sol),
                None => Err(LpError::Numerical(format!("non-finite iterate at iteration {iter}"))),
            };
        }
    }

    if let Some(sol) = fallback {
        return Ok(sol);
    }
    if best_kkt.is_infinite() {
        let sol = unscale(lp, &sc, &v, &z, &y, &zl, &zu, settings.max_iterations);
        best_kkt = kkt_residuals(lp, &sol).max();
    }
    Err(LpError::IterationLimit { iterations: settings.max_iterations, residual: best_kkt })
}

struct Direction {
    dv: Vec<f64>,
    ds: Vec<f64>,
    dz: Vec<f64>,
    dy: Vec<f64>,
    dwl: Vec<f64>,
    dwu: Vec<f64>,
    dzl: Vec<f64>,
    dzu: Vec<f64>,
}

/// Farkas certificate from a diverging dual iterate: a nonnegative ray with
/// `Gᵀz + Eᵀy + z_l − z_u ≈ 0` and a positive dual objective.
#[allow(clippy::too_many_arguments)]
fn primal_infeasibility(
    sc: &Scaled,
    z: &[f64],
    y: &[f64],
    zl: &[f64],
    zu: &[f64],
    has_l: &[bool],
    has_u: &[bool],
    pres: f64,
) -> Option<String> {
    if pres <= 1e-8 {
        return None;
    }
    let scale = inf_norm(z).max(inf_norm(y)).max(inf_norm(zl)).max(inf_norm(zu));
    if scale < 1e6 {
        return None;
    }
    let rz: Vec<f64> = z.iter().map(|x| x / scale).collect();
    let ry: Vec<f64> = y.iter().map(|x| x / scale).collect();
    let gtz = sc.g_sparse.tmul(&rz);
    let ety = super::mat_t_vec(sc.e.as_ref(), &ry);
    let mut ray_obj = dot(&sc.h, &rz) + dot(&sc.b, &ry);
    let mut resid: f64 = 0.0;
    for j in 0..sc.n {
        let l = if has_l[j] { zl[j] / scale } else { 0.0 };
        let u = if has_u[j] { zu[j] / scale } else { 0.0 };
        if has_l[j] {
            ray_obj += sc.lower[j] * l;
        }
        if has_u[j] {
            ray_obj -= sc.upper[j] * u;
        }
        resid = resid.max((gtz[j] + ety[j] + l - u).abs());
    }
    (ray_obj > 1e-9 && resid <= 1e-6 * ray_obj)
        .then(|| format!("dual ray certifies infeasibility (ray objective {ray_obj:.3e}, residual {resid:.3e})"))
}

/// Unboundedness certificate from a diverging primal iterate.
fn dual_infeasibility(sc: &Scaled, v: &[f64], dres: f64) -> Option<String> {
    if dres <= 1e-8 {
        return None;
    }
    let scale = inf_norm(v);
    if scale < 1e8 {
        return None;
    }
    let d: Vec<f64> = v.iter().map(|x| x / scale).collect();
    let cd = dot(&sc.c, &d);
    if cd >= -1e-9 {
        return None;
    }
    let gd = sc.g_sparse.mul(&d);
    let ed = super::mat_vec(sc.e.as_ref(), &d);
    let tol = 1e-6 * cd.abs();
    let ok_g = gd.iter().all(|x| *x >= -tol);
    let ok_e = ed.iter().all(|x| x.abs() <= tol);
    let ok_b =
        (0..sc.n).all(|j| (!sc.lower[j].is_finite() || d[j] >= -tol) && (!sc.upper[j].is_finite() || d[j] <= tol));
    (ok_g && ok_e && ok_b).then(|| format!("primal ray with objective slope {cd:.3e}"))
}

#[allow(clippy::too_many_arguments)]
fn unscale(
    lp: &LinearProgram,
    sc: &Scaled,
    v: &[f64],
    z: &[f64],
    y: &[f64],
    zl: &[f64],
    zu: &[f64],
    iterations: usize,
) -> LpSolution {
    let mut dual_inequality = vec![0.0; lp.n_inequalities()];
    for (r, &i) in sc.g_rows.iter().enumerate() {
        dual_inequality[i] = z[r] * sc.g_scale[r] * sc.obj_scale;
    }
    let mut dual_equality = vec![0.0; lp.n_equalities()];
    for (r, &i) in sc.e_rows.iter().enumerate() {
        dual_equality[i] = y[r] * sc.e_scale[r] * sc.obj_scale;
    }
    let mut sol = LpSolution {
        status: LpStatus::Optimal,
        primal: v.to_vec(),
        objective_value: lp.objective_value(v),
        dual_inequality,
        dual_equality,
        dual_lower: zl.iter().map(|x| x * sc.obj_scale).collect(),
        dual_upper: zu.iter().map(|x| x * sc.obj_scale).collect(),
        max_kkt_residual: 0.0,
        iterations,
        reason: None,
    };
    sol.max_kkt_residual = kkt_residuals(lp, &sol).max();
    sol
}

/// No inequalities and no finite bounds: the LP is bounded only if `c` lies
/// in the row space of `E`.
fn solve_equality_only(lp: &LinearProgram, sc: &Scaled, settings: &LpSettings) -> Result<LpSolution, LpError> {
    use faer::linalg::solvers::Solve;
    use faer::Side;
    let n = sc.n;
    let me = sc.b.len();
    if me == 0 {
        return if inf_norm(&sc.c) == 0.0 {
            Ok(unscale(lp, sc, &vec![0.0; n], &[], &[], &vec![0.0; n], &vec![0.0; n], 0))
        } else {
            Ok(LpSolution::not_optimal(
                lp,
                LpStatus::Unbounded,
                0,
                "unconstrained problem with nonzero objective".into(),
            ))
        };
    }
    let eet = sc.e.as_ref() * sc.e.transpose();
    let llt = eet.llt(Side::Lower).map_err(|_| LpError::Numerical("equality Gram matrix is singular".into()))?;
    let ec = super::mat_vec(sc.e.as_ref(), &sc.c);
    let mut yc = Mat::from_fn(me, 1, |i, _| ec[i]);
    llt.solve_in_place(yc.as_mut());
    let y: Vec<f64> = (0..me).map(|i| yc[(i, 0)]).collect();
    let ety = super::mat_t_vec(sc.e.as_ref(), &y);
    let resid = (0..n).fold(0.0f64, |m, j| m.max((sc.c[j] - ety[j]).abs()));
    if resid > settings.tol_kkt {
        return Ok(LpSolution::not_optimal(
            lp,
            LpStatus::Unbounded,
            0,
            "objective is not in the row space of the equality constraints".into(),
        ));
    }
    let mut vb = Mat::from_fn(me, 1, |i, _| sc.b[i]);
    llt.solve_in_place(vb.as_mut());
    let vb: Vec<f64> = (0..me).map(|i| vb[(i, 0)]).collect();
    let v = super::mat_t_vec(sc.e.as_ref(), &vb);
    Ok(unscale(lp, sc, &v, &[], &y, &vec![0.0; n], &vec![0.0; n], 1))
}
