//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use bsr::lp::{LinearProgram, LpSolution, LpStatus, VarBounds};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random feasible LP with box bounds on every variable.
pub fn random_box_lp(seed: u64, n: usize, m: usize) -> LinearProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds: Vec<VarBounds> = (0..n)
        .map(|_| {
            let lo = rng.random_range(-10.0..0.0);
            let hi = rng.random_range(0.5..10.0);
            VarBounds::new(lo, hi)
        })
        .collect();
    let inner: Vec<f64> = bounds.iter().map(|b| rng.random_range(b.lower..b.upper)).collect();
    let g = Mat::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
    let h = (0..m)
        .map(|i| {
            let gv: f64 = (0..n).map(|j| g[(i, j)] * inner[j]).sum();
            gv - rng.random_range(0.0..1.0)
        })
        .collect();
    let c = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    LinearProgram::builder(c).inequalities(g, h).bounds(bounds).build().unwrap()
}

/// Each constraint written as `aᵀv ≥ r`: inequality rows, then finite
/// lower bounds `v_j ≥ l_j`, then finite upper bounds `−v_j ≥ −u_j`.
#[derive(Clone, Debug)]
pub struct Halfspace {
    pub a: Vec<f64>,
    pub r: f64,
    pub origin: Origin,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Origin {
    Row(usize),
    Lower(usize),
    Upper(usize),
}

pub fn halfspaces(lp: &LinearProgram) -> Vec<Halfspace> {
    let n = lp.n_vars();
    let g = lp.inequality_matrix();
    let mut out = Vec::new();
    for i in 0..lp.n_inequalities() {
        out.push(Halfspace {
            a: (0..n).map(|j| g[(i, j)]).collect(),
            r: lp.inequality_rhs()[i],
            origin: Origin::Row(i),
        });
    }
    for (j, b) in lp.bounds().iter().enumerate() {
        let mut e = vec![0.0; n];
        if b.has_lower() {
            e[j] = 1.0;
            out.push(Halfspace { a: e.clone(), r: b.lower, origin: Origin::Lower(j) });
        }
        if b.has_upper() {
            e[j] = -1.0;
            out.push(Halfspace { a: e, r: -b.upper, origin: Origin::Upper(j) });
        }
    }
    out
}

/// Gaussian elimination with partial pivoting; `None` if (near) singular.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Calls `f` with every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for t in i + 1..k {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

pub struct Vertex {
    pub point: Vec<f64>,
    pub objective: f64,
}

/// Brute-force optimum of an inequality-only LP over a bounded polytope:
/// every `n`-subset of constraints is intersected and the best feasible
/// intersection point kept. `None` if no vertex is feasible.
pub fn vertex_oracle(lp: &LinearProgram) -> Option<Vertex> {
    assert_eq!(lp.n_equalities(), 0, "oracle handles inequality-form LPs");
    let n = lp.n_vars();
    let hs = halfspaces(lp);
    let c = lp.objective();
    let mut best: Option<Vertex> = None;
    for_each_subset(hs.len(), n, |subset| {
        let a: Vec<Vec<f64>> = subset.iter().map(|&k| hs[k].a.clone()).collect();
        let b: Vec<f64> = subset.iter().map(|&k| hs[k].r).collect();
        let Some(v) = solve_square(a, b) else { return };
        let feasible = hs.iter().all(|h| {
            let lhs: f64 = h.a.iter().zip(&v).map(|(a, x)| a * x).sum();
            lhs >= h.r - 1e-9 * (1.0 + h.r.abs())
        });
        if !feasible {
            return;
        }
        let obj: f64 = c.iter().zip(&v).map(|(a, x)| a * x).sum();
        if best.as_ref().is_none_or(|bv| obj < bv.objective) {
            best = Some(Vertex { point: v, objective: obj });
        }
    });
    best
}

/// Builds multipliers for a vertex by solving `c = Σ λ_k a_k` over its
/// tight constraints and keeping the first nonnegative solution.
pub fn active_set_duals(lp: &LinearProgram, vertex: &Vertex) -> Option<LpSolution> {
    let n = lp.n_vars();
    let hs = halfspaces(lp);
    let tight: Vec<usize> = (0..hs.len())
        .filter(|&k| {
            let lhs: f64 = hs[k].a.iter().zip(&vertex.point).map(|(a, x)| a * x).sum();
            (lhs - hs[k].r).abs() <= 1e-8 * (1.0 + hs[k].r.abs())
        })
        .collect();
    let mut found = None;
    for_each_subset(tight.len(), n, |subset| {
        if found.is_some() {
            return;
        }
        // Transposed system: column k of A is a_{tight[subset[k]]}.
        let a: Vec<Vec<f64>> = (0..n).map(|j| subset.iter().map(|&s| hs[tight[s]].a[j]).collect()).collect();
        let Some(lambda) = solve_square(a, lp.objective().to_vec()) else { return };
        if lambda.iter().all(|&l| l >= -1e-10) {
            found = Some(subset.iter().map(|&s| tight[s]).zip(lambda).collect::<Vec<_>>());
        }
    });
    let pairs = found?;
    let mut sol = LpSolution {
        status: LpStatus::Optimal,
        primal: vertex.point.clone(),
        objective_value: vertex.objective,
        dual_inequality: vec![0.0; lp.n_inequalities()],
        dual_equality: Vec::new(),
        dual_lower: vec![0.0; n],
        dual_upper: vec![0.0; n],
        max_kkt_residual: 0.0,
        iterations: 0,
        reason: None,
    };
    for (k, l) in pairs {
        let l = l.max(0.0);
        match hs[k].origin {
            Origin::Row(i) => sol.dual_inequality[i] = l,
            Origin::Lower(j) => sol.dual_lower[j] = l,
            Origin::Upper(j) => sol.dual_upper[j] = l,
        }
    }
    Some(sol)
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
