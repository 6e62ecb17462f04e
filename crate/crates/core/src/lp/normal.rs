//! Normal-equation solves for the interior-point method.
//!
//! The reduced Newton system is
//!
//! ```text
//!     [ M  −Eᵀ ] [Δv]   [r₁]
//!     [ E   0  ] [Δy] = [r₂],      M = Gᵀ W G + D
//! ```
//!
//! with `W` and `D` positive diagonal. A set of variables that never share a
//! row has a diagonal block in `M`; those variables are eliminated by a Schur
//! complement before the dense Cholesky factorization. Candidates are taken
//! in order of increasing column count, which for the epigraph form of
//! weighted ℓ1 problems picks the epigraph and slack variables and leaves
//! only the signal and threshold.

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::{Llt, Solve};
use faer::{Accum, Mat, MatRef, Par, Side};

/// Rows with at most this many nonzeros are accumulated entry by entry.
const SPARSE_ROW_NNZ: usize = 8;

const NONE: usize = usize::MAX;

pub(super) struct NormalEquations {
    n: usize,
    keep: Vec<usize>,
    keep_pos: Vec<usize>,
    elim: Vec<usize>,
    elim_pos: Vec<usize>,
    dense_rows: Vec<usize>,
    dense_block: Mat<f64>,
    dense_row_major: Vec<f64>,
    /// `(dense row index, elimination slot, coefficient)`
    dense_elim: Vec<(usize, usize, f64)>,
    /// `w_r·coef` for each `dense_elim` entry at the last factorization.
    dense_alpha: Vec<f64>,
    sparse_rows: Vec<(usize, Vec<(usize, f64)>)>,
    eq: Mat<f64>,
    schur: Option<Llt<f64>>,
    elim_diag: Vec<f64>,
    elim_couple: Vec<Vec<(usize, f64)>>,
    eq_x: Mat<f64>,
    eq_schur: Option<Llt<f64>>,
}

impl NormalEquations {
    pub(super) fn new(g: MatRef<'_, f64>, eq: Mat<f64>) -> Self {
        let (mg, n) = (g.nrows(), g.ncols());
        let mut row_nz: Vec<Vec<(usize, f64)>> = vec![Vec::new(); mg];
        for j in 0..n {
            for (i, nz) in row_nz.iter_mut().enumerate() {
                let a = g[(i, j)];
                if a != 0.0 {
                    nz.push((j, a));
                }
            }
        }

        let mut var_rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, nz) in row_nz.iter().enumerate() {
            for &(j, _) in nz {
                var_rows[j].push(i);
            }
        }

        // Greedy choice of variables whose block of M stays diagonal. A
        // candidate must stay out of the equality rows and touch at most one
        // dense row, so its coupling to the kept variables has at most one
        // dense part.
        let mut in_eq = vec![false; n];
        for i in 0..eq.nrows() {
            for (j, flag) in in_eq.iter_mut().enumerate() {
                if eq[(i, j)] != 0.0 {
                    *flag = true;
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&j| (var_rows[j].len(), j));
        let mut row_taken = vec![false; mg];
        let mut elim_pos = vec![NONE; n];
        let mut elim = Vec::new();
        for j in order {
            let dense_hits = var_rows[j].iter().filter(|&&r| row_nz[r].len() > SPARSE_ROW_NNZ).count();
            if in_eq[j] || dense_hits > 1 || var_rows[j].iter().any(|&r| row_taken[r]) {
                continue;
            }
            for &r in &var_rows[j] {
                row_taken[r] = true;
            }
            elim_pos[j] = elim.len();
            elim.push(j);
        }
        elim.sort_unstable();
        for (t, &j) in elim.iter().enumerate() {
            elim_pos[j] = t;
        }

        let mut dense_rows = Vec::new();
        let mut sparse_rows = Vec::new();
        for (i, nz) in row_nz.into_iter().enumerate() {
            if nz.len() > SPARSE_ROW_NNZ {
                dense_rows.push(i);
            } else {
                sparse_rows.push((i, nz));
            }
        }
        let mut keep_pos = vec![NONE; n];
        let mut keep = Vec::new();
        for j in 0..n {
            if elim_pos[j] == NONE {
                keep_pos[j] = keep.len();
                keep.push(j);
            }
        }

        let dense_block = Mat::from_fn(dense_rows.len(), keep.len(), |r, k| g[(dense_rows[r], keep[k])]);
        let mut dense_elim = Vec::new();
        for (r, &row) in dense_rows.iter().enumerate() {
            for (t, &j) in elim.iter().enumerate() {
                if g[(row, j)] != 0.0 {
                    dense_elim.push((r, t, g[(row, j)]));
                }
            }
        }
        let ne = elim.len();
        Self {
            n,
            keep,
            keep_pos,
            elim,
            elim_pos,
            dense_rows,
            dense_row_major: (0..dense_block.nrows())
                .flat_map(|r| (0..dense_block.ncols()).map(move |k| (r, k)))
                .map(|(r, k)| dense_block[(r, k)])
                .collect(),
            dense_block,
            dense_elim,
            dense_alpha: Vec::new(),
            sparse_rows,
            eq_x: Mat::zeros(n, eq.nrows()),
            eq,
            schur: None,
            elim_diag: vec![0.0; ne],
            elim_couple: vec![Vec::new(); ne],
            eq_schur: None,
        }
    }

    /// Factorizes for row weights `w` and variable diagonal `d`; `reg` is
    /// added to the whole diagonal of `M`.
    pub(super) fn factor(&mut self, w: &[f64], d: &[f64], reg: f64) -> Result<(), ()> {
        let nk = self.keep.len();
        let mut s = Mat::<f64>::zeros(nk, nk);

        for (t, &j) in self.elim.iter().enumerate() {
            self.elim_diag[t] = d[j] + reg;
            self.elim_couple[t].clear();
        }
        for (row, nz) in &self.sparse_rows {
            let wr = w[*row];
            for &(a, va) in nz {
                for &(b, vb) in nz {
                    let val = wr * va * vb;
                    match (self.keep_pos[a], self.keep_pos[b]) {
                        (ka, kb) if ka != NONE && kb != NONE => s[(ka, kb)] += val,
                        // Repeated keys are fine: the entries act as a sum.
                        (NONE, kb) if kb != NONE => self.elim_couple[self.elim_pos[a]].push((kb, val)),
                        (NONE, NONE) if a == b => self.elim_diag[self.elim_pos[a]] += val,
                        _ => {}
                    }
                }
            }
        }

        // An eliminated variable in dense row r couples to the kept ones
        // through α·g_r, α = w_r·coef. Its rank-one Schur term folds into
        // the row weight: w_r − α²/δ = w_r·δ₀/δ, with δ₀ the pivot before
        // the dense contribution.
        let mut row_w: Vec<f64> = self.dense_rows.iter().map(|&row| w[row]).collect();
        self.dense_alpha.clear();
        for &(r, t, coef) in &self.dense_elim {
            let wr = row_w[r];
            let base = self.elim_diag[t];
            let dt = base + wr * coef * coef;
            self.elim_diag[t] = dt;
            row_w[r] = wr * base / dt;
            self.dense_alpha.push(wr * coef);
        }
        if !self.dense_rows.is_empty() {
            let mut b = self.dense_block.clone();
            for (r, &wr) in row_w.iter().enumerate() {
                let sw = wr.sqrt();
                for k in 0..nk {
                    b[(r, k)] *= sw;
                }
            }
            matmul(s.as_mut(), Accum::Add, b.transpose(), b.as_ref(), 1.0, Par::Seq);
        }
        for (k, &j) in self.keep.iter().enumerate() {
            s[(k, k)] += d[j] + reg;
        }

        for t in 0..self.elim.len() {
            let dt = self.elim_diag[t];
            if !(dt > 0.0) {
                return Err(());
            }
            let couple = &self.elim_couple[t];
            for &(k1, v1) in couple {
                for &(k2, v2) in couple {
                    s[(k1, k2)] -= v1 * v2 / dt;
                }
            }
        }
        for (e, &(r, t, _)) in self.dense_elim.iter().enumerate() {
            let f = self.dense_alpha[e] / self.elim_diag[t];
            let row = &self.dense_row_major[r * nk..(r + 1) * nk];
            for &(k1, v1) in &self.elim_couple[t] {
                for (k, g) in row.iter().enumerate() {
                    let cross = f * v1 * g;
                    s[(k1, k)] -= cross;
                    s[(k, k1)] -= cross;
                }
            }
        }
        self.schur = Some(s.llt(Side::Lower).map_err(|_| ())?);

        let me = self.eq.nrows();
        if me > 0 {
            let mut x = self.eq.transpose().to_owned();
            self.solve_m(&mut x);
            let mut ex = Mat::<f64>::zeros(me, me);
            matmul(ex.as_mut(), Accum::Replace, self.eq.as_ref(), x.as_ref(), 1.0, Par::Seq);
            let scale = (0..me).fold(0.0f64, |m, i| m.max(ex[(i, i)].abs()));
            for i in 0..me {
                ex[(i, i)] += 1e-14 * (1.0 + scale);
            }
            self.eq_schur = Some(ex.llt(Side::Lower).map_err(|_| ())?);
            self.eq_x = x;
        }
        Ok(())
    }

    /// Overwrites each column of `rhs` (n rows) with `M⁻¹ rhs`.
    fn solve_m(&self, rhs: &mut Mat<f64>) {
        let mut col = vec![0.0; self.n];
        for c in 0..rhs.ncols() {
            for (j, v) in col.iter_mut().enumerate() {
                *v = rhs[(j, c)];
            }
            self.solve_m_vec(&mut col);
            for (j, v) in col.iter().enumerate() {
                rhs[(j, c)] = *v;
            }
        }
    }

    fn solve_m_vec(&self, x: &mut [f64]) {
        let nk = self.keep.len();
        let mut rk: Vec<f64> = self.keep.iter().map(|&j| x[j]).collect();
        for (t, couple) in self.elim_couple.iter().enumerate() {
            let xj = x[self.elim[t]] / self.elim_diag[t];
            for &(k, v) in couple {
                rk[k] -= v * xj;
            }
        }
        for (e, &(r, t, _)) in self.dense_elim.iter().enumerate() {
            let a = self.dense_alpha[e] / self.elim_diag[t] * x[self.elim[t]];
            let row = &self.dense_row_major[r * nk..(r + 1) * nk];
            for (acc, g) in rk.iter_mut().zip(row) {
                *acc -= a * g;
            }
        }
        if let Some(llt) = &self.schur {
            let mut m = Mat::from_fn(nk, 1, |k, _| rk[k]);
            llt.solve_in_place(m.as_mut());
            for (k, v) in rk.iter_mut().enumerate() {
                *v = m[(k, 0)];
            }
        }
        let mut coupled: Vec<f64> =
            self.elim_couple.iter().map(|couple| couple.iter().map(|&(k, v)| v * rk[k]).sum()).collect();
        for (e, &(r, t, _)) in self.dense_elim.iter().enumerate() {
            let row = &self.dense_row_major[r * nk..(r + 1) * nk];
            let g: f64 = row.iter().zip(&rk).map(|(a, b)| a * b).sum();
            coupled[t] += self.dense_alpha[e] * g;
        }
        for (t, &j) in self.elim.iter().enumerate() {
            x[j] = (x[j] - coupled[t]) / self.elim_diag[t];
        }
        for (k, &j) in self.keep.iter().enumerate() {
            x[j] = rk[k];
        }
    }

    /// Solves the reduced Newton system for `(Δv, Δy)`.
    pub(super) fn solve(&self, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut u = r1.to_vec();
        self.solve_m_vec(&mut u);
        let me = self.eq.nrows();
        if me == 0 {
            return (u, Vec::new());
        }
        let eu = super::mat_vec(self.eq.as_ref(), &u);
        let mut t = Mat::<f64>::from_fn(me, 1, |i, _| r2[i] - eu[i]);
        if let Some(llt) = &self.eq_schur {
            llt.solve_in_place(t.as_mut());
        }
        let dy: Vec<f64> = (0..me).map(|i| t[(i, 0)]).collect();
        let corr = super::mat_vec(self.eq_x.as_ref(), &dy);
        let dv = u.iter().zip(&corr).map(|(a, b)| a + b).collect();
        (dv, dy)
    }
}
