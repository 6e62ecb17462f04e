//! Two-phase dense tableau simplex with Bland's anti-cycling rule.
//!
//! Meant as an independent reference for small problems, not for speed.

use super::{kkt_residuals, LinearProgram, LpError, LpSettings, LpSolution, LpStatus};

const EPS: f64 = 1e-10;

#[derive(Clone, Copy)]
enum Column {
    /// `v_j = lower_j + p`
    Shifted(usize),
    /// `v_j = upper_j − q`
    Reflected(usize),
    /// `v_j = p − q`, positive part
    FreePos(usize),
    FreeNeg(usize),
    Surplus,
    BoundSlack,
    Artificial,
}

enum RowKind {
    Inequality(usize),
    Equality(usize),
    UpperBound(usize),
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for a in self.rows[r].iter_mut() {
            *a /= p;
        }
        self.rhs[r] /= p;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c];
            if f == 0.0 {
                continue;
            }
            for (a, pr) in self.rows[i].iter_mut().zip(&pivot_row) {
                *a -= f * pr;
            }
            self.rhs[i] -= f * pivot_rhs;
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (dj, a) in d.iter_mut().zip(&self.rows[i]) {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    /// Runs simplex iterations on `cost`; columns with `allowed[j] == false`
    /// never enter. Returns `Ok(true)` at optimality, `Ok(false)` if unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool], budget: &mut usize) -> Result<bool, ()> {
        loop {
            if *budget == 0 {
                return Err(());
            }
            *budget -= 1;
            let d = self.reduced_costs(cost);
            let Some(enter) = (0..self.ncols).find(|&j| allowed[j] && d[j] < -EPS) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][enter];
                if a > EPS {
                    let ratio = self.rhs[i] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - EPS || (ratio <= lr + EPS && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return Ok(false),
            }
        }
    }
}

pub(super) fn solve(lp: &LinearProgram, settings: &LpSettings) -> Result<LpSolution, LpError> {
    let n = lp.n_vars();
    let g = lp.inequality_matrix();
    let e = lp.equality_matrix();
    let bounds = lp.bounds();

    let mut columns = Vec::new();
    let mut offset = vec![0.0; n];
    for (j, b) in bounds.iter().enumerate() {
        match (b.has_lower(), b.has_upper()) {
            (true, _) => {
                columns.push(Column::Shifted(j));
                offset[j] = b.lower;
            }
            (false, true) => {
                columns.push(Column::Reflected(j));
                offset[j] = b.upper;
            }
            (false, false) => {
                columns.push(Column::FreePos(j));
                columns.push(Column::FreeNeg(j));
            }
        }
    }
    let coef = |col: &Column, a: &dyn Fn(usize) -> f64| match *col {
        Column::Shifted(j) | Column::FreePos(j) => a(j),
        Column::Reflected(j) | Column::FreeNeg(j) => -a(j),
        _ => 0.0,
    };

    let mut kinds = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    let n_struct = columns.len();
    for i in 0..lp.n_inequalities() {
        let row: Vec<f64> = columns.iter().map(|c| coef(c, &|j| g[(i, j)])).collect();
        let shift: f64 = (0..n).map(|j| g[(i, j)] * offset[j]).sum();
        rows.push(row);
        rhs.push(lp.inequality_rhs()[i] - shift);
        kinds.push(RowKind::Inequality(i));
    }
    for i in 0..lp.n_equalities() {
        let row: Vec<f64> = columns.iter().map(|c| coef(c, &|j| e[(i, j)])).collect();
        let shift: f64 = (0..n).map(|j| e[(i, j)] * offset[j]).sum();
        rows.push(row);
        rhs.push(lp.equality_rhs()[i] - shift);
        kinds.push(RowKind::Equality(i));
    }
    for (j, b) in bounds.iter().enumerate() {
        if b.has_lower() && b.has_upper() {
            let row: Vec<f64> =
                columns.iter().map(|c| matches!(c, Column::Shifted(k) if *k == j) as u8 as f64).collect();
            rows.push(row);
            rhs.push(b.upper - b.lower);
            kinds.push(RowKind::UpperBound(j));
        }
    }

    // Surplus / slack columns, then one artificial per row.
    let m = rows.len();
    for (i, kind) in kinds.iter().enumerate() {
        let col_kind = match kind {
            RowKind::Inequality(_) => Some((Column::Surplus, -1.0)),
            RowKind::UpperBound(_) => Some((Column::BoundSlack, 1.0)),
            RowKind::Equality(_) => None,
        };
        if let Some((ck, val)) = col_kind {
            columns.push(ck);
            for (r, row) in rows.iter_mut().enumerate() {
                row.push(if r == i { val } else { 0.0 });
            }
        }
    }
    let n_real = columns.len();
    let mut row_sign = vec![1.0; m];
    for i in 0..m {
        if rhs[i] < 0.0 {
            row_sign[i] = -1.0;
            rhs[i] = -rhs[i];
            for a in rows[i].iter_mut() {
                *a = -*a;
            }
        }
    }
    for i in 0..m {
        columns.push(Column::Artificial);
        for (r, row) in rows.iter_mut().enumerate() {
            row.push(if r == i { 1.0 } else { 0.0 });
        }
    }
    let ncols = columns.len();
    let mut tab = Tableau { rows, rhs, basis: (n_real..ncols).collect(), ncols };

    let mut budget = settings.max_iterations.max(50 * (m + ncols));
    let start = budget;
    let phase1_cost: Vec<f64> = (0..ncols).map(|j| if j >= n_real { 1.0 } else { 0.0 }).collect();
    let everything = vec![true; ncols];
    tab.optimize(&phase1_cost, &everything, &mut budget).map_err(|_| iteration_limit(settings))?;
    let infeas: f64 = tab.basis.iter().zip(&tab.rhs).filter(|(&b, _)| b >= n_real).map(|(_, r)| *r).sum();
    let rhs_scale = 1.0 + tab.rhs.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if infeas > 1e-8 * rhs_scale {
        return Ok(LpSolution::not_optimal(
            lp,
            LpStatus::Infeasible,
            start - budget,
            format!("phase one ended with artificial sum {infeas:.3e}"),
        ));
    }
    for r in 0..m {
        if tab.basis[r] >= n_real {
            if let Some(c) = (0..n_real).find(|&c| tab.rows[r][c].abs() > 1e-9) {
                tab.pivot(r, c);
            }
        }
    }

    let mut cost = vec![0.0; ncols];
    for (k, col) in columns.iter().enumerate().take(n_struct) {
        cost[k] = match *col {
            Column::Shifted(j) | Column::FreePos(j) => lp.objective()[j],
            Column::Reflected(j) | Column::FreeNeg(j) => -lp.objective()[j],
            _ => 0.0,
        };
    }
    let allowed: Vec<bool> = (0..ncols).map(|j| j < n_real).collect();
    let bounded = tab.optimize(&cost, &allowed, &mut budget).map_err(|_| iteration_limit(settings))?;
    if !bounded {
        return Ok(LpSolution::not_optimal(
            lp,
            LpStatus::Unbounded,
            start - budget,
            "entering column has no positive entry".into(),
        ));
    }

    let mut value = vec![0.0; ncols];
    for (r, &b) in tab.basis.iter().enumerate() {
        value[b] = tab.rhs[r];
    }
    let mut primal = offset.clone();
    for (k, col) in columns.iter().enumerate().take(n_struct) {
        match *col {
            Column::Shifted(j) | Column::FreePos(j) => primal[j] += value[k],
            Column::Reflected(j) | Column::FreeNeg(j) => primal[j] -= value[k],
            _ => {}
        }
    }

    let d = tab.reduced_costs(&cost);
    let pi: Vec<f64> = (0..m).map(|i| -d[n_real + i] * row_sign[i]).collect();
    let mut dual_inequality = vec![0.0; lp.n_inequalities()];
    let mut dual_equality = vec![0.0; lp.n_equalities()];
    let mut dual_lower = vec![0.0; n];
    let mut dual_upper = vec![0.0; n];
    for (i, kind) in kinds.iter().enumerate() {
        match *kind {
            RowKind::Inequality(r) => dual_inequality[r] = pi[i],
            RowKind::Equality(r) => dual_equality[r] = pi[i],
            RowKind::UpperBound(j) => dual_upper[j] = -pi[i],
        }
    }
    for (k, col) in columns.iter().enumerate().take(n_struct) {
        match *col {
            Column::Shifted(j) => dual_lower[j] = d[k],
            Column::Reflected(j) => dual_upper[j] = d[k],
            _ => {}
        }
    }

    let mut sol = LpSolution {
        status: LpStatus::Optimal,
        objective_value: lp.objective_value(&primal),
        primal,
        dual_inequality,
        dual_equality,
        dual_lower,
        dual_upper,
        max_kkt_residual: 0.0,
        iterations: start - budget,
        reason: None,
    };
    sol.max_kkt_residual = kkt_residuals(lp, &sol).max();
    if sol.max_kkt_residual > settings.tol_kkt {
        return Err(LpError::Numerical(format!("simplex vertex has KKT residual {:.3e}", sol.max_kkt_residual)));
    }
    Ok(sol)
}

fn iteration_limit(settings: &LpSettings) -> LpError {
    LpError::IterationLimit { iterations: settings.max_iterations, residual: f64::INFINITY }
}
