//! Plain-text dump of an LP instance for offline inspection.
//!
//! ```text
//! lp <n_vars> <n_inequalities> <n_equalities>
//! objective
//! c_1 ... c_n
//! inequalities
//! g_i1 ... g_in >= h_i
//! equalities
//! e_i1 ... e_in = b_i
//! bounds
//! l_j u_j
//! ```
//!
//! Floats use Rust's shortest round-trip decimal form, so a dump reads back
//! bit-exactly. Infinite bounds are written `inf` / `-inf`.

use std::fmt::Write as _;

use faer::Mat;

use super::{LinearProgram, LpError, VarBounds};

pub fn write_lp_text(lp: &LinearProgram) -> String {
    let n = lp.n_vars();
    let mut out = String::new();
    let _ = writeln!(out, "lp {} {} {}", n, lp.n_inequalities(), lp.n_equalities());
    out.push_str("objective\n");
    push_row(&mut out, lp.objective().iter().copied());
    out.push('\n');
    out.push_str("inequalities\n");
    let g = lp.inequality_matrix();
    for i in 0..lp.n_inequalities() {
        push_row(&mut out, (0..n).map(|j| g[(i, j)]));
        let _ = writeln!(out, " >= {}", lp.inequality_rhs()[i]);
    }
    out.push_str("equalities\n");
    let e = lp.equality_matrix();
    for i in 0..lp.n_equalities() {
        push_row(&mut out, (0..n).map(|j| e[(i, j)]));
        let _ = writeln!(out, " = {}", lp.equality_rhs()[i]);
    }
    out.push_str("bounds\n");
    for b in lp.bounds() {
        let _ = writeln!(out, "{} {}", b.lower, b.upper);
    }
    out
}

fn push_row(out: &mut String, values: impl Iterator<Item = f64>) {
    for (k, v) in values.enumerate() {
        if k > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
}

fn parse_floats(line: &str) -> Result<Vec<f64>, LpError> {
    line.split_whitespace().map(|t| t.parse::<f64>().map_err(|e| LpError::Parse(format!("{t:?}: {e}")))).collect()
}

pub fn read_lp_text(text: &str) -> Result<LinearProgram, LpError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut next = |what: &str| lines.next().ok_or_else(|| LpError::Parse(format!("missing {what}")));

    let header: Vec<&str> = next("header")?.split_whitespace().collect();
    if header.len() != 4 || header[0] != "lp" {
        return Err(LpError::Parse("header must read `lp <n> <m_ineq> <m_eq>`".into()));
    }
    let dims: Vec<usize> = header[1..]
        .iter()
        .map(|t| t.parse().map_err(|_| LpError::Parse(format!("bad dimension {t:?}"))))
        .collect::<Result<_, _>>()?;
    let (n, mi, me) = (dims[0], dims[1], dims[2]);

    let expect = |line: &str, tag: &str| {
        if line.trim() == tag {
            Ok(())
        } else {
            Err(LpError::Parse(format!("expected `{tag}`, found {line:?}")))
        }
    };

    expect(next("objective tag")?, "objective")?;
    let objective = if n == 0 { Vec::new() } else { parse_floats(next("objective")?)? };
    if objective.len() != n {
        return Err(LpError::Parse(format!("objective has {} entries, expected {n}", objective.len())));
    }

    let mut read_rows = |tag: &str, sep: &str, count: usize| -> Result<(Mat<f64>, Vec<f64>), LpError> {
        expect(next(tag)?, tag)?;
        let mut entries = Vec::with_capacity(count);
        let mut rhs = Vec::with_capacity(count);
        for _ in 0..count {
            let line = next(tag)?;
            let (lhs, r) =
                line.split_once(sep).ok_or_else(|| LpError::Parse(format!("row without `{sep}`: {line:?}")))?;
            let row = parse_floats(lhs)?;
            if row.len() != n {
                return Err(LpError::Parse(format!("row has {} entries, expected {n}", row.len())));
            }
            entries.push(row);
            rhs.push(r.trim().parse::<f64>().map_err(|e| LpError::Parse(format!("rhs {r:?}: {e}")))?);
        }
        Ok((Mat::from_fn(count, n, |i, j| entries[i][j]), rhs))
    };
    let (g, h) = read_rows("inequalities", ">=", mi)?;
    let (e, b) = read_rows("equalities", "=", me)?;

    expect(next("bounds tag")?, "bounds")?;
    let mut bounds = Vec::with_capacity(n);
    for _ in 0..n {
        let pair = parse_floats(next("bounds")?)?;
        if pair.len() != 2 {
            return Err(LpError::Parse("bounds line needs two values".into()));
        }
        bounds.push(VarBounds::new(pair[0], pair[1]));
    }

    LinearProgram::builder(objective).inequalities(g, h).equalities(e, b).bounds(bounds).build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let g = Mat::from_fn(2, 3, |i, j| (i as f64 + 0.1) * (j as f64 - 1.0 / 3.0));
        let e = Mat::from_fn(1, 3, |_, j| 1.0 + j as f64 * 1e-17);
        let lp = LinearProgram::builder(vec![1.5, -2.0, std::f64::consts::PI])
            .inequalities(g, vec![0.25, -1e-300])
            .equalities(e, vec![7.0])
            .bounds(vec![VarBounds::FREE, VarBounds::NONNEGATIVE, VarBounds::new(-1.0, 2.5)])
            .build()
            .unwrap();
        let text = write_lp_text(&lp);
        let back = read_lp_text(&text).unwrap();
        assert_eq!(write_lp_text(&back), text);
        assert_eq!(back.objective(), lp.objective());
        assert_eq!(back.bounds(), lp.bounds());
        assert_eq!(back.inequality_rhs(), lp.inequality_rhs());
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_lp_text("nope").is_err());
        assert!(read_lp_text("lp 1 0 0\nobjective\nx\ninequalities\nequalities\nbounds\n0 1\n").is_err());
    }
}
