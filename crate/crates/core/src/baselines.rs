//! Full-precision reference: basis pursuit `min ‖x‖₁ s.t. Φx = y_fp`.

use faer::{Mat, MatRef};
use thiserror::Error;

use crate::acquisition::SensingEnsemble;
use crate::lp::{solve_lp, LinearProgram, LpError, LpSettings, LpStatus};
use crate::patch::{decompose, patch_seed, PatchGrid, SensingPolicy, StitchAccumulator};
use crate::signal::{ConvolutionOperator, Image};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("basis pursuit is {status:?}: {reason}")]
    NotOptimal { status: LpStatus, reason: String },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Patch(#[from] crate::patch::PatchError),
}

/// Epigraph LP over `[x | t]`: `min Σt` with `t ± x ≥ 0` and `Φx = y_fp`.
pub fn basis_pursuit_lp(phi: MatRef<'_, f64>, y_fp: &[f64]) -> Result<LinearProgram, BaselineError> {
    let (m, n) = (phi.nrows(), phi.ncols());
    if y_fp.len() != m {
        return Err(BaselineError::DimensionMismatch(format!("Φ has {m} rows but y has {}", y_fp.len())));
    }
    let mut c = vec![0.0; 2 * n];
    c[n..].fill(1.0);
    let g = Mat::from_fn(2 * n, 2 * n, |r, v| {
        let i = r / 2;
        if v == n + i {
            1.0
        } else if v == i {
            if r % 2 == 0 {
                -1.0
            } else {
                1.0
            }
        } else {
            0.0
        }
    });
    let e = Mat::from_fn(m, 2 * n, |k, v| if v < n { phi[(k, v)] } else { 0.0 });
    Ok(LinearProgram::builder(c).inequalities(g, vec![0.0; 2 * n]).equalities(e, y_fp.to_vec()).build()?)
}

pub fn oracle_recover(phi: MatRef<'_, f64>, y_fp: &[f64], settings: &LpSettings) -> Result<Vec<f64>, BaselineError> {
    let lp = basis_pursuit_lp(phi, y_fp)?;
    let sol = solve_lp(&lp, settings)?;
    if sol.status != LpStatus::Optimal {
        return Err(BaselineError::NotOptimal { status: sol.status, reason: sol.reason.unwrap_or_default() });
    }
    Ok(sol.primal[..phi.ncols()].to_vec())
}

/// Oracle counterpart of [`crate::patch::recover_image`]: each tile's
/// unquantized projections `A z⁽ⁱʲ⁾` are inverted and the source patches
/// stitched the same way. Sensing matrices follow the same seeding.
pub fn oracle_recover_image(
    z: &Image,
    grid: &PatchGrid,
    op: &ConvolutionOperator,
    m: usize,
    base_seed: u64,
    policy: SensingPolicy,
    settings: &LpSettings,
) -> Result<Image, BaselineError> {
    let (_, tiles) = decompose(z, grid.d, grid.p)?;
    let mut acc = StitchAccumulator::new(grid.rows, grid.cols);
    for (&o, tile) in grid.origins.iter().zip(&tiles) {
        let a = SensingEnsemble::new(m, grid.d * grid.d, patch_seed(base_seed, o, policy));
        let y_fp = crate::lp::mat_vec(a.matrix().as_ref(), tile);
        let estimate = if y_fp.iter().all(|&v| v == 0.0) {
            vec![0.0; op.input_len()]
        } else {
            let phi = a.matrix() * op.matrix();
            oracle_recover(phi.as_ref(), &y_fp, settings)?
        };
        acc.add(grid, o, &estimate);
    }
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_operator_returns_the_data() {
        let phi = Mat::<f64>::identity(4, 4);
        let x = [0.0, 2.5, 0.0, -1.0];
        let xh = oracle_recover(phi.as_ref(), &x, &LpSettings::default()).unwrap();
        for (a, b) in xh.iter().zip(&x) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn lp_shape() {
        let phi = Mat::<f64>::zeros(3, 5);
        let lp = basis_pursuit_lp(phi.as_ref(), &[0.0; 3]).unwrap();
        assert_eq!((lp.n_vars(), lp.n_inequalities(), lp.n_equalities()), (10, 10, 3));
        assert!(basis_pursuit_lp(phi.as_ref(), &[0.0; 2]).is_err());
    }
}
