use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, QpError};

/// Perturbed retries after the unshifted factorization fails.
const PERTURB_ATTEMPTS: usize = 3;
const REFINEMENT_STEPS: usize = 2;
const SOLVE_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSolve {
    pub step: DVector<f64>,
    /// LU factorizations performed, including failed ones.
    pub factorizations: usize,
    /// Diagonal shift of the system that was finally solved (0 when unperturbed).
    pub shift: f64,
}

fn inf_norm(x: &DVector<f64>) -> f64 {
    x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn try_solve(m: &DMatrix<f64>, rhs: &DVector<f64>, bound: f64) -> Option<DVector<f64>> {
    let lu = m.clone().lu();
    let mut d = lu.solve(rhs)?;
    for _ in 0..REFINEMENT_STEPS {
        if d.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let res = rhs - m * &d;
        if inf_norm(&res) <= bound {
            return Some(d);
        }
        d += lu.solve(&res)?;
    }
    let res = rhs - m * &d;
    (d.iter().all(|x| x.is_finite()) && inf_norm(&res) <= bound).then_some(d)
}

/// Solves `J d = -R` by LU with partial pivoting plus iterative refinement.
///
/// A factorization counts as failed when it hits an exact zero pivot or the
/// refined residual exceeds `1e-10 (1 + |R|_inf)`. Failures are retried on
/// `J + δI` with `δ = perturb, 10 perturb, 100 perturb`.
pub fn newton_direction(
    jacobian: &DMatrix<f64>,
    residual: &DVector<f64>,
    perturb: f64,
) -> Result<DirectionSolve, QpError> {
    let dim = residual.len();
    if !jacobian.is_square() {
        return Err(QpError::DimensionMismatch {
            field: "jacobian",
            expected: "square".into(),
            found: format!("{}x{}", jacobian.nrows(), jacobian.ncols()),
        });
    }
    check_len("residual", jacobian.nrows(), dim)?;
    let rhs = -residual;
    let bound = SOLVE_RTOL * (1.0 + inf_norm(residual));

    if let Some(step) = try_solve(jacobian, &rhs, bound) {
        return Ok(DirectionSolve {
            step,
            factorizations: 1,
            shift: 0.0,
        });
    }
    let mut shift = perturb;
    for attempt in 0..PERTURB_ATTEMPTS {
        let shifted = jacobian + DMatrix::identity(dim, dim) * shift;
        if let Some(step) = try_solve(&shifted, &rhs, bound) {
            return Ok(DirectionSolve {
                step,
                factorizations: attempt + 2,
                shift,
            });
        }
        shift *= 10.0;
    }
    Err(QpError::SingularSystem)
}
