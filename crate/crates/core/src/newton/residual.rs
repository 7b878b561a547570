use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, QpError};
use crate::model::{Iterate, QpProblem};
use crate::ncp::{phi_derivative_unchecked, phi_unchecked, NcpConfig};

/// The three blocks of the regularized residual and its merit `1/2 |R|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBreakdown {
    pub stationarity_block: DVector<f64>,
    pub equality_block: DVector<f64>,
    pub complementarity_block: DVector<f64>,
    pub merit: f64,
}

impl ResidualBreakdown {
    pub fn stacked(&self) -> DVector<f64> {
        let (n, p, q) = (
            self.stationarity_block.len(),
            self.equality_block.len(),
            self.complementarity_block.len(),
        );
        let mut r = DVector::zeros(n + p + q);
        r.rows_mut(0, n).copy_from(&self.stationarity_block);
        r.rows_mut(n, p).copy_from(&self.equality_block);
        r.rows_mut(n + p, q).copy_from(&self.complementarity_block);
        r
    }

    pub fn inf_norm(&self) -> f64 {
        self.stationarity_block
            .iter()
            .chain(self.equality_block.iter())
            .chain(self.complementarity_block.iter())
            .fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }
}

/// Evaluates `R` at `iterate` with weight `sigma` and proximal center `center`.
///
/// `center.v` is ignored; the complementarity block carries no regularization.
pub fn residual(
    problem: &QpProblem,
    iterate: &Iterate,
    sigma: f64,
    center: &Iterate,
    ncp: &NcpConfig,
) -> Result<ResidualBreakdown, QpError> {
    problem.check_iterate(iterate)?;
    check_len("center z", problem.n(), center.z.len())?;
    check_len("center lambda", problem.p(), center.lambda.len())?;
    if sigma.is_nan() || sigma < 0.0 {
        return Err(QpError::InvalidConfig(format!(
            "sigma = {sigma} must be >= 0"
        )));
    }
    Ok(residual_unchecked(problem, iterate, sigma, center, ncp))
}

pub(crate) fn residual_unchecked(
    problem: &QpProblem,
    iterate: &Iterate,
    sigma: f64,
    center: &Iterate,
    ncp: &NcpConfig,
) -> ResidualBreakdown {
    let stationarity_block =
        problem.lagrangian_gradient(iterate) + (&iterate.z - &center.z) * sigma;
    let equality_block = problem.eq_rhs() - problem.eq_matrix() * &iterate.z
        + (&iterate.lambda - &center.lambda) * sigma;
    let y = problem.slack(&iterate.z);
    let complementarity_block = y.zip_map(&iterate.v, |yi, vi| phi_unchecked(yi, vi, ncp.alpha));
    let merit = 0.5
        * (stationarity_block.norm_squared()
            + equality_block.norm_squared()
            + complementarity_block.norm_squared());
    ResidualBreakdown {
        stationarity_block,
        equality_block,
        complementarity_block,
        merit,
    }
}

/// Diagonals `(D_y, D_v)` of the complementarity block at `iterate`.
pub(crate) fn complementarity_scaling(
    problem: &QpProblem,
    iterate: &Iterate,
    ncp: &NcpConfig,
) -> (DVector<f64>, DVector<f64>) {
    let y = problem.slack(&iterate.z);
    let q = problem.q();
    let mut d_y = DVector::zeros(q);
    let mut d_v = DVector::zeros(q);
    for i in 0..q {
        let d = phi_derivative_unchecked(y[i], iterate.v[i], ncp);
        d_y[i] = d.d_y;
        d_v[i] = d.d_v;
    }
    (d_y, d_v)
}

/// Element of the generalized Jacobian of `R`:
///
/// ```text
///     [ H + σI     G'    A'  ]
///     [ -G         σI    0   ]
///     [ -D_y A     0     D_v ]
/// ```
pub fn assemble_jacobian(
    problem: &QpProblem,
    iterate: &Iterate,
    sigma: f64,
    ncp: &NcpConfig,
) -> Result<DMatrix<f64>, QpError> {
    problem.check_iterate(iterate)?;
    if sigma.is_nan() || sigma < 0.0 {
        return Err(QpError::InvalidConfig(format!(
            "sigma = {sigma} must be >= 0"
        )));
    }
    Ok(assemble_jacobian_unchecked(problem, iterate, sigma, ncp))
}

pub(crate) fn assemble_jacobian_unchecked(
    problem: &QpProblem,
    iterate: &Iterate,
    sigma: f64,
    ncp: &NcpConfig,
) -> DMatrix<f64> {
    let (n, p, q) = (problem.n(), problem.p(), problem.q());
    let (d_y, d_v) = complementarity_scaling(problem, iterate, ncp);
    let g = problem.eq_matrix();
    let a = problem.ineq_matrix();
    let mut j = DMatrix::zeros(n + p + q, n + p + q);

    j.view_mut((0, 0), (n, n)).copy_from(problem.hessian());
    for i in 0..n {
        j[(i, i)] += sigma;
    }
    j.view_mut((0, n), (n, p)).copy_from(&g.transpose());
    j.view_mut((0, n + p), (n, q)).copy_from(&a.transpose());

    j.view_mut((n, 0), (p, n)).copy_from(&(-g));
    for i in 0..p {
        j[(n + i, n + i)] = sigma;
    }

    for i in 0..q {
        for c in 0..n {
            j[(n + p + i, c)] = -d_y[i] * a[(i, c)];
        }
        j[(n + p + i, n + p + i)] = d_v[i];
    }
    j
}
