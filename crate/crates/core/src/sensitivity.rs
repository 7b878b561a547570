//! Implicit differentiation of the solution map through the final Newton system.
//!
//! At a solution `R(x*; θ) = 0`, so `J dx*/dθ = -∂R/∂θ` with `J` the
//! generalized Jacobian at `σ = sigma_min`. The residual depends on the
//! vector data through
//!
//! ```text
//!     ∂R/∂f = [I; 0; 0]     ∂R/∂h = [0; I; 0]     ∂R/∂b = [0; 0; D_y]
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, QpError};
use crate::model::QpProblem;
use crate::newton::residual::{assemble_jacobian_unchecked, complementarity_scaling};
use crate::newton::{SolveResult, SolverConfig};

/// Pairs with both `|y_i|` and `|v_i|` below this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityResult {
    pub dz_df: DMatrix<f64>,
    pub dz_db: DMatrix<f64>,
    pub dz_dh: DMatrix<f64>,
    /// False when some constraint is weakly active (`y_i = v_i = 0`); the
    /// derivatives are then those of the selected generalized Jacobian.
    pub wellposed: bool,
}

/// Gradients of `g' z*` with respect to every piece of problem data.
#[derive(Debug, Clone, PartialEq)]
pub struct VjpResult {
    pub grad_f: DVector<f64>,
    pub grad_h: DVector<f64>,
    pub grad_b: DVector<f64>,
    /// Symmetric gradient with respect to `H`.
    pub grad_hessian: DMatrix<f64>,
    pub grad_eq_matrix: DMatrix<f64>,
    pub grad_ineq_matrix: DMatrix<f64>,
}

fn degenerate(problem: &QpProblem, result: &SolveResult) -> bool {
    let y = problem.slack(&result.iterate.z);
    y.iter()
        .zip(result.iterate.v.iter())
        .any(|(yi, vi)| yi.abs() < DEGENERACY_TOL && vi.abs() < DEGENERACY_TOL)
}

fn finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

fn check_solved(problem: &QpProblem, result: &SolveResult) -> Result<(), QpError> {
    if !result.is_solved() {
        return Err(QpError::NotSolved);
    }
    problem.check_iterate(&result.iterate)
}

/// Forward sensitivities of `z*` with respect to `f`, `b` and `h`.
pub fn solution_sensitivity(
    problem: &QpProblem,
    result: &SolveResult,
    cfg: &SolverConfig,
) -> Result<SensitivityResult, QpError> {
    check_solved(problem, result)?;
    let (n, p, q) = (problem.n(), problem.p(), problem.q());
    let dim = n + p + q;
    let jac = assemble_jacobian_unchecked(problem, &result.iterate, cfg.sigma_min, &cfg.ncp);
    let (d_y, _) = complementarity_scaling(problem, &result.iterate, &cfg.ncp);

    // Columns: [f (n) | h (p) | b (q)].
    let mut rhs = DMatrix::zeros(dim, n + p + q);
    for i in 0..n {
        rhs[(i, i)] = -1.0;
    }
    for i in 0..p {
        rhs[(n + i, n + i)] = -1.0;
    }
    for i in 0..q {
        rhs[(n + p + i, n + p + i)] = -d_y[i];
    }
    let lu = jac.lu();
    let x = lu.solve(&rhs).ok_or(QpError::SingularSystem)?;
    if !finite(&x) {
        return Err(QpError::SingularSystem);
    }
    Ok(SensitivityResult {
        dz_df: x.view((0, 0), (n, n)).into_owned(),
        dz_dh: x.view((0, n), (n, p)).into_owned(),
        dz_db: x.view((0, n + p), (n, q)).into_owned(),
        wellposed: !degenerate(problem, result),
    })
}

/// Reverse-mode product `g' dz*/dθ` from a single transposed solve
/// `J' w = -[g; 0; 0]`.
pub fn vjp(
    problem: &QpProblem,
    result: &SolveResult,
    cfg: &SolverConfig,
    z_cotangent: &DVector<f64>,
) -> Result<VjpResult, QpError> {
    check_solved(problem, result)?;
    let (n, p, q) = (problem.n(), problem.p(), problem.q());
    check_len("z_cotangent", n, z_cotangent.len())?;
    let it = &result.iterate;
    let jac = assemble_jacobian_unchecked(problem, it, cfg.sigma_min, &cfg.ncp);
    let (d_y, _) = complementarity_scaling(problem, it, &cfg.ncp);

    let mut rhs = DVector::zeros(n + p + q);
    rhs.rows_mut(0, n).copy_from(&(-z_cotangent));
    let w = jac
        .transpose()
        .lu()
        .solve(&rhs)
        .ok_or(QpError::SingularSystem)?;
    if w.iter().any(|x| !x.is_finite()) {
        return Err(QpError::SingularSystem);
    }
    let w_z = w.rows(0, n).into_owned();
    let w_l = w.rows(n, p).into_owned();
    let w_v = w.rows(n + p, q).into_owned();
    let grad_b = d_y.component_mul(&w_v);

    // ∂R1/∂H_ij = z_j e_i; ∂R1/∂G_kj = λ_k e_j, ∂R2/∂G_kj = -z_j e_k;
    // ∂R1/∂A_ij = v_i e_j, ∂R3/∂A_ij = -d_y,i z_j e_i.
    let outer = &w_z * it.z.transpose();
    let grad_hessian = (&outer + outer.transpose()) * 0.5;
    let grad_eq_matrix = &it.lambda * w_z.transpose() - &w_l * it.z.transpose();
    let grad_ineq_matrix = &it.v * w_z.transpose() - &grad_b * it.z.transpose();

    Ok(VjpResult {
        grad_f: w_z,
        grad_h: w_l,
        grad_b,
        grad_hessian,
        grad_eq_matrix,
        grad_ineq_matrix,
    })
}
