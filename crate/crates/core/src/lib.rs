//! Dense convex quadratic programming by a regularized semi-smooth Newton
//! method applied to a penalized Fischer-Burmeister reformulation of the
//! KKT conditions.
//!
//! ```text
//!     minimize    1/2 z' H z + f' z
//!     subject to  G z  = h
//!                 A z <= b
//! ```
//!
//! The crate also ships an active-set enumeration oracle for verification,
//! implicit-differentiation sensitivities of the solution map, and the
//! JSON problem format used by the `ssnqp` command-line tool.
//!
//! ```
//! use nalgebra::{dmatrix, dvector};
//! use ssnqp_core::{solve, ProblemData, QpProblem, SolveStatus, SolverConfig};
//!
//! // min 1/2 z^2  s.t.  z >= 1
//! let problem = QpProblem::new(
//!     ProblemData::unconstrained(dmatrix![1.0], dvector![0.0])
//!         .with_inequalities(dmatrix![-1.0], dvector![-1.0]),
//! )
//! .unwrap();
//! let result = solve(&problem, &SolverConfig::default(), None);
//! assert_eq!(result.status, SolveStatus::Solved);
//! assert!((result.iterate.z[0] - 1.0).abs() < 1e-8);
//! ```

pub mod error;
pub mod format;
pub mod model;
pub mod ncp;
pub mod newton;
pub mod oracle;
pub mod sensitivity;

pub use error::QpError;
pub use model::{
    kkt_error, random_problem, validate_problem, GeneratorSpec, Iterate, KktError, ProblemData,
    QpProblem, ValidationReport, Violation,
};
pub use ncp::{phi, phi_derivative, phi_vec, DerivativePair, NcpConfig};
pub use newton::{
    assemble_jacobian, line_search, newton_direction, residual, solve, ProxCenter,
    ResidualBreakdown, SolveResult, SolveStatus, SolverConfig, TraceRecord,
};
pub use oracle::{
    active_set_solve, compare_with_oracle, oracle_agrees, AgreementReport, OracleLimits,
    OracleResult, OracleStatus,
};
pub use sensitivity::{solution_sensitivity, vjp, SensitivityResult, VjpResult};
