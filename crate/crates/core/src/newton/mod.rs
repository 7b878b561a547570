//! Regularized semi-smooth Newton solver.
//!
//! The KKT system is rewritten as the root-finding problem
//!
//! ```text
//!            [ Hz + f + G'λ + A'v + σ(z - z̄) ]
//!     R(x) = [ -Gz + h + σ(λ - λ̄)           ]  = 0,   y = b - Az
//!            [ phi(y, v)                      ]
//! ```
//!
//! and solved by damped Newton steps on the merit `1/2 |R|^2`, inside an
//! outer loop that drives `σ` toward `sigma_min` and (by default) moves the
//! proximal centers `(z̄, λ̄)` to the latest iterate.

mod config;
mod direction;
pub(crate) mod residual;
mod solve;

pub use config::{ProxCenter, SolverConfig};
pub use direction::{newton_direction, DirectionSolve};
pub use residual::{assemble_jacobian, residual, ResidualBreakdown};
pub use solve::{line_search, solve, LineSearchOutcome, SolveResult, SolveStatus, TraceRecord};
