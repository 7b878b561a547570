use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::config::{ProxCenter, SolverConfig};
use super::direction::newton_direction;
use super::residual::{assemble_jacobian_unchecked, residual_unchecked, ResidualBreakdown};
use crate::error::QpError;
use crate::model::{kkt_error, Iterate, KktError, QpProblem};

/// Inner iterations stop once `|R|_inf` drops below this fraction of `tol_kkt`.
const INNER_TOL_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Solved,
    MaxIterations,
    LineSearchStalled,
    SingularSystem,
    InvalidProblem,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Solved => "Solved",
            SolveStatus::MaxIterations => "MaxIterations",
            SolveStatus::LineSearchStalled => "LineSearchStalled",
            SolveStatus::SingularSystem => "SingularSystem",
            SolveStatus::InvalidProblem => "InvalidProblem",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One accepted Newton step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub outer: usize,
    /// Step index within the outer iteration, starting at 0.
    pub inner: usize,
    pub sigma: f64,
    /// Merit after the step.
    pub merit: f64,
    /// Largest KKT certificate field after the step.
    pub kkt_max: f64,
    pub step_len: f64,
    /// Merit before the step, under the same `sigma` and center.
    pub prev_merit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub iterate: Iterate,
    pub status: SolveStatus,
    pub kkt: KktError,
    pub trace: Vec<TraceRecord>,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    pub factorizations: usize,
}

impl SolveResult {
    pub fn is_solved(&self) -> bool {
        self.status == SolveStatus::Solved
    }

    pub fn objective(&self, problem: &QpProblem) -> f64 {
        problem.objective(&self.iterate.z)
    }

    fn invalid(problem: &QpProblem) -> Self {
        SolveResult {
            iterate: Iterate::zeros(problem.n(), problem.p(), problem.q()),
            status: SolveStatus::InvalidProblem,
            kkt: KktError::default(),
            trace: Vec::new(),
            inner_iterations: 0,
            outer_iterations: 0,
            factorizations: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub step_len: f64,
    pub iterate: Iterate,
    pub residual: ResidualBreakdown,
}

fn backtrack(
    problem: &QpProblem,
    iterate: &Iterate,
    direction: &DVector<f64>,
    sigma: f64,
    center: &Iterate,
    cfg: &SolverConfig,
    merit0: f64,
) -> Result<LineSearchOutcome, QpError> {
    let mut t = 1.0;
    while t >= cfg.min_step {
        let trial = iterate.step(direction, t);
        let r = residual_unchecked(problem, &trial, sigma, center, &cfg.ncp);
        if r.merit <= (1.0 - 2.0 * cfg.armijo_c * t) * merit0 {
            return Ok(LineSearchOutcome {
                step_len: t,
                iterate: trial,
                residual: r,
            });
        }
        t *= cfg.backtrack_factor;
    }
    Err(QpError::LineSearchStalled)
}

/// Armijo backtracking on the merit `1/2 |R|^2`, trying the full step first.
///
/// Accepts the largest `t` in `{1, β, β², ...}` with
/// `merit(x + t d) <= (1 - 2 c t) merit(x)`.
pub fn line_search(
    problem: &QpProblem,
    iterate: &Iterate,
    direction: &DVector<f64>,
    sigma: f64,
    center: &Iterate,
    cfg: &SolverConfig,
) -> Result<LineSearchOutcome, QpError> {
    problem.check_iterate(iterate)?;
    crate::error::check_len("direction", problem.dim(), direction.len())?;
    let merit0 = residual_unchecked(problem, iterate, sigma, center, &cfg.ncp).merit;
    backtrack(problem, iterate, direction, sigma, center, cfg, merit0)
}

/// Solves the QP by σ-continuation around damped semi-smooth Newton steps.
///
/// Termination is decided by the unregularized KKT certificate
/// ([`kkt_error`]), never by `|R|`, so `Solved` always means every
/// certificate field is within `tol_kkt`.
pub fn solve(problem: &QpProblem, cfg: &SolverConfig, warm_start: Option<&Iterate>) -> SolveResult {
    if cfg.check().is_err() || (!cfg.skip_validation && !problem.validate().is_ok()) {
        return SolveResult::invalid(problem);
    }
    let mut x = match warm_start {
        Some(w) if problem.check_iterate(w).is_ok() => w.clone(),
        Some(_) => return SolveResult::invalid(problem),
        None => Iterate::initial(problem),
    };

    let (n, p, q) = (problem.n(), problem.p(), problem.q());
    let zero_center = Iterate::zeros(n, p, q);
    let inner_tol = INNER_TOL_FRACTION * cfg.tol_kkt;
    let mut trace = Vec::new();
    let mut factorizations = 0;

    let finish =
        |x: Iterate, status, kkt, trace: Vec<TraceRecord>, outer, factorizations| SolveResult {
            iterate: x,
            status,
            kkt,
            inner_iterations: trace.len(),
            trace,
            outer_iterations: outer,
            factorizations,
        };

    let mut kkt = kkt_error(problem, &x).expect("dimensions checked");
    if kkt.within(cfg.tol_kkt) {
        return finish(x, SolveStatus::Solved, kkt, trace, 0, 0);
    }

    for outer in 0..cfg.max_outer {
        let sigma = cfg.sigma_at(outer);
        let center = match cfg.prox_center {
            ProxCenter::Recenter => x.clone(),
            ProxCenter::FixedZero => zero_center.clone(),
        };
        let mut r = residual_unchecked(problem, &x, sigma, &center, &cfg.ncp);
        let mut accepted = 0;
        let mut stalled = false;

        for inner in 0..cfg.max_inner {
            if r.inf_norm() <= inner_tol {
                break;
            }
            let jac = assemble_jacobian_unchecked(problem, &x, sigma, &cfg.ncp);
            let dir = match newton_direction(&jac, &r.stacked(), cfg.jacobian_perturb) {
                Ok(d) => d,
                Err(_) => {
                    factorizations += 1 + 3;
                    return finish(
                        x,
                        SolveStatus::SingularSystem,
                        kkt,
                        trace,
                        outer + 1,
                        factorizations,
                    );
                }
            };
            factorizations += dir.factorizations;
            let step = match backtrack(problem, &x, &dir.step, sigma, &center, cfg, r.merit) {
                Ok(s) => s,
                Err(_) => {
                    stalled = true;
                    break;
                }
            };
            let prev_merit = r.merit;
            x = step.iterate;
            r = step.residual;
            accepted += 1;
            kkt = kkt_error(problem, &x).expect("dimensions checked");
            trace.push(TraceRecord {
                outer,
                inner,
                sigma,
                merit: r.merit,
                kkt_max: kkt.max(),
                step_len: step.step_len,
                prev_merit,
            });
            if kkt.within(cfg.tol_kkt) {
                return finish(
                    x,
                    SolveStatus::Solved,
                    kkt,
                    trace,
                    outer + 1,
                    factorizations,
                );
            }
        }

        // Once σ sits at its floor, a stage that cannot move (or that would
        // be repeated verbatim under fixed centers) will never recover.
        let at_floor = sigma <= cfg.sigma_min;
        if stalled && at_floor && (accepted == 0 || cfg.prox_center == ProxCenter::FixedZero) {
            return finish(
                x,
                SolveStatus::LineSearchStalled,
                kkt,
                trace,
                outer + 1,
                factorizations,
            );
        }
    }
    finish(
        x,
        SolveStatus::MaxIterations,
        kkt,
        trace,
        cfg.max_outer,
        factorizations,
    )
}
