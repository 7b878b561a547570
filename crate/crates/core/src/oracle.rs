//! Brute-force reference solver by enumeration of candidate active sets.
//!
//! For every subset `S` of inequality rows the equality-constrained KKT system
//!
//! ```text
//!     [ H    G'   A_S' ] [ z   ]   [ -f  ]
//!     [ G    0    0    ] [ λ   ] = [  h  ]
//!     [ A_S  0    0    ] [ v_S ]   [ b_S ]
//! ```
//!
//! is solved; candidates with `v_S >= 0` that satisfy every inequality are
//! kept and the one with least objective wins. Cost is `2^q` dense solves.

use nalgebra::{DMatrix, DVector};

use crate::model::{Iterate, ProblemData, QpProblem};
use crate::newton::SolveResult;

const DUAL_FEAS_TOL: f64 = 1e-9;
const PRIMAL_FEAS_TOL: f64 = 1e-9;
const TIE_TOL: f64 = 1e-9;
const DISTINCT_TOL: f64 = 1e-6;
const RANK_RTOL: f64 = 1e-11;
const CONSISTENCY_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_q: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_q: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TooLarge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub solution: Option<Iterate>,
    /// Optimal value; `+inf` when infeasible, `-inf` when unbounded, NaN when not attempted.
    pub objective: f64,
    /// Zero-based inequality indices of the winning subset, ascending.
    pub active_set: Vec<usize>,
    /// Set when optimal candidates disagree in `z` or in the multipliers, or
    /// when the winning system is rank deficient.
    pub multiplicity_flag: bool,
    pub status: OracleStatus,
}

struct Candidate {
    subset: Vec<usize>,
    iterate: Iterate,
    objective: f64,
    rank_deficient: bool,
}

fn inf_norm(x: &DVector<f64>) -> f64 {
    x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn solve_subset(problem: &QpProblem, subset: &[usize]) -> Option<Candidate> {
    let (n, p, q) = (problem.n(), problem.p(), problem.q());
    let m = subset.len();
    let dim = n + p + m;
    let a = problem.ineq_matrix();
    let g = problem.eq_matrix();

    let mut k = DMatrix::zeros(dim, dim);
    k.view_mut((0, 0), (n, n)).copy_from(problem.hessian());
    k.view_mut((0, n), (n, p)).copy_from(&g.transpose());
    k.view_mut((n, 0), (p, n)).copy_from(g);
    let mut rhs = DVector::zeros(dim);
    rhs.rows_mut(0, n).copy_from(&(-problem.linear_cost()));
    rhs.rows_mut(n, p).copy_from(problem.eq_rhs());
    for (slot, &row) in subset.iter().enumerate() {
        for c in 0..n {
            k[(n + p + slot, c)] = a[(row, c)];
            k[(c, n + p + slot)] = a[(row, c)];
        }
        rhs[n + p + slot] = problem.ineq_rhs()[row];
    }

    let svd = k.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    let rank_tol = RANK_RTOL * s_max.max(1.0);
    let x = svd.solve(&rhs, rank_tol).ok()?;
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    if inf_norm(&(&k * &x - &rhs)) > CONSISTENCY_RTOL * (1.0 + inf_norm(&rhs)) {
        return None;
    }

    let z = x.rows(0, n).into_owned();
    let lambda = x.rows(n, p).into_owned();
    let mut v = DVector::zeros(q);
    for (slot, &row) in subset.iter().enumerate() {
        v[row] = x[n + p + slot];
    }
    if v.iter().any(|&vi| vi < -DUAL_FEAS_TOL) {
        return None;
    }
    let y = problem.slack(&z);
    if y.iter().any(|&yi| yi < -PRIMAL_FEAS_TOL) {
        return None;
    }
    let objective = problem.objective(&z);
    Some(Candidate {
        subset: subset.to_vec(),
        iterate: Iterate::new(z, lambda, v),
        objective,
        rank_deficient: s_min <= rank_tol,
    })
}

fn enumerate(problem: &QpProblem) -> Vec<Candidate> {
    let q = problem.q();
    let mut out = Vec::new();
    let mut subset = Vec::with_capacity(q);
    for mask in 0u64..(1u64 << q) {
        subset.clear();
        subset.extend((0..q).filter(|i| mask >> i & 1 == 1));
        if let Some(c) = solve_subset(problem, &subset) {
            out.push(c);
        }
    }
    out
}

fn best_index(candidates: &[Candidate]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let cur = &candidates[b];
                if c.objective < cur.objective - TIE_TOL
                    || ((c.objective - cur.objective).abs() <= TIE_TOL && c.subset < cur.subset)
                {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

fn duals_gap(a: &Iterate, b: &Iterate) -> f64 {
    inf_norm(&(&a.lambda - &b.lambda)).max(inf_norm(&(&a.v - &b.v)))
}

/// Runs the enumeration oracle.
///
/// When no candidate survives, the same enumeration on `min 1/2 |z|^2`
/// over the same constraints decides between `Infeasible` and `Unbounded`.
pub fn active_set_solve(problem: &QpProblem, limits: OracleLimits) -> OracleResult {
    let not_optimal = |status, objective| OracleResult {
        solution: None,
        objective,
        active_set: Vec::new(),
        multiplicity_flag: false,
        status,
    };
    if problem.q() > limits.max_q || problem.q() >= 63 {
        return not_optimal(OracleStatus::TooLarge, f64::NAN);
    }
    let candidates = enumerate(problem);
    let Some(best) = best_index(&candidates) else {
        let n = problem.n();
        let data = problem.data();
        let feasibility = QpProblem::new(ProblemData {
            hessian: DMatrix::identity(n, n),
            linear_cost: DVector::zeros(n),
            ..data.clone()
        })
        .expect("shapes already validated");
        return if best_index(&enumerate(&feasibility)).is_some() {
            not_optimal(OracleStatus::Unbounded, f64::NEG_INFINITY)
        } else {
            not_optimal(OracleStatus::Infeasible, f64::INFINITY)
        };
    };
    let winner = &candidates[best];
    let multiplicity_flag = winner.rank_deficient
        || candidates.iter().any(|c| {
            (c.objective - winner.objective).abs() <= TIE_TOL
                && (inf_norm(&(&c.iterate.z - &winner.iterate.z)) > DISTINCT_TOL
                    || duals_gap(&c.iterate, &winner.iterate) > DISTINCT_TOL)
        });
    OracleResult {
        solution: Some(winner.iterate.clone()),
        objective: winner.objective,
        active_set: winner.subset.clone(),
        multiplicity_flag,
        status: OracleStatus::Optimal,
    }
}

/// Outcome of comparing a solver result against the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    pub agrees: bool,
    pub oracle_status: OracleStatus,
    pub primal_gap: f64,
    pub objective_gap: f64,
    /// `None` when the multipliers were not compared.
    pub dual_gap: Option<f64>,
    pub multiplicity_flag: bool,
}

/// Multipliers are compared at this multiple of the primal tolerance.
pub const DUAL_TOL_FACTOR: f64 = 10.0;

/// Compares `result` to a precomputed oracle answer.
pub fn compare_with_oracle(
    problem: &QpProblem,
    result: &SolveResult,
    oracle: &OracleResult,
    tol: f64,
) -> AgreementReport {
    let Some(sol) = oracle.solution.as_ref() else {
        return AgreementReport {
            agrees: false,
            oracle_status: oracle.status,
            primal_gap: f64::INFINITY,
            objective_gap: f64::INFINITY,
            dual_gap: None,
            multiplicity_flag: oracle.multiplicity_flag,
        };
    };
    let primal_gap = inf_norm(&(&result.iterate.z - &sol.z));
    let objective_gap = (problem.objective(&result.iterate.z) - oracle.objective).abs();
    let dual_gap = (!oracle.multiplicity_flag).then(|| duals_gap(&result.iterate, sol));
    let agrees = primal_gap <= tol
        && objective_gap <= tol * (1.0 + oracle.objective.abs())
        && dual_gap.is_none_or(|g| g <= DUAL_TOL_FACTOR * tol);
    AgreementReport {
        agrees,
        oracle_status: oracle.status,
        primal_gap,
        objective_gap,
        dual_gap,
        multiplicity_flag: oracle.multiplicity_flag,
    }
}

/// Runs the oracle with default limits and compares it with `result`.
pub fn oracle_agrees(problem: &QpProblem, result: &SolveResult, tol: f64) -> AgreementReport {
    let oracle = active_set_solve(problem, OracleLimits::default());
    compare_with_oracle(problem, result, &oracle, tol)
}
