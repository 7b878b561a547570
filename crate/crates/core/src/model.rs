//! Problem data, primal-dual iterates and the unregularized KKT certificate.
//!
//! Problems have the form
//!
//! ```text
//!     minimize    1/2 z' H z + f' z
//!     subject to  G z  = h
//!                 A z <= b
//! ```
//!
//! with `H` symmetric positive semidefinite. Multipliers follow the sign
//! convention of the Lagrangian `L = 1/2 z'Hz + f'z + λ'(Gz - h) + v'(Az - b)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, QpError};

/// Relative tolerance used for the symmetry invariant on `H`.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted by [`validate_problem`].
pub const PSD_TOL: f64 = 1e-10;

/// Raw, unchecked problem data as assembled by a caller or a file parser.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    pub hessian: DMatrix<f64>,
    pub linear_cost: DVector<f64>,
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
    pub ineq_matrix: DMatrix<f64>,
    pub ineq_rhs: DVector<f64>,
}

impl ProblemData {
    /// Problem with only a quadratic objective.
    pub fn unconstrained(hessian: DMatrix<f64>, linear_cost: DVector<f64>) -> Self {
        let n = linear_cost.len();
        ProblemData {
            hessian,
            linear_cost,
            eq_matrix: DMatrix::zeros(0, n),
            eq_rhs: DVector::zeros(0),
            ineq_matrix: DMatrix::zeros(0, n),
            ineq_rhs: DVector::zeros(0),
        }
    }

    pub fn with_equalities(mut self, g: DMatrix<f64>, h: DVector<f64>) -> Self {
        self.eq_matrix = g;
        self.eq_rhs = h;
        self
    }

    pub fn with_inequalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.ineq_matrix = a;
        self.ineq_rhs = b;
        self
    }
}

/// A single finding of [`validate_problem`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DimensionMismatch {
        field: &'static str,
        expected: String,
        found: String,
    },
    Asymmetric {
        max_deviation: f64,
    },
    Indefinite {
        min_eigenvalue: f64,
    },
    NonFinite {
        field: &'static str,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

fn asymmetry(h: &DMatrix<f64>) -> f64 {
    let n = h.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            dev = dev.max((h[(i, j)] - h[(j, i)]).abs());
        }
    }
    dev
}

fn shape_violations(data: &ProblemData) -> Vec<Violation> {
    let n = data.linear_cost.len();
    let p = data.eq_rhs.len();
    let q = data.ineq_rhs.len();
    let mut out = Vec::new();
    let mut shape = |field, expected: (usize, usize), found: (usize, usize)| {
        if expected != found {
            out.push(Violation::DimensionMismatch {
                field,
                expected: format!("{}x{}", expected.0, expected.1),
                found: format!("{}x{}", found.0, found.1),
            });
        }
    };
    shape("H", (n, n), data.hessian.shape());
    shape("G", (p, n), data.eq_matrix.shape());
    shape("A", (q, n), data.ineq_matrix.shape());
    if n == 0 {
        out.push(Violation::DimensionMismatch {
            field: "f",
            expected: ">= 1".into(),
            found: "0".into(),
        });
    }
    out
}

fn nonfinite_violations(data: &ProblemData) -> Vec<Violation> {
    let fields: [(&'static str, &[f64]); 6] = [
        ("H", data.hessian.as_slice()),
        ("f", data.linear_cost.as_slice()),
        ("G", data.eq_matrix.as_slice()),
        ("h", data.eq_rhs.as_slice()),
        ("A", data.ineq_matrix.as_slice()),
        ("b", data.ineq_rhs.as_slice()),
    ];
    fields
        .iter()
        .filter(|(_, xs)| xs.iter().any(|x| !x.is_finite()))
        .map(|(field, _)| Violation::NonFinite { field })
        .collect()
}

/// Checks dimensions, finiteness, symmetry and positive semidefiniteness.
///
/// Never fails; every finding becomes an entry of the report. The
/// eigenvalue test is only run when the Hessian is square and finite.
pub fn validate_problem(data: &ProblemData) -> ValidationReport {
    let mut violations = shape_violations(data);
    violations.extend(nonfinite_violations(data));
    let h = &data.hessian;
    if h.is_square() && h.iter().all(|x| x.is_finite()) && h.nrows() > 0 {
        let dev = asymmetry(h);
        if dev > SYMMETRY_TOL * (1.0 + max_abs(h)) {
            violations.push(Violation::Asymmetric { max_deviation: dev });
        }
        let sym = (h + h.transpose()) * 0.5;
        let min_eig = SymmetricEigen::new(sym).eigenvalues.min();
        if min_eig < -PSD_TOL {
            violations.push(Violation::Indefinite {
                min_eigenvalue: min_eig,
            });
        }
    }
    ValidationReport { violations }
}

/// Immutable, shape-checked QP data with a symmetrized Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    data: ProblemData,
}

impl QpProblem {
    /// Checks dimensions, finiteness and symmetry, then stores `(H + H')/2`.
    ///
    /// Positive semidefiniteness is not checked here; see [`QpProblem::validate`].
    pub fn new(data: ProblemData) -> Result<Self, QpError> {
        if let Some(v) = shape_violations(&data).into_iter().next() {
            return Err(match v {
                Violation::DimensionMismatch {
                    field,
                    expected,
                    found,
                } => QpError::DimensionMismatch {
                    field,
                    expected,
                    found,
                },
                _ => unreachable!(),
            });
        }
        if let Some(Violation::NonFinite { field }) = nonfinite_violations(&data).into_iter().next()
        {
            return Err(QpError::NonFinite(field));
        }
        let dev = asymmetry(&data.hessian);
        if dev > SYMMETRY_TOL * (1.0 + max_abs(&data.hessian)) {
            return Err(QpError::Asymmetric(dev));
        }
        let mut data = data;
        data.hessian = (&data.hessian + data.hessian.transpose()) * 0.5;
        Ok(QpProblem { data })
    }

    pub fn validate(&self) -> ValidationReport {
        validate_problem(&self.data)
    }

    pub fn data(&self) -> &ProblemData {
        &self.data
    }

    pub fn into_data(self) -> ProblemData {
        self.data
    }

    pub fn n(&self) -> usize {
        self.data.linear_cost.len()
    }

    pub fn p(&self) -> usize {
        self.data.eq_rhs.len()
    }

    pub fn q(&self) -> usize {
        self.data.ineq_rhs.len()
    }

    /// Total size `n + p + q` of the stacked primal-dual vector.
    pub fn dim(&self) -> usize {
        self.n() + self.p() + self.q()
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.data.hessian
    }

    pub fn linear_cost(&self) -> &DVector<f64> {
        &self.data.linear_cost
    }

    pub fn eq_matrix(&self) -> &DMatrix<f64> {
        &self.data.eq_matrix
    }

    pub fn eq_rhs(&self) -> &DVector<f64> {
        &self.data.eq_rhs
    }

    pub fn ineq_matrix(&self) -> &DMatrix<f64> {
        &self.data.ineq_matrix
    }

    pub fn ineq_rhs(&self) -> &DVector<f64> {
        &self.data.ineq_rhs
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.data.hessian * z)) + self.data.linear_cost.dot(z)
    }

    /// Inequality slack `y = b - Az`.
    pub fn slack(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.data.ineq_rhs - &self.data.ineq_matrix * z
    }

    /// Lagrangian gradient `Hz + f + G'λ + A'v`.
    pub fn lagrangian_gradient(&self, it: &Iterate) -> DVector<f64> {
        &self.data.hessian * &it.z
            + &self.data.linear_cost
            + self.data.eq_matrix.tr_mul(&it.lambda)
            + self.data.ineq_matrix.tr_mul(&it.v)
    }

    pub(crate) fn check_iterate(&self, it: &Iterate) -> Result<(), QpError> {
        check_len("z", self.n(), it.z.len())?;
        check_len("lambda", self.p(), it.lambda.len())?;
        check_len("v", self.q(), it.v.len())
    }
}

/// Primal-dual triplet `(z, λ, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub z: DVector<f64>,
    pub lambda: DVector<f64>,
    pub v: DVector<f64>,
}

impl Iterate {
    pub fn new(z: DVector<f64>, lambda: DVector<f64>, v: DVector<f64>) -> Self {
        Iterate { z, lambda, v }
    }

    pub fn zeros(n: usize, p: usize, q: usize) -> Self {
        Iterate {
            z: DVector::zeros(n),
            lambda: DVector::zeros(p),
            v: DVector::zeros(q),
        }
    }

    /// Default starting point: `z = 0`, `λ = 0`, `v = 1`.
    pub fn initial(problem: &QpProblem) -> Self {
        Iterate {
            z: DVector::zeros(problem.n()),
            lambda: DVector::zeros(problem.p()),
            v: DVector::from_element(problem.q(), 1.0),
        }
    }

    pub fn stacked(&self) -> DVector<f64> {
        let (n, p, q) = (self.z.len(), self.lambda.len(), self.v.len());
        let mut x = DVector::zeros(n + p + q);
        x.rows_mut(0, n).copy_from(&self.z);
        x.rows_mut(n, p).copy_from(&self.lambda);
        x.rows_mut(n + p, q).copy_from(&self.v);
        x
    }

    pub fn from_stacked(x: &DVector<f64>, n: usize, p: usize, q: usize) -> Self {
        debug_assert_eq!(x.len(), n + p + q);
        Iterate {
            z: x.rows(0, n).into_owned(),
            lambda: x.rows(n, p).into_owned(),
            v: x.rows(n + p, q).into_owned(),
        }
    }

    /// `self + t * d` for a stacked direction `d`.
    pub fn step(&self, d: &DVector<f64>, t: f64) -> Self {
        let (n, p, q) = (self.z.len(), self.lambda.len(), self.v.len());
        Iterate {
            z: &self.z + d.rows(0, n) * t,
            lambda: &self.lambda + d.rows(n, p) * t,
            v: &self.v + d.rows(n + p, q) * t,
        }
    }
}

/// Unregularized KKT residual norms (all max-norms).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktError {
    pub stationarity_inf: f64,
    pub eq_infeas_inf: f64,
    pub ineq_infeas_inf: f64,
    pub comp_inf: f64,
    pub dual_neg_inf: f64,
}

impl KktError {
    pub fn max(&self) -> f64 {
        self.stationarity_inf
            .max(self.eq_infeas_inf)
            .max(self.ineq_infeas_inf)
            .max(self.comp_inf)
            .max(self.dual_neg_inf)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max() <= tol
    }
}

fn inf_norm(x: &DVector<f64>) -> f64 {
    x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Evaluates the KKT certificate at `iterate`.
///
/// Complementarity is measured as `max |min(y_i, v_i)|`, independent of the
/// NCP function used by the solver.
pub fn kkt_error(problem: &QpProblem, iterate: &Iterate) -> Result<KktError, QpError> {
    problem.check_iterate(iterate)?;
    let grad = problem.lagrangian_gradient(iterate);
    let eq = problem.eq_matrix() * &iterate.z - problem.eq_rhs();
    let y = problem.slack(&iterate.z);
    let ineq_infeas_inf = y.iter().fold(0.0_f64, |acc, yi| acc.max(-yi));
    let comp_inf = y
        .iter()
        .zip(iterate.v.iter())
        .fold(0.0_f64, |acc, (yi, vi)| acc.max(yi.min(*vi).abs()));
    let dual_neg_inf = iterate.v.iter().fold(0.0_f64, |acc, vi| acc.max(-vi));
    // `+ 0.0` maps a folded `-0.0` to `+0.0`.
    Ok(KktError {
        stationarity_inf: inf_norm(&grad),
        eq_infeas_inf: inf_norm(&eq),
        ineq_infeas_inf: ineq_infeas_inf + 0.0,
        comp_inf: comp_inf + 0.0,
        dual_neg_inf: dual_neg_inf + 0.0,
    })
}

/// Parameters of the seeded random problem generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    /// Approximate upper bound on the condition number of `H` when strictly convex.
    pub condition_target: f64,
    /// Fraction of inequalities active at the planted solution; `None` skips planting.
    pub activity_fraction: Option<f64>,
    pub strictly_convex: bool,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(n: usize, p: usize, q: usize, seed: u64) -> Self {
        GeneratorSpec {
            n,
            p,
            q,
            condition_target: 100.0,
            activity_fraction: Some(0.5),
            strictly_convex: true,
            seed,
        }
    }

    pub fn with_activity(mut self, fraction: Option<f64>) -> Self {
        self.activity_fraction = fraction;
        self
    }

    /// Number of inequalities forced active at the planted solution.
    pub fn active_count(&self) -> usize {
        self.activity_fraction
            .map(|f| ((f * self.q as f64).floor() as usize).min(self.q))
            .unwrap_or(0)
    }

    fn check(&self) -> Result<(), QpError> {
        if self.n == 0 {
            return Err(QpError::InfeasibleSpec("n must be at least 1".into()));
        }
        if self.p > self.n {
            return Err(QpError::InfeasibleSpec(format!(
                "p = {} exceeds n = {}",
                self.p, self.n
            )));
        }
        if !(self.condition_target.is_finite() && self.condition_target > 0.0) {
            return Err(QpError::InfeasibleSpec(
                "condition_target must be positive".into(),
            ));
        }
        if let Some(f) = self.activity_fraction {
            if !(0.0..=1.0).contains(&f) {
                return Err(QpError::InfeasibleSpec(format!(
                    "activity_fraction {f} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // Column-major fill keeps the draw order fixed for a given seed.
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn gaussian_vector(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Generates a random convex QP, optionally built around a planted KKT triplet.
///
/// Generation is a deterministic function of `spec` (including the seed).
pub fn random_problem(spec: &GeneratorSpec) -> Result<(QpProblem, Option<Iterate>), QpError> {
    spec.check()?;
    let (n, p, q) = (spec.n, spec.p, spec.q);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let hessian = if spec.strictly_convex {
        let m = gaussian_matrix(&mut rng, n, n);
        let mtm = m.tr_mul(&m) / n as f64;
        let top = SymmetricEigen::new(mtm.clone()).eigenvalues.max().max(1e-3);
        let eps = top / spec.condition_target;
        mtm + DMatrix::identity(n, n) * eps
    } else {
        let rank = (n / 2).max(1);
        let m = gaussian_matrix(&mut rng, rank, n);
        m.tr_mul(&m) / n as f64
    };
    let hessian = (&hessian + hessian.transpose()) * 0.5;

    let g = gaussian_matrix(&mut rng, p, n);
    let a = gaussian_matrix(&mut rng, q, n);

    let (f, h, b, planted) = match spec.activity_fraction {
        Some(_) => {
            let z = gaussian_vector(&mut rng, n);
            let lambda = gaussian_vector(&mut rng, p);
            let mut rows: Vec<usize> = (0..q).collect();
            rows.shuffle(&mut rng);
            let mut active = vec![false; q];
            for &i in rows.iter().take(spec.active_count()) {
                active[i] = true;
            }
            let az = &a * &z;
            let mut v = DVector::zeros(q);
            let mut b = DVector::zeros(q);
            for i in 0..q {
                let draw: f64 = rng.random_range(0.5..1.5);
                if active[i] {
                    v[i] = draw;
                    b[i] = az[i];
                } else {
                    b[i] = az[i] + draw;
                }
            }
            let h = &g * &z;
            let f = -(&hessian * &z) - g.tr_mul(&lambda) - a.tr_mul(&v);
            (f, h, b, Some(Iterate::new(z, lambda, v)))
        }
        None => {
            let anchor = gaussian_vector(&mut rng, n);
            let f = gaussian_vector(&mut rng, n);
            let h = &g * &anchor;
            let mut b = &a * &anchor;
            for bi in b.iter_mut() {
                *bi += rng.random_range(0.1..1.0);
            }
            (f, h, b, None)
        }
    };

    let data = ProblemData {
        hessian,
        linear_cost: f,
        eq_matrix: g,
        eq_rhs: h,
        ineq_matrix: a,
        ineq_rhs: b,
    };
    Ok((QpProblem::new(data)?, planted))
}
