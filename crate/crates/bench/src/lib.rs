//! Fixtures shared by the criterion benchmarks.

use ssnqp_core::{random_problem, GeneratorSpec, QpProblem};

/// Planted strictly convex problems of growing size: `(n, p, q)` triples.
pub const SIZES: [(usize, usize, usize); 4] = [(5, 1, 4), (10, 2, 8), (20, 4, 16), (40, 8, 32)];

pub fn planted_problem(n: usize, p: usize, q: usize, seed: u64) -> QpProblem {
    let spec = GeneratorSpec::new(n, p, q, seed);
    random_problem(&spec).expect("valid spec").0
}
