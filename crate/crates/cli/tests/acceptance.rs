//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.
//!
//! Run with `cargo test -p ssnqp-cli --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssnqp_core::format::{parse_problem, serialize_problem, Metadata};
use ssnqp_core::{
    active_set_solve, assemble_jacobian, compare_with_oracle, kkt_error, phi, phi_derivative,
    random_problem, residual, solution_sensitivity, solve, vjp, GeneratorSpec, Iterate, NcpConfig,
    OracleLimits, OracleStatus, ProblemData, QpProblem, SolveResult, SolveStatus, SolverConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

/// Solved results gathered from every criterion, re-verified by criterion 5.
type SolvedLog = Vec<(QpProblem, SolveResult, f64)>;

fn log_if_solved(log: &mut SolvedLog, problem: &QpProblem, result: &SolveResult, tol: f64) {
    if result.is_solved() {
        log.push((problem.clone(), result.clone(), tol));
    }
}

fn inf(x: &DVector<f64>) -> f64 {
    x.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

/// Radical inverse in `base`: the Halton sequence component.
fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

// ---------------------------------------------------------------------------
// 1. NCP zero set over [-5, 5]^2.

fn criterion_zero_set() -> Outcome {
    const TOL: f64 = 1e-12;
    let cfg = NcpConfig::default();
    let mut samples: Vec<(f64, f64)> = (1..=1_000_000u64)
        .map(|i| (10.0 * halton(i, 2) - 5.0, 10.0 * halton(i, 3) - 5.0))
        .collect();
    // The zero set has measure zero; add exact points on both axes.
    for k in 0..=1000 {
        let t = -5.0 + 0.01 * k as f64;
        samples.push((t, 0.0));
        samples.push((0.0, t));
    }
    let mut violations = 0usize;
    let mut zeros = 0usize;
    for &(y, v) in &samples {
        let is_zero = phi(y, v, &cfg).unwrap().abs() <= TOL;
        let complementary = y >= -TOL && v >= -TOL && (y * v).abs() <= TOL;
        zeros += is_zero as usize;
        if is_zero != complementary {
            violations += 1;
        }
    }
    Outcome {
        pass: violations == 0 && zeros > 1000,
        detail: format!(
            "{} samples, {zeros} on the zero set, {violations} violations",
            samples.len()
        ),
    }
}

// ---------------------------------------------------------------------------
// 2. Derivatives against central finite differences.

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn criterion_derivatives() -> Outcome {
    const H: f64 = 1e-6;
    const TOL: f64 = 1e-6;
    let cfg = NcpConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);

    let mut worst_phi = 0.0_f64;
    let mut points = 0;
    while points < 10_000 {
        let y: f64 = rng.random_range(-5.0..5.0);
        let v: f64 = rng.random_range(-5.0..5.0);
        if y.hypot(v) < 1e-3 || y.abs() < 1e-3 || v.abs() < 1e-3 {
            continue;
        }
        let d = phi_derivative(y, v, &cfg).unwrap();
        let fd_y = (phi(y + H, v, &cfg).unwrap() - phi(y - H, v, &cfg).unwrap()) / (2.0 * H);
        let fd_v = (phi(y, v + H, &cfg).unwrap() - phi(y, v - H, &cfg).unwrap()) / (2.0 * H);
        worst_phi = worst_phi
            .max(rel_err(d.d_y, fd_y))
            .max(rel_err(d.d_v, fd_v));
        points += 1;
    }

    let mut worst_jac = 0.0_f64;
    for k in 0..50u64 {
        let n = rng.random_range(1..=6);
        let p = rng.random_range(0..=n.min(2));
        let q = rng.random_range(0..=5);
        let (problem, _) = random_problem(&GeneratorSpec::new(n, p, q, 1000 + k)).unwrap();
        let sigma = rng.random_range(0.0..0.1);
        // Random iterate away from the kinks of phi.
        let x = loop {
            let z = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
            let lambda = DVector::from_fn(p, |_, _| rng.random_range(-2.0..2.0));
            let v = DVector::from_fn(q, |_, _| rng.random_range(-2.0..2.0));
            let y = problem.slack(&z);
            if y.iter().chain(v.iter()).all(|t| t.abs() >= 1e-2) {
                break Iterate::new(z, lambda, v);
            }
        };
        let center = Iterate::new(
            DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0)),
            DVector::from_fn(p, |_, _| rng.random_range(-1.0..1.0)),
            DVector::zeros(q),
        );
        let jac = assemble_jacobian(&problem, &x, sigma, &cfg).unwrap();
        let stacked = x.stacked();
        for col in 0..stacked.len() {
            let mut e = DVector::zeros(stacked.len());
            e[col] = H;
            let r = |s: &DVector<f64>| {
                residual(
                    &problem,
                    &Iterate::from_stacked(s, n, p, q),
                    sigma,
                    &center,
                    &cfg,
                )
                .unwrap()
                .stacked()
            };
            let fd = (r(&(&stacked + &e)) - r(&(&stacked - &e))) / (2.0 * H);
            let analytic = jac.column(col).into_owned();
            let err = inf(&(&analytic - &fd)) / inf(&analytic).max(1.0);
            worst_jac = worst_jac.max(err);
        }
    }
    Outcome {
        pass: worst_phi <= TOL && worst_jac <= TOL,
        detail: format!("phi worst rel err {worst_phi:.2e} (10^4 pts), jacobian worst {worst_jac:.2e} (50 problems)"),
    }
}

// ---------------------------------------------------------------------------
// 3. Oracle equivalence on planted strictly convex problems.

const FRACTIONS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn planted_spec(rng: &mut ChaCha8Rng, seed: u64, n_lo: usize) -> GeneratorSpec {
    let n = rng.random_range(n_lo..=8);
    let p = rng.random_range(0..=n.min(2));
    let q = rng.random_range(0..=6);
    let mut frac = FRACTIONS[rng.random_range(0..FRACTIONS.len())];
    // Keep the active rows plus equalities linearly independent.
    if q > 0 && (frac * q as f64).floor() as usize + p > n {
        frac = (n - p) as f64 / q as f64;
    }
    GeneratorSpec {
        condition_target: [10.0, 100.0, 1000.0][rng.random_range(0..3)],
        activity_fraction: Some(frac),
        ..GeneratorSpec::new(n, p, q, seed)
    }
}

fn criterion_oracle(log: &mut SolvedLog) -> Outcome {
    const TOL: f64 = 1e-6;
    let cfg = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut passed, mut flagged, mut silent) = (0, 0, 0);
    for k in 0..500u64 {
        let spec = planted_spec(&mut rng, 30_000 + k, 1);
        let (problem, _) = random_problem(&spec).unwrap();
        let result = solve(&problem, &cfg, None);
        log_if_solved(log, &problem, &result, cfg.tol_kkt);
        let oracle = active_set_solve(&problem, OracleLimits::default());
        let report = compare_with_oracle(&problem, &result, &oracle, TOL);
        if result.is_solved() && report.agrees {
            passed += 1;
        } else if oracle.multiplicity_flag {
            flagged += 1;
        } else {
            silent += 1;
        }
    }
    Outcome {
        pass: passed * 100 >= 99 * 500 && silent == 0,
        detail: format!(
            "{passed}/500 agree at 1e-6, {flagged} flagged degenerate, {silent} unexplained"
        ),
    }
}

// ---------------------------------------------------------------------------
// 4. Superlinear tail of the Newton iteration.

fn criterion_superlinear(log: &mut SolvedLog) -> Outcome {
    let cfg = SolverConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut good = 0;
    for k in 0..100u64 {
        let spec = planted_spec(&mut rng, 40_000 + k, 2);
        let (problem, _) = random_problem(&spec).unwrap();
        let result = solve(&problem, &cfg, None);
        log_if_solved(log, &problem, &result, cfg.tol_kkt);
        let tail = &result.trace[result.trace.len().saturating_sub(3)..];
        if result.is_solved()
            && tail.len() == 3
            && tail.iter().all(|r| r.merit <= 0.1 * r.prev_merit)
        {
            good += 1;
        }
    }
    Outcome {
        pass: good >= 95,
        detail: format!(
            "{good}/100 problems with a 10x merit drop on each of the final three steps"
        ),
    }
}

// ---------------------------------------------------------------------------
// 6. Sensitivities against finite differences of the solver.

fn with_data(problem: &QpProblem, edit: impl FnOnce(&mut ProblemData)) -> QpProblem {
    let mut data = problem.data().clone();
    edit(&mut data);
    QpProblem::new(data).unwrap()
}

fn criterion_sensitivity(log: &mut SolvedLog) -> Outcome {
    const STEP: f64 = 1e-5;
    const FD_TOL: f64 = 1e-4;
    const VJP_TOL: f64 = 1e-10;
    let cfg = SolverConfig {
        tol_kkt: 1e-11,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut checked, mut failures, mut fd_worst, mut vjp_worst) = (0, 0, 0.0_f64, 0.0_f64);
    let mut seed = 60_000u64;
    while checked < 100 {
        seed += 1;
        let n = rng.random_range(1..=5);
        let p = rng.random_range(0..=n.min(2));
        let q = rng.random_range(0..=4);
        let mut frac = FRACTIONS[rng.random_range(0..FRACTIONS.len())];
        if q > 0 && (frac * q as f64).floor() as usize + p > n {
            frac = (n - p) as f64 / q as f64;
        }
        let spec = GeneratorSpec::new(n, p, q, seed).with_activity(Some(frac));
        let (problem, _) = random_problem(&spec).unwrap();
        let base = solve(&problem, &cfg, None);
        if !base.is_solved() {
            failures += 1;
            checked += 1;
            continue;
        }
        log_if_solved(log, &problem, &base, cfg.tol_kkt);
        let sens = solution_sensitivity(&problem, &base, &cfg).unwrap();
        if !sens.wellposed {
            continue;
        }
        checked += 1;

        let fd = |plus: QpProblem, minus: QpProblem| -> Option<DVector<f64>> {
            let (a, b) = (solve(&plus, &cfg, None), solve(&minus, &cfg, None));
            (a.is_solved() && b.is_solved()).then(|| (&a.iterate.z - &b.iterate.z) / (2.0 * STEP))
        };
        let mut columns: Vec<(DVector<f64>, Option<DVector<f64>>)> = Vec::new();
        for j in 0..n {
            columns.push((
                sens.dz_df.column(j).into_owned(),
                fd(
                    with_data(&problem, |d| d.linear_cost[j] += STEP),
                    with_data(&problem, |d| d.linear_cost[j] -= STEP),
                ),
            ));
        }
        for j in 0..p {
            columns.push((
                sens.dz_dh.column(j).into_owned(),
                fd(
                    with_data(&problem, |d| d.eq_rhs[j] += STEP),
                    with_data(&problem, |d| d.eq_rhs[j] -= STEP),
                ),
            ));
        }
        for j in 0..q {
            columns.push((
                sens.dz_db.column(j).into_owned(),
                fd(
                    with_data(&problem, |d| d.ineq_rhs[j] += STEP),
                    with_data(&problem, |d| d.ineq_rhs[j] -= STEP),
                ),
            ));
        }
        let mut ok = true;
        for (analytic, numeric) in &columns {
            match numeric {
                Some(numeric) => {
                    for i in 0..n {
                        let e = rel_err(analytic[i], numeric[i]);
                        fd_worst = fd_worst.max(e);
                        ok &= e <= FD_TOL;
                    }
                }
                None => ok = false,
            }
        }

        let g = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let back = vjp(&problem, &base, &cfg, &g).unwrap();
        let fwd_f = sens.dz_df.tr_mul(&g);
        let fwd_h = sens.dz_dh.tr_mul(&g);
        let fwd_b = sens.dz_db.tr_mul(&g);
        for (a, b) in [
            (&back.grad_f, &fwd_f),
            (&back.grad_h, &fwd_h),
            (&back.grad_b, &fwd_b),
        ] {
            let e = inf(&(a - b)) / inf(b).max(1.0);
            vjp_worst = vjp_worst.max(e);
            ok &= e <= VJP_TOL;
        }
        if !ok {
            failures += 1;
        }
    }
    Outcome {
        pass: failures == 0,
        detail: format!(
            "{checked} wellposed problems, {failures} failing; worst FD rel err {fd_worst:.2e}, worst vjp gap {vjp_worst:.2e}"
        ),
    }
}

// ---------------------------------------------------------------------------
// 7. Infeasible problems never report Solved.

fn infeasible_problem(k: u64) -> QpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(70_000 + k);
    let n = rng.random_range(1..=5);
    let h = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let hessian = h.tr_mul(&h) + DMatrix::identity(n, n) * 0.1;
    let f = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let row = DMatrix::from_fn(1, n, |_, _| rng.random_range(-1.0..1.0) + 0.5);
    let c: f64 = rng.random_range(-1.0..1.0);
    let gap: f64 = rng.random_range(0.5..2.0);
    let data = ProblemData::unconstrained(hessian, f);
    let data = if k.is_multiple_of(2) {
        // G z = c and G z = c + gap with the same row.
        let g = DMatrix::from_fn(2, n, |_, j| row[(0, j)]);
        data.with_equalities(g, DVector::from_vec(vec![c, c + gap]))
    } else {
        // a z <= c and a z >= c + gap.
        let a = DMatrix::from_fn(2, n, |i, j| if i == 0 { row[(0, j)] } else { -row[(0, j)] });
        data.with_inequalities(a, DVector::from_vec(vec![c, -c - gap]))
    };
    QpProblem::new(data).unwrap()
}

fn criterion_infeasible(log: &mut SolvedLog) -> Outcome {
    let cfg = SolverConfig::default();
    let (mut ok, mut oracle_infeasible) = (0, 0);
    let mut statuses = Vec::new();
    for k in 0..20u64 {
        let problem = infeasible_problem(k);
        let run = catch_unwind(AssertUnwindSafe(|| solve(&problem, &cfg, None)));
        if let Ok(result) = run {
            log_if_solved(log, &problem, &result, cfg.tol_kkt);
            let bounded = result.outer_iterations <= cfg.max_outer
                && result.inner_iterations <= cfg.max_outer * cfg.max_inner;
            if result.status != SolveStatus::Solved && bounded {
                ok += 1;
            }
            statuses.push(result.status);
        }
        if active_set_solve(&problem, OracleLimits::default()).status == OracleStatus::Infeasible {
            oracle_infeasible += 1;
        }
    }
    let stalled = statuses
        .iter()
        .filter(|s| **s == SolveStatus::LineSearchStalled)
        .count();
    let singular = statuses
        .iter()
        .filter(|s| **s == SolveStatus::SingularSystem)
        .count();
    Outcome {
        pass: ok == 20,
        detail: format!(
            "{ok}/20 non-Solved without panic ({stalled} stalled, {singular} singular, rest max-iter); oracle confirms {oracle_infeasible}/20 infeasible"
        ),
    }
}

// ---------------------------------------------------------------------------
// 5. Every Solved result re-verifies against the certificate.

fn criterion_certificate(log: &SolvedLog) -> Outcome {
    let bad = log
        .iter()
        .filter(|(problem, result, tol)| !kkt_error(problem, &result.iterate).unwrap().within(*tol))
        .count();
    Outcome {
        pass: bad == 0 && !log.is_empty(),
        detail: format!("{} Solved results re-checked, {bad} failed", log.len()),
    }
}

// ---------------------------------------------------------------------------
// 8. CLI determinism and exact file round trips.

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_ssnqp"))
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn criterion_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let mut mismatches = Vec::new();
    for (n, p, q, seed) in [(2, 0, 2, 1), (6, 2, 5, 9), (8, 1, 8, 17)] {
        let (ns, ps, qs, ss) = (
            n.to_string(),
            p.to_string(),
            q.to_string(),
            seed.to_string(),
        );
        let prob = path(&format!("p{seed}.json"));
        let again = path(&format!("p{seed}b.json"));
        for target in [&prob, &again] {
            let (code, _) = run_cli(&[
                "gen", "--n", &ns, "--p", &ps, "--q", &qs, "--seed", &ss, "-o", target,
            ]);
            if code != 0 {
                mismatches.push(format!("gen exit {code}"));
            }
        }
        if std::fs::read(&prob).ok() != std::fs::read(&again).ok() {
            mismatches.push(format!("gen seed {seed} differs"));
        }
        let (t1, t2) = (
            path(&format!("t{seed}a.csv")),
            path(&format!("t{seed}b.csv")),
        );
        let (c1, j1) = run_cli(&["solve", &prob, "--json", "--trace", &t1]);
        let (c2, j2) = run_cli(&["solve", &prob, "--json", "--trace", &t2]);
        if c1 != 0 || c2 != 0 {
            mismatches.push(format!("solve exit {c1}/{c2}"));
        }
        if j1 != j2 || j1.is_empty() {
            mismatches.push(format!("json differs for seed {seed}"));
        }
        if std::fs::read(&t1).ok() != std::fs::read(&t2).ok() || !Path::new(&t1).exists() {
            mismatches.push(format!("trace differs for seed {seed}"));
        }
    }

    let mut round_trip_failures = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 0..100u64 {
        let spec = planted_spec(&mut rng, 80_000 + k, 1);
        let (problem, planted) = random_problem(&spec).unwrap();
        let md = Metadata {
            name: Some(format!("rt{k}")),
            seed: Some(spec.seed),
        };
        let text = serialize_problem(&problem, planted.as_ref(), &md);
        match parse_problem(&text) {
            Ok(back)
                if back.problem == problem && back.planted == planted && back.metadata == md => {}
            _ => round_trip_failures += 1,
        }
    }
    Outcome {
        pass: mismatches.is_empty() && round_trip_failures == 0,
        detail: format!(
            "3 CLI runs byte-identical: {}; {} / 100 round trips exact",
            if mismatches.is_empty() {
                "yes".to_string()
            } else {
                mismatches.join(", ")
            },
            100 - round_trip_failures
        ),
    }
}

fn main() {
    // libtest passes flags such as --nocapture; nothing here takes arguments.
    let mut log = SolvedLog::new();
    // Criterion 5 re-checks the Solved results logged by the others, so it runs after them.
    let mut rows: Vec<(&str, Outcome)> = vec![
        ("AC1 ncp zero set", criterion_zero_set()),
        ("AC2 derivative correctness", criterion_derivatives()),
        ("AC3 oracle equivalence", criterion_oracle(&mut log)),
        ("AC4 superlinear tail", criterion_superlinear(&mut log)),
        ("AC6 sensitivity accuracy", criterion_sensitivity(&mut log)),
        ("AC7 infeasible handling", criterion_infeasible(&mut log)),
    ];
    rows.push(("AC5 certificate soundness", criterion_certificate(&log)));
    rows.push(("AC8 determinism and round trip", criterion_determinism()));
    rows.sort_by_key(|(name, _)| name.to_string());

    let mut failed = 0;
    for (name, outcome) in &rows {
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {name}: {}", outcome.detail);
        failed += (!outcome.pass) as usize;
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all {} acceptance criteria passed", rows.len());
}
