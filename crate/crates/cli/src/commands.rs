use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use ssnqp_core::format::{
    parse_problem, parse_solution, result_json, serialize_problem, write_trace_csv, Metadata,
    ProblemFile,
};
use ssnqp_core::{
    active_set_solve, kkt_error, random_problem, solve, GeneratorSpec, KktError, OracleLimits,
    OracleStatus, ProxCenter, SolveStatus, SolverConfig,
};

use crate::{Command, ProxArg};

const EXIT_OK: u8 = 0;
const EXIT_NOT_CONVERGED: u8 = 2;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_problem(path: &Path) -> Result<ProblemFile> {
    parse_problem(&read(path)?).with_context(|| format!("invalid problem file {}", path.display()))
}

fn print_kkt(out: &mut impl Write, kkt: &KktError) -> std::io::Result<()> {
    writeln!(out, "stationarity_inf: {:e}", kkt.stationarity_inf)?;
    writeln!(out, "eq_infeas_inf: {:e}", kkt.eq_infeas_inf)?;
    writeln!(out, "ineq_infeas_inf: {:e}", kkt.ineq_infeas_inf)?;
    writeln!(out, "comp_inf: {:e}", kkt.comp_inf)?;
    writeln!(out, "dual_neg_inf: {:e}", kkt.dual_neg_inf)
}

pub(crate) fn run(command: Command) -> Result<ExitCode> {
    let code = match command {
        Command::Solve {
            file,
            tol,
            alpha,
            sigma0,
            sigma_shrink,
            max_outer,
            max_inner,
            prox,
            trace,
            warm_start,
            json,
        } => {
            let pf = load_problem(&file)?;
            let mut cfg = SolverConfig::default();
            if let Some(t) = tol {
                cfg.tol_kkt = t;
            }
            if let Some(a) = alpha {
                cfg.ncp.alpha = a;
            }
            if let Some(s) = sigma0 {
                cfg.sigma0 = s;
            }
            if let Some(r) = sigma_shrink {
                cfg.sigma_shrink = r;
            }
            if let Some(k) = max_outer {
                cfg.max_outer = k;
            }
            if let Some(m) = max_inner {
                cfg.max_inner = m;
            }
            if let Some(p) = prox {
                cfg.prox_center = match p {
                    ProxArg::Zero => ProxCenter::FixedZero,
                    ProxArg::Recenter => ProxCenter::Recenter,
                };
            }
            cfg.check().context("invalid solver options")?;
            let warm = match warm_start {
                Some(path) => Some(
                    parse_solution(&read(&path)?, &pf.problem)
                        .with_context(|| format!("invalid warm start {}", path.display()))?,
                ),
                None => None,
            };

            let result = solve(&pf.problem, &cfg, warm.as_ref());
            if result.status == SolveStatus::InvalidProblem {
                bail!(
                    "problem failed validation: {:?}",
                    pf.problem.validate().violations
                );
            }
            if let Some(path) = trace {
                let f = fs::File::create(&path)
                    .with_context(|| format!("cannot create {}", path.display()))?;
                let mut w = BufWriter::new(f);
                write_trace_csv(&result.trace, &mut w)?;
                w.flush()?;
            }
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            if json {
                out.write_all(result_json(&pf.problem, &result).as_bytes())?;
            } else {
                writeln!(out, "status: {}", result.status)?;
                writeln!(out, "objective: {:e}", result.objective(&pf.problem))?;
                print_kkt(&mut out, &result.kkt)?;
                writeln!(out, "outer_iterations: {}", result.outer_iterations)?;
                writeln!(out, "inner_iterations: {}", result.inner_iterations)?;
                writeln!(out, "factorizations: {}", result.factorizations)?;
            }
            if result.is_solved() {
                EXIT_OK
            } else {
                EXIT_NOT_CONVERGED
            }
        }
        Command::Check {
            file,
            solution,
            tol,
        } => {
            let pf = load_problem(&file)?;
            let it = parse_solution(&read(&solution)?, &pf.problem)
                .with_context(|| format!("invalid solution file {}", solution.display()))?;
            let kkt = kkt_error(&pf.problem, &it)?;
            let ok = kkt.within(tol);
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            print_kkt(&mut out, &kkt)?;
            writeln!(out, "objective: {:e}", pf.problem.objective(&it.z))?;
            writeln!(out, "within_tolerance: {ok}")?;
            if ok {
                EXIT_OK
            } else {
                EXIT_NOT_CONVERGED
            }
        }
        Command::Gen {
            n,
            p,
            q,
            active_frac,
            seed,
            condition,
            output,
        } => {
            let spec = GeneratorSpec {
                condition_target: condition,
                activity_fraction: Some(active_frac),
                ..GeneratorSpec::new(n, p, q, seed)
            };
            let (problem, planted) = random_problem(&spec)?;
            let md = Metadata {
                name: Some(format!("gen-n{n}-p{p}-q{q}")),
                seed: Some(seed),
            };
            fs::write(&output, serialize_problem(&problem, planted.as_ref(), &md))
                .with_context(|| format!("cannot write {}", output.display()))?;
            EXIT_OK
        }
        Command::Oracle { file, json } => {
            let pf = load_problem(&file)?;
            let limits = OracleLimits::default();
            if pf.problem.q() > limits.max_q {
                bail!(
                    "oracle refuses q = {} (enumeration limit is {})",
                    pf.problem.q(),
                    limits.max_q
                );
            }
            let res = active_set_solve(&pf.problem, limits);
            let status = format!("{:?}", res.status);
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            if json {
                let doc = serde_json::json!({
                    "status": status,
                    "objective": res.objective.is_finite().then_some(res.objective),
                    "active_set": res.active_set,
                    "multiplicity_flag": res.multiplicity_flag,
                    "solution": res.solution.as_ref().map(|s| serde_json::json!({
                        "z": s.z.as_slice(),
                        "lambda": s.lambda.as_slice(),
                        "v": s.v.as_slice(),
                    })),
                });
                writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
            } else {
                writeln!(out, "status: {status}")?;
                writeln!(out, "objective: {:e}", res.objective)?;
                writeln!(out, "active_set: {:?}", res.active_set)?;
                writeln!(out, "multiplicity_flag: {}", res.multiplicity_flag)?;
                if let Some(s) = &res.solution {
                    writeln!(out, "z: {:?}", s.z.as_slice())?;
                }
            }
            if res.status == OracleStatus::Optimal {
                EXIT_OK
            } else {
                EXIT_NOT_CONVERGED
            }
        }
    };
    Ok(ExitCode::from(code))
}
