//! JSON problem files, solution files, the result object and trace CSV.
//!
//! A problem file looks like
//!
//! ```json
//! {
//!   "version": 1,
//!   "n": 2, "p": 0, "q": 1,
//!   "H": {"dense": [1.0, 0.0, 0.0, 1.0]},
//!   "f": [-1.0, 0.0],
//!   "A": {"triplets": [[0, 0, 1.0]]},
//!   "b": [0.5],
//!   "planted": {"z": [0.5, 0.0], "lambda": [], "v": [0.5]},
//!   "metadata": {"name": "demo", "seed": 3}
//! }
//! ```
//!
//! Matrices are either row-major `dense` lists or `triplets` of
//! `[row, col, value]` whose duplicates are summed. `G`/`h` and `A`/`b` may
//! be omitted when `p = 0` or `q = 0`. Numbers are written in shortest
//! round-trip form, so parse and serialize are exact inverses.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::error::QpError;
use crate::model::{Iterate, KktError, ProblemData, QpProblem};
use crate::newton::{SolveResult, TraceRecord};

pub const FORMAT_VERSION: u64 = 1;
pub const TRACE_HEADER: &str = "outer,inner,sigma,merit,kkt_max,step_len";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("missing field \"{0}\"")]
    MissingField(String),
    #[error("field \"{field}\" must be {expected}")]
    WrongType {
        field: String,
        expected: &'static str,
    },
    #[error("unsupported version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(String),
    #[error("non-finite number in \"{0}\"")]
    NonFinite(String),
    #[error("dimension mismatch in \"{field}\": expected {expected}, found {found}")]
    Dimension {
        field: String,
        expected: usize,
        found: usize,
    },
    #[error("triplet ({row}, {col}) out of range in \"{field}\"")]
    TripletOutOfRange {
        field: String,
        row: usize,
        col: usize,
    },
    #[error("invalid problem: {0}")]
    Problem(#[from] QpError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metadata {
    pub name: Option<String>,
    pub seed: Option<u64>,
}

/// Parsed contents of a problem file.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub problem: QpProblem,
    pub planted: Option<Iterate>,
    pub metadata: Metadata,
}

fn wrong(field: &str, expected: &'static str) -> FormatError {
    FormatError::WrongType {
        field: field.to_string(),
        expected,
    }
}

fn number(value: &Value, field: &str) -> Result<f64, FormatError> {
    match value {
        Value::Number(num) => {
            let x = num.as_f64().ok_or_else(|| wrong(field, "a number"))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(FormatError::NonFinite(field.to_string()))
            }
        }
        Value::String(s)
            if matches!(
                s.as_str(),
                "NaN" | "nan" | "Infinity" | "-Infinity" | "inf" | "-inf"
            ) =>
        {
            Err(FormatError::NonFinite(field.to_string()))
        }
        Value::Null => Err(FormatError::NonFinite(field.to_string())),
        _ => Err(wrong(field, "a number")),
    }
}

fn index(value: &Value, field: &str) -> Result<usize, FormatError> {
    value
        .as_u64()
        .and_then(|x| usize::try_from(x).ok())
        .ok_or_else(|| wrong(field, "a non-negative integer"))
}

fn get<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, FormatError> {
    obj.get(key)
        .ok_or_else(|| FormatError::MissingField(key.to_string()))
}

fn numbers(value: &Value, field: &str) -> Result<Vec<f64>, FormatError> {
    let arr = value
        .as_array()
        .ok_or_else(|| wrong(field, "a list of numbers"))?;
    arr.iter().map(|x| number(x, field)).collect()
}

fn vector(value: &Value, field: &str, len: usize) -> Result<DVector<f64>, FormatError> {
    let xs = numbers(value, field)?;
    if xs.len() != len {
        return Err(FormatError::Dimension {
            field: field.to_string(),
            expected: len,
            found: xs.len(),
        });
    }
    Ok(DVector::from_vec(xs))
}

fn optional_vector(
    obj: &Map<String, Value>,
    key: &str,
    len: usize,
) -> Result<DVector<f64>, FormatError> {
    match obj.get(key) {
        Some(v) => vector(v, key, len),
        None if len == 0 => Ok(DVector::zeros(0)),
        None => Err(FormatError::MissingField(key.to_string())),
    }
}

fn matrix(
    value: &Value,
    field: &str,
    rows: usize,
    cols: usize,
) -> Result<DMatrix<f64>, FormatError> {
    let obj = value
        .as_object()
        .ok_or_else(|| wrong(field, "an object with \"dense\" or \"triplets\""))?;
    match (obj.get("dense"), obj.get("triplets")) {
        (Some(dense), None) => {
            let xs = numbers(dense, field)?;
            if xs.len() != rows * cols {
                return Err(FormatError::Dimension {
                    field: field.to_string(),
                    expected: rows * cols,
                    found: xs.len(),
                });
            }
            Ok(DMatrix::from_row_slice(rows, cols, &xs))
        }
        (None, Some(triplets)) => {
            let list = triplets
                .as_array()
                .ok_or_else(|| wrong(field, "a list of [row, col, value] triplets"))?;
            let mut m = DMatrix::zeros(rows, cols);
            for entry in list {
                let t = entry
                    .as_array()
                    .filter(|t| t.len() == 3)
                    .ok_or_else(|| wrong(field, "a list of [row, col, value] triplets"))?;
                let (r, c) = (index(&t[0], field)?, index(&t[1], field)?);
                let x = number(&t[2], field)?;
                if r >= rows || c >= cols {
                    return Err(FormatError::TripletOutOfRange {
                        field: field.to_string(),
                        row: r,
                        col: c,
                    });
                }
                m[(r, c)] += x;
            }
            Ok(m)
        }
        _ => Err(wrong(
            field,
            "an object with exactly one of \"dense\" or \"triplets\"",
        )),
    }
}

fn optional_matrix(
    obj: &Map<String, Value>,
    key: &str,
    rows: usize,
    cols: usize,
) -> Result<DMatrix<f64>, FormatError> {
    match obj.get(key) {
        Some(v) => matrix(v, key, rows, cols),
        None if rows == 0 => Ok(DMatrix::zeros(0, cols)),
        None => Err(FormatError::MissingField(key.to_string())),
    }
}

fn iterate_from(
    obj: &Map<String, Value>,
    prefix: &str,
    n: usize,
    p: usize,
    q: usize,
) -> Result<Iterate, FormatError> {
    let field = |k: &str| format!("{prefix}.{k}");
    let vec_of = |key: &str, len: usize| -> Result<DVector<f64>, FormatError> {
        match obj.get(key) {
            Some(v) => vector(v, &field(key), len),
            None if len == 0 => Ok(DVector::zeros(0)),
            None => Err(FormatError::MissingField(field(key))),
        }
    };
    Ok(Iterate::new(
        vec_of("z", n)?,
        vec_of("lambda", p)?,
        vec_of("v", q)?,
    ))
}

fn parse_json(text: &str) -> Result<Map<String, Value>, FormatError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| FormatError::Malformed(e.to_string()))?;
    match value {
        Value::Object(obj) => Ok(obj),
        _ => Err(FormatError::Malformed("top level must be an object".into())),
    }
}

/// Parses a problem document. `H` is symmetrized after assembly.
pub fn parse_problem(text: &str) -> Result<ProblemFile, FormatError> {
    let obj = parse_json(text)?;
    let version = get(&obj, "version")?;
    if version.as_u64() != Some(FORMAT_VERSION) {
        return Err(FormatError::UnsupportedVersion(version.to_string()));
    }
    let n = index(get(&obj, "n")?, "n")?;
    let p = index(get(&obj, "p")?, "p")?;
    let q = index(get(&obj, "q")?, "q")?;
    if n == 0 {
        return Err(wrong("n", "at least 1"));
    }
    let data = ProblemData {
        hessian: matrix(get(&obj, "H")?, "H", n, n)?,
        linear_cost: vector(get(&obj, "f")?, "f", n)?,
        eq_matrix: optional_matrix(&obj, "G", p, n)?,
        eq_rhs: optional_vector(&obj, "h", p)?,
        ineq_matrix: optional_matrix(&obj, "A", q, n)?,
        ineq_rhs: optional_vector(&obj, "b", q)?,
    };
    let planted = match obj.get("planted") {
        None | Some(Value::Null) => None,
        Some(Value::Object(pl)) => Some(iterate_from(pl, "planted", n, p, q)?),
        Some(_) => return Err(wrong("planted", "an object")),
    };
    let metadata = match obj.get("metadata") {
        None | Some(Value::Null) => Metadata::default(),
        Some(Value::Object(md)) => Metadata {
            name: match md.get("name") {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) => Some(s.clone()),
                Some(_) => return Err(wrong("metadata.name", "a string")),
            },
            seed: match md.get("seed") {
                None | Some(Value::Null) => None,
                Some(v) => Some(v.as_u64().ok_or_else(|| wrong("metadata.seed", "a u64"))?),
            },
        },
        Some(_) => return Err(wrong("metadata", "an object")),
    };
    Ok(ProblemFile {
        problem: QpProblem::new(data)?,
        planted,
        metadata,
    })
}

#[derive(Serialize)]
struct DenseOut<'a> {
    dense: &'a [f64],
}

#[derive(Serialize)]
struct IterateOut<'a> {
    z: &'a [f64],
    lambda: &'a [f64],
    v: &'a [f64],
}

impl<'a> From<&'a Iterate> for IterateOut<'a> {
    fn from(it: &'a Iterate) -> Self {
        IterateOut {
            z: it.z.as_slice(),
            lambda: it.lambda.as_slice(),
            v: it.v.as_slice(),
        }
    }
}

#[derive(Serialize)]
struct MetadataOut<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct ProblemOut<'a> {
    version: u64,
    n: usize,
    p: usize,
    q: usize,
    H: DenseOut<'a>,
    f: &'a [f64],
    G: DenseOut<'a>,
    h: &'a [f64],
    A: DenseOut<'a>,
    b: &'a [f64],
    #[serde(skip_serializing_if = "Option::is_none")]
    planted: Option<IterateOut<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    metadata: Option<MetadataOut<'a>>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// Serializes a problem in dense form.
pub fn serialize_problem(
    problem: &QpProblem,
    planted: Option<&Iterate>,
    metadata: &Metadata,
) -> String {
    let (hd, gd, ad) = (
        row_major(problem.hessian()),
        row_major(problem.eq_matrix()),
        row_major(problem.ineq_matrix()),
    );
    let md = (metadata.name.is_some() || metadata.seed.is_some()).then_some(MetadataOut {
        name: metadata.name.as_deref(),
        seed: metadata.seed,
    });
    let doc = ProblemOut {
        version: FORMAT_VERSION,
        n: problem.n(),
        p: problem.p(),
        q: problem.q(),
        H: DenseOut { dense: &hd },
        f: problem.linear_cost().as_slice(),
        G: DenseOut { dense: &gd },
        h: problem.eq_rhs().as_slice(),
        A: DenseOut { dense: &ad },
        b: problem.ineq_rhs().as_slice(),
        planted: planted.map(IterateOut::from),
        metadata: md,
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("serializable");
    out.push('\n');
    out
}

/// Reads a primal-dual point for `problem`.
///
/// Accepts a bare `{"z", "lambda", "v"}` object, a result object with a
/// `solution` member, or a problem file with a `planted` member.
pub fn parse_solution(text: &str, problem: &QpProblem) -> Result<Iterate, FormatError> {
    let obj = parse_json(text)?;
    let (n, p, q) = (problem.n(), problem.p(), problem.q());
    if obj.contains_key("z") {
        return iterate_from(&obj, "solution", n, p, q);
    }
    for key in ["solution", "planted"] {
        if let Some(v) = obj.get(key) {
            let inner = v.as_object().ok_or_else(|| wrong(key, "an object"))?;
            return iterate_from(inner, key, n, p, q);
        }
    }
    Err(FormatError::MissingField("z".into()))
}

pub fn serialize_solution(it: &Iterate) -> String {
    let mut out = serde_json::to_string_pretty(&IterateOut::from(it)).expect("serializable");
    out.push('\n');
    out
}

#[derive(Serialize)]
struct IterationsOut {
    outer: usize,
    inner: usize,
    factorizations: usize,
}

#[derive(Serialize)]
struct ResultOut<'a> {
    status: &'static str,
    objective: f64,
    kkt: &'a KktError,
    kkt_max: f64,
    iterations: IterationsOut,
    solution: IterateOut<'a>,
}

/// Machine-readable result object; byte-identical for identical results.
pub fn result_json(problem: &QpProblem, result: &SolveResult) -> String {
    let doc = ResultOut {
        status: result.status.as_str(),
        objective: result.objective(problem),
        kkt: &result.kkt,
        kkt_max: result.kkt.max(),
        iterations: IterationsOut {
            outer: result.outer_iterations,
            inner: result.inner_iterations,
            factorizations: result.factorizations,
        },
        solution: IterateOut::from(&result.iterate),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("serializable");
    out.push('\n');
    out
}

/// Writes the trace as CSV with the fixed header, one row per accepted step.
pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in trace {
        writeln!(
            out,
            "{},{},{:e},{:e},{:e},{:e}",
            r.outer, r.inner, r.sigma, r.merit, r.kkt_max, r.step_len
        )?;
    }
    Ok(())
}
