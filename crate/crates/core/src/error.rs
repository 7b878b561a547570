use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpError {
    #[error("dimension mismatch in {field}: expected {expected}, found {found}")]
    DimensionMismatch {
        field: &'static str,
        expected: String,
        found: String,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("hessian is not symmetric (max deviation {0:e})")]
    Asymmetric(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("infeasible generator spec: {0}")]
    InfeasibleSpec(String),
    #[error("linear system is singular after perturbation escalation")]
    SingularSystem,
    #[error("line search stalled below the minimum step")]
    LineSearchStalled,
    #[error("result is not solved")]
    NotSolved,
}

pub(crate) fn check_len(field: &'static str, expected: usize, found: usize) -> Result<(), QpError> {
    if expected == found {
        Ok(())
    } else {
        Err(QpError::DimensionMismatch {
            field,
            expected: expected.to_string(),
            found: found.to_string(),
        })
    }
}
