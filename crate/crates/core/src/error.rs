use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature exhausted its subdivision budget.
    #[error("quadrature did not converge{context}: error estimate {estimate:.3e} after {subdivisions} subdivisions")]
    Convergence {
        context: String,
        estimate: f64,
        subdivisions: usize,
    },

    /// `invariant` is a short name of the violated property, e.g. "trace".
    #[error("validation failed ({invariant}): {detail}")]
    Validation {
        invariant: &'static str,
        detail: String,
    },

    #[error(
        "capacity exceeded: {required_bytes} bytes required for the propagated tensor \
         (primary memory cost {pmc_bytes} bytes){}",
        budget.map(|b| format!(", budget {b} bytes")).unwrap_or_default()
    )]
    Capacity {
        required_bytes: u128,
        pmc_bytes: u128,
        budget: Option<u128>,
    },

    #[error("path sum over {paths} paths exceeds the limit of {limit}")]
    Size { paths: u128, limit: u128 },

    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::Validation {
            invariant,
            detail: detail.into(),
        }
    }

    /// Adds location information to a convergence failure; other variants pass through.
    pub(crate) fn in_context(self, ctx: impl FnOnce() -> String) -> Self {
        match self {
            Error::Convergence {
                context,
                estimate,
                subdivisions,
            } => Error::Convergence {
                context: format!(" in {}{}", ctx(), context),
                estimate,
                subdivisions,
            },
            other => other,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Validation { .. }
            | Error::Domain(_)
            | Error::Size { .. } => 2,
            Error::Capacity { .. } => 3,
            Error::Convergence { .. } => 4,
            Error::Io(_) => 5,
        }
    }
}
