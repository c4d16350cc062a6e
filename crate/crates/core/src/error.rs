use std::path::PathBuf;

/// Errors raised by the simulation kernels, the calibration pipeline and the
/// scenario harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("bond already exists for pair ({0}, {1})")]
    DuplicateBond(usize, usize),

    #[error("bond for pair ({0}, {1}) is not in the state required by this operation")]
    BondState(usize, usize),

    #[error("non-finite interaction between {a} and {b}: {detail}")]
    NumericalFailure { a: String, b: String, detail: String },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("no bond formed between the particles during the sintering phase")]
    NoBondFormed,

    #[error("bond did not fail within a pull distance of {0} m")]
    NoFracture(f64),

    #[error("unknown material reference `{0}`")]
    MissingMaterial(String),

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}:{line}: field `{field}`: {message}")]
    Field {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Process exit code used by the command-line tool: 1 for configuration
    /// and input problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite(_)
            | Error::NumericalFailure { .. }
            | Error::NoBondFormed
            | Error::NoFracture(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{name} = {value}")))
    }
}
