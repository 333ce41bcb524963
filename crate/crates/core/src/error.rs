use std::path::PathBuf;

use crate::psys::State;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error category, mapped one-to-one onto CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The computation finished but the scientific answer is negative.
    Negative,
    Config,
    Precondition,
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Negative => 1,
            ErrorKind::Config => 2,
            ErrorKind::Precondition => 3,
            ErrorKind::Numerical => 4,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite value returned by {function}")]
    NonFinite { function: &'static str },

    #[error("degenerate sliding: sigma- equals sigma+ ({sigma})")]
    DegenerateSliding { sigma: f64 },

    #[error("step size underflow near tangency at t={t}, state={state:?}")]
    TangencyStall { t: f64, state: State },

    #[error("more than {max_events} switching events; chattering suspected")]
    RunawayChatter { max_events: usize },

    #[error("no return to the switching surface within t_max={t_max}")]
    NoReturn { t_max: f64 },

    #[error("departure from the switching surface is tangential (sigma={sigma}, t={t})")]
    TangencyAmbiguity { sigma: f64, t: f64 },

    #[error("degenerate coefficient: {0}")]
    Degenerate(String),

    #[error("internal consistency check failed for {what}: {first} vs {second}")]
    Inconsistent {
        what: &'static str,
        first: f64,
        second: f64,
    },

    #[error("theorem not applicable: {0}")]
    Inapplicable(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("grid design error: {0}")]
    GridDesign(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Parse { .. } | Error::Io { .. } => {
                ErrorKind::Config
            }
            Error::Precondition(_) => ErrorKind::Precondition,
            // A vanishing D or h0 means the theorem does not apply.
            Error::Inapplicable(_) | Error::Degenerate(_) => ErrorKind::Negative,
            Error::NonFinite { .. }
            | Error::DegenerateSliding { .. }
            | Error::TangencyStall { .. }
            | Error::RunawayChatter { .. }
            | Error::NoReturn { .. }
            | Error::TangencyAmbiguity { .. }
            | Error::Inconsistent { .. }
            | Error::NonConvergence(_)
            | Error::InsufficientData(_)
            | Error::GridDesign(_) => ErrorKind::Numerical,
        }
    }
}
