use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed model or evidence text.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Caller supplied arguments that violate an operation's precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// The model itself is ill-formed (bad CPD structure, all-zero factor, ...).
    #[error("invalid model: {0}")]
    Model(String),

    /// Clique-size bounds that cannot be honoured.
    #[error("configuration error: {0}")]
    Config(String),

    /// Evidence with probability zero, or a belief update with no support.
    #[error("inconsistent evidence: {0}")]
    Inconsistent(String),

    #[error("exact oracle infeasible: elimination clique of size {size:.2} exceeds cap {cap:.2}")]
    OracleInfeasible { size: f64, cap: f64 },

    #[error("unknown variable {0}")]
    UnknownVariable(usize),

    /// Broken internal invariant; indicates a bug rather than bad input.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Model(_) | Error::Input(_) | Error::UnknownVariable(_) => 2,
            Error::Config(_) => 3,
            Error::Inconsistent(_) => 4,
            Error::OracleInfeasible { .. } => 5,
            Error::Internal(_) | Error::Io(_) => 1,
        }
    }
}
