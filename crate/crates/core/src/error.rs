use thiserror::Error;

/// Errors raised by the analytic and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A DTMS chain with both states absorbing has no unique stationary law.
    #[error("degenerate chain: p11 = p22 = 1 has no unique stationary distribution")]
    DegenerateChain,

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("bracket failure: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    BracketFailure { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("degenerate optimum: effective capacity at the optimum is {c_e:e} (R* = {r_star:e})")]
    DegenerateOptimum { r_star: f64, c_e: f64 },

    #[error("numerical overflow: {0}")]
    Overflow(String),

    /// Output could not be written or input could not be read.
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::Io(_) => 2,
            Error::DegenerateChain | Error::NoSolution(_) | Error::Infeasible(_) => 3,
            Error::BracketFailure { .. } | Error::DegenerateOptimum { .. } | Error::Overflow(_) => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
