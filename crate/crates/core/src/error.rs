use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is out of range or inconsistent.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An operation's precondition on the input graph or move does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A switching cannot be applied without producing a non-simple graph.
    #[error("invalid move: {0}")]
    InvalidMove(String),

    /// Rejection sampling failed too many times in a row.
    #[error("rejection stall after {attempts} consecutive failures; use the switching-chain method for d = {d}")]
    RejectionStall { attempts: u64, d: usize },

    /// The requested exact computation exceeds the configured budget.
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// Malformed graph file.
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A function evaluation produced a non-finite value.
    #[error("non-finite value: {0}")]
    Evaluation(String),

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
