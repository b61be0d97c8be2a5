use thiserror::Error;

use crate::trace::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad or out-of-guard configuration values.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// An operation was invoked on an assignment in the wrong state.
    #[error("state error: {0}")]
    State(String),

    /// A refutation or trace is malformed.
    #[error("structure error: {0}")]
    Structure(String),

    /// A branch reached a complete assignment that satisfies every premise,
    /// including non-dictatorship. Signals an encoding bug.
    #[error("theorem falsified: branch at depth {depth} closed with a conflict-free model")]
    TheoremFalsified { depth: usize, model: Vec<bool> },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("DIMACS error at line {line}: {message}")]
    Dimacs { line: usize, message: String },
}
