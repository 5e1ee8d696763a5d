use thiserror::Error;

/// Errors produced by the library.
///
/// The variants are split along the lines the CLI cares about: malformed
/// input versus exhausted resource budgets versus model preconditions.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("resource limit exceeded: {limit} (cap = {cap})")]
    Resource { limit: &'static str, cap: u64 },

    #[error("transition matrix is not ergodic: {0}")]
    NotErgodic(String),

    #[error("suffix set is not FSM-closed: state {state:?} with symbol {symbol} has no determined successor")]
    NotClosed { state: Vec<usize>, symbol: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
