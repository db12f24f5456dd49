use thiserror::Error;

/// Errors produced by grid construction, relation algebra and the scenario runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("arity mismatch: {0}")]
    Arity(String),

    #[error("grid mismatch: operands live on different grids")]
    GridMismatch,

    #[error("relation spec error: {0}")]
    Spec(String),

    #[error("iteration cap {cap} exceeded without stabilization")]
    CapExceeded { cap: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("state out of range: {0}")]
    Range(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unresolved name `{0}`")]
    Unresolved(String),

    #[error("render unsupported: {0}")]
    Render(String),

    #[error("assertion failed: {0}")]
    Expectation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
