use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{solver} did not converge within {cap} iterations (final residual {residual:e})")]
    NotConverged {
        solver: &'static str,
        cap: usize,
        residual: f64,
    },

    #[error("policy enumeration would yield {count} policies, above the limit of {limit}")]
    TooManyPolicies { count: u128, limit: u128 },

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid world: {0}")]
    InvalidWorld(String),
}

pub type Result<T> = std::result::Result<T, Error>;
