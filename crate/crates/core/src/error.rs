use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("capacity exceeded: {what} needs {required} bytes but the budget is {budget} bytes")]
    Capacity { what: String, required: u64, budget: u64 },

    #[error("fixed-point overflow: {0}")]
    Overflow(String),

    #[error("no certificate at this configuration: ordinal {witness} violates the inequality at r_num = {r_num}")]
    NoCertificate { witness: u64, r_num: i64 },

    #[error("malformed certificate: {0}")]
    Structural(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
