use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parameter outside domain: {0}")]
    Domain(String),
    #[error("estimation failed after {iterations} iterations (gradient norm {gradient_norm:.3e}, last iterate {last_iterate:?}): {context}")]
    Estimation {
        context: String,
        iterations: usize,
        gradient_norm: f64,
        last_iterate: Vec<f64>,
    },
    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
