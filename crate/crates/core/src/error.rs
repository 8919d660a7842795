use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("state mode error: {0}")]
    Mode(String),
    #[error("channel definition error: {0}")]
    Channel(String),
    #[error("numerical consistency error: {0}")]
    Numerical(String),
    #[error("input {x} outside the admissible domain {bound}")]
    Domain { x: f64, bound: f64 },
    #[error("unsupported parameter {index}: {reason}")]
    UnsupportedParameter { index: usize, reason: String },
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("quadrature failed to reach tolerance on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },
    #[error("endpoint {0} lies outside the training domain")]
    Extrapolation(f64),
    #[error("non-finite gradient at parameter {0}")]
    NonFiniteGradient(usize),
}

impl Error {
    pub(crate) fn invalid_input(msg: &str) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn numerical(msg: &str) -> Self {
        Error::Numerical(msg.into())
    }
}
