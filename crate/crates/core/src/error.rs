use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("value {value} is outside the domain [0, 1] ({what})")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid interval [{a}, {b}]: require 0 <= a <= b <= 1")]
    Interval { a: f64, b: f64 },

    #[error("{0}")]
    Composition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("model parse error: {0}")]
    ModelParse(String),

    #[error("model shape error: {0}")]
    Shape(String),

    #[error("model validation error: {0}")]
    Validation(String),

    #[error("point {point:?} is outside the region")]
    OutsideRegion { point: Vec<f64> },

    #[error("infeasible target: {0}")]
    Infeasible(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by bad user input (as opposed to runtime conditions).
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Io(_) | Error::Infeasible(_) | Error::Unsupported(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
