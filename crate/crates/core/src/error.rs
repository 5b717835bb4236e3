use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VolError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("theta {theta} outside parameter space ({lower}, {upper})")]
    OutOfBounds { theta: f64, lower: f64, upper: f64 },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("unsupported regime: {0}")]
    Regime(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for VolError {
    fn from(e: std::io::Error) -> Self {
        VolError::Io(e.to_string())
    }
}

impl From<csv::Error> for VolError {
    fn from(e: csv::Error) -> Self {
        VolError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for VolError {
    fn from(e: serde_json::Error) -> Self {
        VolError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, VolError>;
