use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature tolerance not met (error estimate {achieved:e}, partial value {value})")]
    ToleranceNotMet { achieved: f64, value: f64 },
    #[error("tail norm diverges for beta = {beta}")]
    Divergent { beta: f64 },
    #[error("series did not converge within {terms} terms")]
    SeriesNotConverged { terms: usize },
    #[error("integration window too small: {0}")]
    WindowTooSmall(String),
    #[error("time {t} outside the admissible range [0, {horizon}{closing}")]
    TimeOutOfRange { t: f64, horizon: f64, closing: char },
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
