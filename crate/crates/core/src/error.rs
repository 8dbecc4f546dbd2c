use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("N_B + s must be even (got N_B = {n_b}, s = {order})")]
    Parity { n_b: usize, order: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("covariance is not positive semidefinite: min eigenvalue {min} vs max {max}")]
    NotPsd { min: f64, max: f64 },
    #[error("phase alphabet of {resolution} needs at least {resolution} codewords; smallest feasible N_B is {min_n_b}")]
    AlphabetTooLarge { resolution: usize, min_n_b: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
