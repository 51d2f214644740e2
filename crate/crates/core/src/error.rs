use thiserror::Error;

/// Errors raised by the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A state touches the simplex boundary where the entropic terms diverge.
    #[error("state outside the interior chart domain: {0}")]
    ChartDomain(String),

    #[error("invalid mode: {0}")]
    InvalidMode(String),

    #[error("step size underflow at t = {t:.6e}; state {state}")]
    Stiffness { t: f64, state: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("not a rest point: residual {residual:.3e} exceeds {tolerance:.1e}")]
    NotRestPoint { residual: f64, tolerance: f64 },

    #[error("state does not match the expected configuration: {0}")]
    ConfigurationMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
