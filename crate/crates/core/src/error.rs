use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    #[error("operators live on different spaces: {left} vs {right}")]
    IncompatibleSpace { left: String, right: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("eigenstate classification failed: {0}")]
    Classification(String),

    #[error("integration stalled at t = {time}: step size underflow (h = {step:e})")]
    Stiffness { time: f64, step: f64 },

    #[error("steady state is not unique: second kernel candidate has residual {residual:e}")]
    DegenerateSteadyState { residual: f64 },

    #[error("numerical failure: {message} (residual {residual:e})")]
    Numerical { message: String, residual: f64 },

    #[error("undefined statistics: mean phonon number {mean:e} is below the floor {floor:e}")]
    UndefinedStatistics { mean: f64, floor: f64 },

    #[error("cooling fit rejected: {0}")]
    FitRejected(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Short stable identifier used in machine-readable reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidTruncation(_) => "invalid-truncation",
            Error::IncompatibleSpace { .. } => "incompatible-space",
            Error::Domain(_) => "domain",
            Error::UnsupportedRegime(_) => "unsupported-regime",
            Error::InvalidState(_) => "invalid-state",
            Error::Classification(_) => "classification",
            Error::Stiffness { .. } => "stiffness",
            Error::DegenerateSteadyState { .. } => "degenerate-steady-state",
            Error::Numerical { .. } => "numerical",
            Error::UndefinedStatistics { .. } => "undefined-statistics",
            Error::FitRejected(_) => "fit-rejected",
            Error::Config(_) => "config",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
