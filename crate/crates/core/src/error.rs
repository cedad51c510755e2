use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument is outside its physical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Vector or matrix sizes disagree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Two delay columns coincide so the steering Gram matrix is singular.
    #[error("degenerate geometry at eavesdropper {en}: {reason}")]
    DegenerateGeometry { en: usize, reason: String },

    /// No feasible point exists for the requested constraints.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The localizer could not produce a finite estimate.
    #[error("search failure: {0}")]
    SearchFailure(String),

    /// The alternating ascent decreased the objective.
    #[error("objective decreased at iteration {iteration}: {before} -> {after}")]
    NonMonotone {
        iteration: usize,
        before: f64,
        after: f64,
    },

    /// Malformed or inconsistent configuration.
    #[error("config error (line {line}): {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable label used when tallying trial failures.
    pub fn cause(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Dimension(_) => "dimension",
            Error::DegenerateGeometry { .. } => "degenerate_geometry",
            Error::Infeasible(_) => "infeasible",
            Error::SearchFailure(_) => "search_failure",
            Error::NonMonotone { .. } => "non_monotone",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}
