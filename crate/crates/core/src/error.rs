use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("{what} does not exist for {spec}")]
    Existence { what: &'static str, spec: String },

    #[error("{func} failed to converge: {detail}")]
    Convergence { func: &'static str, detail: String },

    #[error("hypergeometric series diverges (convergence margin {margin} <= 0)")]
    Divergence { margin: f64 },

    #[error("hypergeometric series did not converge within {terms} terms")]
    SeriesNotConverged { terms: usize },

    #[error("invalid grouped data: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no starting value admits a root of the Gini equation for {0}")]
    NoStartingValues(String),

    #[error("mean required for GMM")]
    MeanRequired,

    #[error("no observations left after filtering")]
    EmptyAfterFiltering,

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable tag for reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Existence { .. } => "existence",
            Error::Convergence { .. } => "convergence",
            Error::Divergence { .. } => "series_divergent",
            Error::SeriesNotConverged { .. } => "series_not_converged",
            Error::Validation(_) => "validation",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NoStartingValues(_) => "no_starting_values",
            Error::MeanRequired => "mean_required",
            Error::EmptyAfterFiltering => "empty_after_filtering",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }

    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
