use thiserror::Error;

/// Errors raised by the localization pipeline and its building blocks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A numeric input was NaN or infinite, or a parameter left its valid domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A point lies beyond the major-axis extent of the ellipse, where the
    /// split-curve residuals are undefined.
    #[error("point outside the major-axis band: |4x' - 2d| = {excess:.6} > 2d + lambda = {limit:.6}")]
    OutOfBand { excess: f64, limit: f64 },

    /// A time query fell outside the span covered by a track or trace.
    #[error("time {t} s outside span [{start}, {end}] s")]
    Range { t: f64, start: f64, end: f64 },

    /// Invalid configuration (template too short for the sampling grid, bad grid, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed or insufficient input data.
    #[error("input error: {0}")]
    Input(String),

    /// The ellipse fit produced no finite loss anywhere on the grid.
    #[error("fit failure: {0}")]
    FitFailure(String),

    /// A pipeline stage failed; `stage` names where.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, with stage wrappers peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain(format!("{what} is not finite ({value})")))
    }
}
