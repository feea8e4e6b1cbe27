use std::path::PathBuf;

/// Errors raised anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("non-finite partial likelihood at iteration {iteration}; trace: {trace:?}")]
    NonFinite {
        iteration: usize,
        /// (iteration, log-likelihood, gradient sup-norm) for every completed iteration.
        trace: Vec<(usize, f64, f64)>,
    },

    #[error("no bracket for u: {0}")]
    NoBracket(String),

    #[error("{what} did not converge after {iterations} iterations (last residual {last_residual:e})")]
    NonConvergence {
        what: String,
        iterations: usize,
        last_residual: f64,
        history: Vec<f64>,
    },

    #[error("signal strength could not be identified: {0}")]
    Identification(String),

    #[error("rs solve failed at candidate S = {signal}: {source}")]
    AtCandidate {
        signal: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// I/O failure on `path`.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
