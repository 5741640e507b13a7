use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input that must be finite was NaN or infinite.
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    /// A parameter violates its invariant. `field` names the offending
    /// parameter (config keys use their dotted form).
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParam { field: String, reason: String },

    /// The two NIC stages saturate at the same voltage, so the summed
    /// characteristic has no distinct inner/outer breakpoints.
    #[error("degenerate piecewise-linear characteristic: {0}")]
    DegeneratePwl(String),

    /// The circuit parameters do not admit the requested operating regime.
    #[error("operating-regime error: {0}")]
    Regime(String),

    /// The integrator produced a non-finite state.
    #[error("numerical divergence at t = {t:.6e} s ({stage})")]
    Divergence { t: f64, stage: &'static str },

    /// A numerical procedure failed for a reason other than divergence.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Two bit streams cannot be combined without resampling.
    #[error("stream alignment error: {0}")]
    Alignment(String),

    /// Malformed or contradictory configuration input.
    #[error("config error: {0}")]
    Config(String),

    /// A pipeline stage failed; wraps the underlying error with the stage name.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    /// Filesystem failure, annotated with the path involved.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
