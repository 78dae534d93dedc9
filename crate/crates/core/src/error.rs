use thiserror::Error;

/// Errors produced by the integrators, the problem constructors and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed arguments: dimension mismatches, non-finite entries, off-grid times.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Coefficient evaluated outside its domain (e.g. `v <= -1`).
    #[error("domain error: {0}")]
    Domain(String),

    /// The state hit a coefficient singularity that clamping could not repair.
    #[error("singular state (v={}, mu={}, phi={}): {reason}", state[0], state[1], state[2])]
    Singularity { state: [f64; 3], reason: String },

    /// A fixpoint sweep produced a non-finite iterate.
    #[error("divergence in sweep {sweep}: {reason}")]
    Divergence { sweep: usize, reason: String },

    /// Valid input that the requested scheme does not support.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Experiment configuration could not be parsed or is inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// Too many ensemble members failed during integration.
    #[error("runtime failure: {0}")]
    Runtime(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Process exit code used by the command-line harness.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Unsupported(_) | Error::Config(_) | Error::Domain(_) => 2,
            Error::Singularity { .. } | Error::Divergence { .. } | Error::Runtime(_) => 3,
            Error::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
