use crate::analysis::RabiFitResult;
use crate::fieldcore::Vec3;

/// Errors produced anywhere in the imaging pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "field point {point:?} lies {distance:.3e} m from segment {segment}{}",
        pixel.map(|(i, j)| format!(" (pixel {i},{j})")).unwrap_or_default()
    )]
    Singularity {
        segment: usize,
        point: Vec3,
        distance: f64,
        pixel: Option<(usize, usize)>,
    },

    #[error("no oscillation detected (periodogram snr {snr:.2})")]
    NoOscillation { snr: f64 },

    #[error("fit did not converge after {iterations} iterations")]
    NotConverged {
        iterations: usize,
        last: Box<RabiFitResult>,
    },

    #[error("only {fraction:.3} of pixels converged (floor {floor:.3})")]
    LowConvergence { fraction: f64, floor: f64 },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error("config error at {path}: {msg}")]
    Config { path: String, msg: String },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            msg: msg.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Json(_) | Error::Domain(_) => 2,
            Error::Verification(_) => 4,
            Error::Io(_) | Error::Format { .. } => 2,
            Error::Singularity { .. }
            | Error::NoOscillation { .. }
            | Error::NotConverged { .. }
            | Error::LowConvergence { .. }
            | Error::NotFound(_) => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
