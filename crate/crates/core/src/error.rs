use std::fmt;

use thiserror::Error;

/// Pipeline stage names used in estimation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Pulse,
    Synthesis,
    Band,
    Correlation,
    Prony,
    Beamform,
    DelayFit,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Pulse => "pulse",
            Stage::Synthesis => "synthesis",
            Stage::Band => "band",
            Stage::Correlation => "correlation",
            Stage::Prony => "prony",
            Stage::Beamform => "beamform",
            Stage::DelayFit => "delay_fit",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum JadeError {
    /// A configuration or input violates a documented invariant.
    #[error("invalid configuration: {0}")]
    Invalid(String),

    /// A numerical stage could not produce an estimate.
    #[error("estimation failed in {stage}: {message}")]
    Estimation { stage: Stage, message: String },

    #[error("polynomial root finding did not converge for coefficients {coeffs}")]
    RootsNotConverged { coeffs: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl JadeError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        JadeError::Invalid(msg.into())
    }

    pub(crate) fn estimation(stage: Stage, msg: impl Into<String>) -> Self {
        JadeError::Estimation {
            stage,
            message: msg.into(),
        }
    }

    /// Process exit code used by the CLI: 2 for validation problems, 3 for
    /// estimation failures, 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            JadeError::Invalid(_) | JadeError::Parse { .. } => 2,
            JadeError::Estimation { .. } | JadeError::RootsNotConverged { .. } => 3,
            JadeError::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, JadeError>;
