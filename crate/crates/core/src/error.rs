use std::fmt;

/// Pipeline stage an error originated from. Printed as a label by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Parse,
    Validate,
    Model,
    Spectrum,
    Simulate,
    Synthesis,
    Sweep,
    Export,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Parse => "parse",
            Stage::Validate => "validate",
            Stage::Model => "model",
            Stage::Spectrum => "spectrum",
            Stage::Simulate => "simulate",
            Stage::Synthesis => "synthesis",
            Stage::Sweep => "sweep",
            Stage::Export => "export",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("[{stage}] {msg}")]
    Invalid { stage: Stage, msg: String },

    #[error("[parse] {0}")]
    Json(#[from] serde_json::Error),

    #[error("[parse] {0}")]
    Csv(#[from] csv::Error),

    #[error("[export] {0}")]
    Io(#[from] std::io::Error),

    #[error("[model] descriptor matrix E is singular: load {0} has D_L <= 0")]
    SingularE(String),

    #[error("[simulate] state became non-finite at t = {0} s")]
    NonFinite(f64),

    #[error("[simulate] frequency never reached the {boundary_hz} Hz boundary within {horizon} s (peak deviation {peak_hz:.4} Hz)")]
    BoundaryNotReached { boundary_hz: f64, horizon: f64, peak_hz: f64 },

    #[error("[synthesis] {0}")]
    Unreachable(String),
}

impl Error {
    pub fn invalid(stage: Stage, msg: impl Into<String>) -> Self {
        Error::Invalid { stage, msg: msg.into() }
    }

    pub fn stage(&self) -> Stage {
        match self {
            Error::Invalid { stage, .. } => *stage,
            Error::Json(_) | Error::Csv(_) => Stage::Parse,
            Error::Io(_) => Stage::Export,
            Error::SingularE(_) => Stage::Model,
            Error::NonFinite(_) | Error::BoundaryNotReached { .. } => Stage::Simulate,
            Error::Unreachable(_) => Stage::Synthesis,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
