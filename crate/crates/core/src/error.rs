use thiserror::Error;

/// Errors raised by the optimizers, simulator and harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LionError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("range violation: |v[{index}]| = {value} exceeds R = {radius}{context}")]
    Range {
        index: usize,
        value: f64,
        radius: f64,
        context: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("divergence at step {step}: {what}")]
    Divergence { step: usize, what: String },

    #[error("invariant violated at step {step}: {what}")]
    Invariant { step: usize, what: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid pairing: {0}")]
    InvalidPairing(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl LionError {
    /// Machine-readable category, also used to pick the CLI exit code.
    pub fn category(&self) -> &'static str {
        match self {
            LionError::InvalidInput(_)
            | LionError::InvalidParameter(_)
            | LionError::Shape { .. }
            | LionError::Config(_)
            | LionError::InsufficientData(_)
            | LionError::InvalidPairing(_) => "config",
            LionError::Range { .. }
            | LionError::Divergence { .. }
            | LionError::Invariant { .. } => "divergence",
            LionError::Io(_) => "io",
        }
    }

    /// Attach node/step context to a range violation coming out of a compressor.
    pub(crate) fn with_context(self, ctx: impl Into<String>) -> Self {
        match self {
            LionError::Range {
                index,
                value,
                radius,
                context,
            } => LionError::Range {
                index,
                value,
                radius,
                context: format!("{context} ({})", ctx.into()),
            },
            other => other,
        }
    }
}

impl From<std::io::Error> for LionError {
    fn from(e: std::io::Error) -> Self {
        LionError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LionError>;
