//! Error types for the simulator crates.

use thiserror::Error;

/// Top-level simulation and configuration errors.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("{0}")]
    Parse(#[from] helio_asl::ParseError),

    #[error("config: {0}")]
    Config(String),

    #[error("validation: {0}")]
    Validation(String),

    #[error("trace: {0}")]
    Trace(String),

    #[error("simulation horizon exceeded after {elapsed_ms} ms waiting for {waiting_for}")]
    HorizonExceeded { elapsed_ms: u64, waiting_for: String },

    #[error("log line {line}: {message}")]
    MalformedLog { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors raised by belief-base mutations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum BeliefError {
    #[error("belief `{0}` is not ground")]
    NotGround(String),

    #[error("plan bodies may not write the internal belief functor `{0}`")]
    Permission(String),

    #[error("unrecognized persist medium `{0}` (expected none, fram, or flash)")]
    BadLifetime(String),

    #[error("no estimate belief named `{0}` exists")]
    UnknownEstimate(String),
}

/// Errors raised while writing or reading persisted belief images.
#[derive(Debug, Error, PartialEq)]
pub enum PersistError {
    #[error("belief `{0}` contains variables and cannot be serialized")]
    NotGround(String),

    #[error("persist needs {needed_uj} uJ but the buffer holds {available_uj} uJ")]
    InsufficientEnergy { needed_uj: f64, available_uj: f64 },

    #[error("image checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Corrupt { stored: u32, computed: u32 },

    #[error("unsupported image version {0}")]
    Version(u8),

    #[error("malformed image: {0}")]
    Malformed(String),
}
