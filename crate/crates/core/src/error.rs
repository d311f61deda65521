//! Error type shared by every module in the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by field operations, losses, decoders and generators.
///
/// The variants are deliberately coarse: callers (in particular the CLI)
/// dispatch on the variant, while the message carries the specifics.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Inputs are structurally valid but carry no usable information
    /// (e.g. an all-masked loss, an empty foreground mask).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Dimensions or channel counts of related inputs do not agree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A file or byte stream is not in the expected format.
    #[error("format error: {0}")]
    Format(String),

    /// A byte stream ends before the payload its header declares.
    #[error("truncated data: {0}")]
    Truncated(String),

    /// A random generator could not satisfy its constraints within the
    /// retry budget.
    #[error("generation failed: {0}")]
    Generation(String),

    /// An optimization step produced a non-finite loss.
    #[error("divergence: {0}")]
    Divergence(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// Rejects zero, negative and NaN values for a parameter that must be
    /// strictly positive.
    pub(crate) fn require_positive(value: f64, what: &str) -> Result<()> {
        if value > 0.0 {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "{what} must be positive, got {value}"
            )))
        }
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
