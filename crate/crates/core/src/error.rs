use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Inconsistent configuration: shapes, dimensions, unknown kinds.
    #[error("configuration error: {0}")]
    Config(String),
    /// Invalid input data (NaN coordinates, empty vectors, mismatched images).
    #[error("input error: {0}")]
    Input(String),
    /// A value outside its admissible range.
    #[error("range error: {0}")]
    Range(String),
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A non-finite value appeared while differentiating through `op`.
    #[error("numeric fault in {op}: {detail}")]
    NumericFault {
        /// Name of the recorded operation.
        op: &'static str,
        /// Human readable context.
        detail: String,
    },
    /// Training produced a non-finite loss.
    #[error("training diverged at step {step} (lr {lr}, grad norm {grad_norm}): {detail}")]
    Diverged {
        /// Optimizer step at which the loss became non-finite.
        step: usize,
        /// Learning rate in effect.
        lr: f64,
        /// Global gradient L2 norm at that step.
        grad_norm: f64,
        /// Extra diagnostics.
        detail: String,
    },
    /// Malformed binary or text payload.
    #[error("format error at offset {offset}: {reason}")]
    Format {
        /// Byte (or line, for text) offset of the problem.
        offset: usize,
        /// What was wrong.
        reason: String,
    },
    /// A file written by an incompatible version.
    #[error("unsupported version {found} (expected {expected})")]
    UnsupportedVersion {
        /// Version in the file.
        found: u32,
        /// Version this build reads.
        expected: u32,
    },
    /// A computation with no defined result (e.g. a slope fitted to a flat spectrum).
    #[error("undefined result: {0}")]
    Degenerate(String),
}

/// Result alias for [`Error`].
pub type Result<T> = core::result::Result<T, Error>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::Error::$kind(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
