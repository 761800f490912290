//! Crate-wide error type.
//!
//! Every fallible operation in the library returns [`Error`]. The variants are
//! grouped by what the caller can do about them: invalid inputs (state or
//! parameter), truncation of a photon-number expansion, conditioning on an
//! event of zero probability, and numerical non-convergence.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A state failed validation (negative mean photon number, bad mixture
    /// weights, and so on).
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A scalar parameter was outside its documented range.
    #[error("parameter {name} = {value} outside [{min}, {max}]")]
    Range {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// A context index was not in 1..=5.
    #[error("context index {0} outside 1..=5")]
    ContextIndex(usize),

    /// A photon-number expansion was truncated with too much probability mass
    /// beyond the cutoff. Carries the offending tail mass.
    #[error(
        "truncated photon-number expansion leaves tail mass {tail:.3e} above bound {bound:.3e}"
    )]
    Truncation { tail: f64, bound: f64 },

    /// Conditioning on an event with zero probability (for example a vacuum
    /// input under an event that requires a click).
    #[error("conditioning on {event} is undefined: P({event}) = 0 under this distribution")]
    UndefinedConditioning { event: &'static str },

    /// A correlation denominator vanished (no clicks on one of the modes).
    #[error("click marginal is zero; g correlation undefined")]
    ZeroMarginal,

    /// A click rate of 1 or above cannot be inverted to a mean photon number.
    #[error("click rate {rate} is saturated (must be < 1)")]
    Saturation { rate: f64 },

    /// Numerical routine failed to reach the requested tolerance.
    #[error("numerical routine reached {achieved:.3e}, requested {requested:.3e}")]
    Numeric { achieved: f64, requested: f64 },

    /// A counts table failed to parse or violated a count invariant.
    /// `line` is the 1-based line number in the input (header is line 1).
    #[error("counts table, line {line}: {message}")]
    CountsTable { line: usize, message: String },

    /// Derived event-class counts came out negative or otherwise impossible.
    #[error("inconsistent counts: {0}")]
    InconsistentCounts(String),

    /// A collection of series could not be analyzed as a whole.
    #[error("analysis input: {0}")]
    AnalysisInput(String),

    /// Fair sampling was requested but the data show a non-negligible
    /// multi-photon fraction, so the single-photon reading is unsafe.
    #[error(
        "fair sampling requested but {fraction:.4} of at-least-one-click trials \
         have multiple clicks; refusing to treat the source as single-photon"
    )]
    MultiPhotonContamination { fraction: f64 },

    /// File I/O wrapped with the offending path.
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}
