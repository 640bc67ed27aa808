//! Error type shared across the crate.

use thiserror::Error;

/// Errors surfaced by waveform construction, detection and analytics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Tone spacing and waveform shape are undefined below two tones.
    #[error("invalid tone count {tones}: a multisine needs at least 2 tones")]
    InvalidToneCount { tones: u32 },

    /// Configuration field violated one of its invariants.
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    /// Received symbol length does not match the hypothesis waveforms.
    #[error("sample count mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Detection was requested against an empty hypothesis set.
    #[error("hypothesis set is empty")]
    EmptyHypotheses,

    /// PAPR of the all-zero symbol is 0/0.
    #[error("PAPR undefined for an all-zero symbol")]
    UndefinedPapr,

    /// Argument outside the mathematical domain of a special function.
    #[error("domain error in {function}: {message}")]
    Domain {
        function: &'static str,
        message: String,
    },

    /// Waveform pair spans a rank-deficient subspace.
    #[error("waveforms for tone counts {i} and {j} are numerically parallel")]
    DegeneratePair { i: u32, j: u32 },

    /// Eigensystem quantities must be finite with opposite-sign mu pair.
    #[error("eigensystem is not usable: {0}")]
    BadEigensystem(String),

    /// Passband moment oracle refuses under-resolved sampling.
    #[error("oversample factor {got} too small for {tones} tones: need at least {min}")]
    OversampleTooSmall { got: usize, min: usize, tones: u32 },

    /// Adaptive quadrature ran out of subdivisions.
    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    /// A sweep needs at least one transmit power.
    #[error("power sweep is empty")]
    EmptySweep,

    /// Monte Carlo estimators need at least one trial.
    #[error("trial count must be positive")]
    NoTrials,
}

pub type Result<T> = std::result::Result<T, Error>;
