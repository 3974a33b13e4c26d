//! Error type shared by every module.

use thiserror::Error;

/// Failure modes of the library. The CLI maps these onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters, grids, configs or call sequences.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller broke a documented precondition (e.g. non-Hermitian multiplier for a real output).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Argument outside the domain of a function (e.g. t <= 0 for a heat kernel).
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature or refinement failed to reach its tolerance.
    #[error("tolerance not reached: {0}")]
    Tolerance(String),

    /// Input data inconsistent with a required identity.
    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("blow-up at t = {time}: max |u| = {max_amplitude:e}")]
    BlowUp { time: f64, max_amplitude: f64 },

    #[error("domain too small at t = {time}: outer-band ratio {ratio:e} exceeds {threshold:e}")]
    DomainTooSmall { time: f64, ratio: f64, threshold: f64 },

    #[error("non-integrable tail: fitted slope {slope} >= -1")]
    NonIntegrableTail { slope: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
