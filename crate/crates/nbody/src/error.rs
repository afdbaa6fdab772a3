//! Crate-wide error type.
//!
//! Every fallible operation in the library reports through [`Error`]; the
//! binary maps these onto process exit codes (see `main.rs`).

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Two series with different truncation orders were combined.
    #[error("truncation order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    /// A series reciprocal or square root was requested too close to a zero
    /// constant term to be meaningful at the working precision.
    #[error("near-singular series: leading coefficient {leading:e} is below the floor {floor:e}")]
    NearSingularSeries { leading: f64, floor: f64 },

    /// Two bodies are closer than the collision floor, where the unsoftened
    /// equations of motion stop being valid.
    #[error(
        "collision between bodies {} and {}: distance {distance:e} under floor {floor:e}{}",
        pair.0, pair.1,
        time.map(|t| format!(" near t = {t:.6}")).unwrap_or_default()
    )]
    Collision {
        pair: (usize, usize),
        distance: f64,
        floor: f64,
        time: Option<f64>,
    },

    /// The ball radius handed to a radius estimate is outside its valid range.
    #[error("invalid ball radius b = {b}: {reason}")]
    InvalidRadiusParameter { b: f64, reason: String },

    /// A dense evaluation was requested outside the integrated span.
    #[error("t = {t} is outside the integrated span [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    /// The model is malformed or unsuitable for the requested operation.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A scalar parameter (order, tolerance, sample count, ...) is out of range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A probed function returned a non-finite value.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// The integrator gave up after too many steps without reaching the goal.
    #[error("step limit exceeded after {steps} steps at t = {t}")]
    StepLimit { steps: usize, t: f64 },

    /// A run configuration file could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
