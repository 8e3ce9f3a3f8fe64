//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A requested time lies outside the trajectory's span (or an FD stencil
    /// around it would).
    #[error("time {t} outside usable span [{lo}, {hi}]")]
    OutOfSpan { t: f64, lo: f64, hi: f64 },

    /// Too few inputs (samples, jet vectors, ...).
    #[error("{what}: need at least {needed}, got {got}")]
    Arity {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    /// Jet or derivative index outside the valid range.
    #[error("index {index} out of range (max {max})")]
    Index { index: usize, max: usize },

    /// Vector dimension mismatch.
    #[error("{what}: expected dimension {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Operation requires a specific Lagrangian order.
    #[error("operation requires order {required}, system has order {actual}")]
    Order { required: usize, actual: usize },

    /// A computation produced NaN or infinity.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Invalid constructor or configuration parameter.
    #[error("invalid parameter {name} = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// The Lagrangian has no explicit closure for its highest derivative.
    #[error("lagrangian has no explicit closure for the highest derivative")]
    MissingClosure,

    /// No quadrature channel attached to the trajectory.
    #[error("trajectory has no quadrature channel attached")]
    QuadratureMissing,

    /// Step size underflow: the integrator cannot meet the tolerance.
    #[error("step size underflow at t = {t} (stiffness or loss of smoothness)")]
    Stiffness { t: f64 },

    /// The solution left the representable range in finite time.
    #[error("solution blow-up; last valid time {last_valid_time}")]
    BlowUp { last_valid_time: f64 },

    /// Step budget exhausted before reaching the end time.
    #[error("exceeded {max_steps} steps at t = {t}")]
    MaxSteps { max_steps: usize, t: f64 },

    /// A theorem hypothesis failed its runtime validation.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// Experiment configuration problem.
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn hypothesis(msg: impl Into<String>) -> Self {
        Error::Hypothesis(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
