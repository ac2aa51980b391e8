//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The harmonic measure at a boundary start is the point mass δ_x;
    /// densities and CDFs are undefined there.
    #[error("degenerate start ({u}, {v}): Q is the point mass δ_x; use the sampler or the atom directly")]
    DegenerateStart { u: f64, v: f64 },

    /// ν has a non-integrable singularity at magnitude 1 on the first axis.
    #[error("ν density is singular at axis-1 magnitude 1")]
    SingularPoint,

    /// Moments of Q exist only for exponents in [1, 2).
    #[error("moment exponent p = {p} outside [1, 2); the integral diverges at p = 2")]
    InvalidExponent { p: f64 },

    /// The compensated integrand violates its contract near the singularity
    /// or grows faster than linearly at infinity.
    #[error("integrand not ν-integrable: {reason}")]
    NonIntegrable { reason: String },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature stalled at error {achieved:.3e} (requested {requested:.3e})")]
    QuadratureTolerance { achieved: f64, requested: f64 },

    /// A discretized walk did not exit within the configured step budget.
    #[error("no cone exit within {budget} steps; exit is a.s. finite, check step configuration")]
    StepBudgetExceeded { budget: u64 },

    /// A drift schedule could not be evaluated on the requested horizon.
    #[error("drift schedule not evaluable: {reason}")]
    ScheduleError { reason: String },

    /// An SDE state exceeded the magnitude cap; the step size is too large
    /// for the given branching rate.
    #[error("SDE state exceeded {cap:.1e} at t = {t}; reduce the step size")]
    NumericalBlowup { t: f64, cap: f64 },

    /// Monte Carlo estimation needs a minimum sample count.
    #[error("insufficient samples: n = {n} < 100")]
    InsufficientSamples { n: usize },

    /// Invalid user-facing configuration (CLI or config file).
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
