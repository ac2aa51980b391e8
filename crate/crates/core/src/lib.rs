//! Simulation and verification toolkit for the infinite rate mutually
//! catalytic branching process (IMUB) on the boundary of the quadrant.
//!
//! The toolkit is organized around three independent constructions of the
//! same Markov process and the machinery needed to check that they agree:
//!
//! * [`harmonic_measure`] — the exit distribution `Q_x` of planar Brownian
//!   motion from the open quadrant, in closed form: density, CDF, moments,
//!   inverse-CDF sampling, and the σ-finite jump measure `ν`.
//! * [`infinite_rate`] — the process itself, sampled exactly from its
//!   transition kernel `p_t(x,·) = Q_{e^{-ct}x + (1-e^{-ct})θ}`, and the
//!   Trotter product scheme that alternates drift flow with `Q`-jumps.
//! * [`planar_bm`] — a discretized planar Brownian motion, rectangular cone
//!   exits `D_x`, and the strong pathwise construction
//!   `X_t = C(0,t)·D_{x+Ξ(0,t)}`.
//! * [`finite_rate`] — Euler–Maruyama integration of the finite-rate SDE
//!   `dY_i = c(θ_i - Y_i)dt + √(γY_1Y_2)dW_i` whose γ→∞ limit is the IMUB
//!   process, plus the deterministic dual flow.
//! * [`dual_kernels`] — the lozenge product and the self-duality kernels
//!   `F`, `H` used as test functions and closed-form references throughout.
//! * [`generator`] — the integro-differential generator evaluated by
//!   compensated quadrature against `ν`, its closed form on duality
//!   kernels, and semigroup difference quotients.
//! * [`verify`] — Monte Carlo estimates with confidence bands,
//!   Kolmogorov–Smirnov tests against the exact CDFs, and the martingale
//!   residual test.
//! * [`checks`] — the end-to-end check suite behind `imub all-checks`.

pub mod checks;
pub mod dual_kernels;
pub mod error;
pub mod finite_rate;
pub mod generator;
pub mod harmonic_measure;
pub mod infinite_rate;
pub mod path;
pub mod planar_bm;
pub mod quadrature;
pub mod rng;
pub mod verify;

pub use dual_kernels::{kernel_f, kernel_h, lozenge, BoundaryPoint, Branch, DualityValue, QuadrantPoint};
pub use error::Error;
pub use path::{PathSample, PathState, Provenance, Scheme};

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
