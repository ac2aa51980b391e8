//! Finite-rate processes: Euler–Maruyama integration of
//! `dY_i = c(θ_i - Y_i) dt + √(γ Y₁ Y₂) dW_i` and of its driftless version
//! `Z`, plus the deterministic dual flow.
//!
//! The scheme is explicit full-truncation Euler: the diffusion coefficient
//! uses the clamped state `√(γ·max(Y₁,0)·max(Y₂,0))` and the post-step state
//! is clamped componentwise to the closed quadrant. The diffusion
//! coefficient vanishes on the boundary, which keeps the absorbed-exit law
//! accurate even at moderate step sizes.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dual_kernels::{BoundaryPoint, QuadrantPoint};
use crate::error::Error;
use crate::path::{PathSample, PathState, Provenance, Scheme};
use crate::rng::stream;
use crate::Result;

/// Magnitude cap; exceeding it means the step size is too large for γ.
const BLOWUP_CAP: f64 = 1e12;

// Absorption rule for Z: snap to E when one coordinate is below this and the
// other exceeds it by ABSORB_RATIO.
const ABSORB_TOL: f64 = 1e-10;
const ABSORB_RATIO: f64 = 1e6;

/// Parameters of the finite-rate SDE.
#[derive(Debug, Clone, Copy)]
pub struct SdeConfig {
    /// Branching rate γ ≥ 0.
    pub gamma: f64,
    /// Migration rate c ≥ 0.
    pub c: f64,
    /// Mean field θ.
    pub theta: QuadrantPoint,
    pub step: f64,
    pub seed: u64,
}

impl SdeConfig {
    pub fn new(gamma: f64, c: f64, theta: QuadrantPoint, step: f64, seed: u64) -> Self {
        assert!(gamma >= 0.0 && c >= 0.0 && step > 0.0);
        Self {
            gamma,
            c,
            theta,
            step,
            seed,
        }
    }
}

/// State of the deterministic dual `Ỹ = (ỹ⁽¹⁾, ỹ⁽²⁾) ∈ E × [0,∞)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualState {
    pub y1: BoundaryPoint,
    pub y2: QuadrantPoint,
}

/// Closed-form dual flow `Ỹ_t = (e^{-ct} ỹ⁽¹⁾, (1-e^{-ct}) ỹ⁽¹⁾ + ỹ⁽²⁾)`.
pub fn dual_flow(initial: &DualState, c: f64, t: f64) -> DualState {
    assert!(t >= 0.0, "dual flow needs t ≥ 0");
    let decay = (-c * t).exp();
    let y1q = initial.y1.to_quadrant();
    DualState {
        y1: initial.y1.scale(decay),
        y2: QuadrantPoint::new(
            (1.0 - decay) * y1q.x1 + initial.y2.x1,
            (1.0 - decay) * y1q.x2 + initial.y2.x2,
        ),
    }
}

// One full-truncation Euler step; returns the clamped state.
#[inline]
fn em_step(
    y: [f64; 2],
    c: f64,
    theta: (f64, f64),
    gamma: f64,
    h: f64,
    sqrt_h: f64,
    rng: &mut ChaCha8Rng,
) -> [f64; 2] {
    let diff = (gamma * y[0] * y[1]).sqrt() * sqrt_h;
    let g1: f64 = rng.sample(StandardNormal);
    let g2: f64 = rng.sample(StandardNormal);
    [
        (y[0] + c * (theta.0 - y[0]) * h + diff * g1).max(0.0),
        (y[1] + c * (theta.1 - y[1]) * h + diff * g2).max(0.0),
    ]
}

// Core integrator: walks the uniform grid to `t_end`, invoking `observe`
// after every step with (time, state). Absorption (for Z) freezes the state.
fn integrate<F: FnMut(f64, [f64; 2])>(
    cfg: &SdeConfig,
    y0: &QuadrantPoint,
    t_end: f64,
    absorb: bool,
    rng: &mut ChaCha8Rng,
    mut observe: F,
) -> Result<[f64; 2]> {
    let h = cfg.step;
    let sqrt_h = h.sqrt();
    let theta = cfg.theta.as_pair();
    let n_steps = (t_end / h).round().max(0.0) as u64;
    let mut y = [y0.x1, y0.x2];
    let mut frozen = absorb && is_absorbed(y);
    for k in 1..=n_steps {
        if !frozen {
            y = em_step(y, cfg.c, theta, cfg.gamma, h, sqrt_h, rng);
            if y[0].max(y[1]) > BLOWUP_CAP {
                return Err(Error::NumericalBlowup {
                    t: k as f64 * h,
                    cap: BLOWUP_CAP,
                });
            }
            if absorb && is_absorbed(y) {
                let lo = if y[0] <= y[1] { 0 } else { 1 };
                y[lo] = 0.0;
                frozen = true;
            }
        }
        observe(k as f64 * h, y);
    }
    Ok(y)
}

#[inline]
fn is_absorbed(y: [f64; 2]) -> bool {
    let lo = y[0].min(y[1]);
    let hi = y[0].max(y[1]);
    lo < ABSORB_TOL && hi > lo * ABSORB_RATIO
}

// Record requested times by snapping to the nearest grid index.
fn record_on_grid(
    cfg: &SdeConfig,
    y0: &QuadrantPoint,
    times: &[f64],
    absorb: bool,
    scheme: Scheme,
) -> Result<PathSample> {
    assert!(
        times.windows(2).all(|w| w[0] < w[1]) && times.first().map_or(true, |&t| t >= 0.0),
        "times must be strictly increasing and nonnegative"
    );
    let t_end = times.last().copied().unwrap_or(0.0);
    let targets: Vec<u64> = times.iter().map(|t| (t / cfg.step).round() as u64).collect();
    let mut states = Vec::with_capacity(times.len());
    let mut next = 0usize;
    while next < targets.len() && targets[next] == 0 {
        states.push(PathState::from_quadrant(times[next], y0));
        next += 1;
    }
    let mut rng = stream(cfg.seed, 0);
    integrate(cfg, y0, t_end, absorb, &mut rng, |t, y| {
        let k = (t / cfg.step).round() as u64;
        while next < targets.len() && targets[next] == k {
            states.push(PathState {
                t: times[next],
                x1: y[0],
                x2: y[1],
                in_e: y[0] == 0.0 || y[1] == 0.0,
            });
            next += 1;
        }
    })?;
    Ok(PathSample {
        states,
        provenance: Provenance {
            scheme,
            step: cfg.step,
            seed: cfg.seed,
            initial_jump: false,
        },
    })
}

/// Integrate `Y^{γ,c,θ}` from `y0`, recording the states closest on the step
/// grid to the requested times.
pub fn simulate_y(cfg: &SdeConfig, y0: &QuadrantPoint, times: &[f64]) -> Result<PathSample> {
    record_on_grid(cfg, y0, times, false, Scheme::EulerMaruyama)
}

/// Terminal state of `Y` at `t_end` under an explicitly supplied stream;
/// the cheap primitive behind ensemble estimates.
pub fn y_terminal(
    cfg: &SdeConfig,
    y0: &QuadrantPoint,
    t_end: f64,
    rng: &mut ChaCha8Rng,
) -> Result<QuadrantPoint> {
    let y = integrate(cfg, y0, t_end, false, rng, |_, _| {})?;
    Ok(QuadrantPoint::new(y[0], y[1]))
}

/// Integrate the driftless process `Z` (γ-branching only). Once the state is
/// within absorption tolerance of `E` it is snapped to `E` and frozen.
pub fn simulate_z(
    gamma: f64,
    z0: &QuadrantPoint,
    step: f64,
    seed: u64,
    times: &[f64],
) -> Result<PathSample> {
    let cfg = SdeConfig::new(gamma, 0.0, QuadrantPoint::ORIGIN, step, seed);
    record_on_grid(&cfg, z0, times, true, Scheme::EulerMaruyama)
}

/// Terminal state of `Z` plus the pathwise weighted time integral
/// `∫₀^t c e^{-cr} Z_r dr` (trapezoid on the step grid), the pair entering
/// the finite-rate duality functional.
pub fn z_terminal_with_dual_integral(
    gamma: f64,
    z0: &QuadrantPoint,
    step: f64,
    t_end: f64,
    c: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(QuadrantPoint, QuadrantPoint)> {
    let cfg = SdeConfig::new(gamma, 0.0, QuadrantPoint::ORIGIN, step, 0);
    let mut acc = [0.0f64; 2];
    let mut prev = [z0.x1, z0.x2];
    let mut prev_w = 1.0; // c e^{-c·0}
    let z = integrate(&cfg, z0, t_end, true, rng, |t, y| {
        let w = (-c * t).exp();
        acc[0] += 0.5 * step * (prev_w * prev[0] + w * y[0]);
        acc[1] += 0.5 * step * (prev_w * prev[1] + w * y[1]);
        prev = y;
        prev_w = w;
    })?;
    Ok((
        QuadrantPoint::new(z[0], z[1]),
        QuadrantPoint::new(c * acc[0], c * acc[1]),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual_kernels::{kernel_f, Branch};
    use crate::harmonic_measure::{q_signed_cdf, QMeasureParams};
    use crate::verify::ks_statistic_sorted;
    use num_complex::Complex64;

    #[test]
    fn zero_gamma_is_the_drift_ode() {
        // Y_t = θ + e^{-ct}(y₀ - θ) up to O(step)
        let cfg = SdeConfig::new(0.0, 1.0, QuadrantPoint::new(2.0, 0.5), 1e-4, 1);
        let y0 = QuadrantPoint::new(0.0, 3.0);
        let path = simulate_y(&cfg, &y0, &[1.0]).unwrap();
        let s = &path.states[0];
        let e = (-1.0f64).exp();
        let expect = (2.0 + e * (0.0 - 2.0), 0.5 + e * (3.0 - 0.5));
        assert!((s.x1 - expect.0).abs() / expect.0 < 1e-3, "{} vs {}", s.x1, expect.0);
        assert!((s.x2 - expect.1).abs() / expect.1 < 1e-3);
    }

    #[test]
    fn coaxial_start_stays_on_axis() {
        // θ and y₀ on the same axis: the product Y₁Y₂ never reignites
        let cfg = SdeConfig::new(5.0, 1.0, QuadrantPoint::new(2.0, 0.0), 1e-3, 2);
        let y0 = QuadrantPoint::new(0.5, 0.0);
        let path = simulate_y(&cfg, &y0, &[0.5, 1.0, 3.0]).unwrap();
        for s in &path.states {
            assert_eq!(s.x2, 0.0);
            assert!(s.in_e);
        }
        // and the axis coordinate follows the ODE toward θ₁
        let last = path.states.last().unwrap();
        let expect = 2.0 + (-3.0f64).exp() * (0.5 - 2.0);
        assert!((last.x1 - expect).abs() < 1e-2);
    }

    #[test]
    fn driftless_coordinates_are_martingales() {
        let n = 30_000;
        let mut sum = [0.0f64; 2];
        let mut sumsq = [0.0f64; 2];
        for i in 0..n {
            let cfg = SdeConfig::new(1.0, 0.0, QuadrantPoint::ORIGIN, 1e-3, 3);
            let mut rng = stream(3, i as u64);
            let y = y_terminal(&cfg, &QuadrantPoint::new(1.0, 1.0), 1.0, &mut rng).unwrap();
            sum[0] += y.x1;
            sum[1] += y.x2;
            sumsq[0] += y.x1 * y.x1;
            sumsq[1] += y.x2 * y.x2;
        }
        for j in 0..2 {
            let mean = sum[j] / n as f64;
            let se = ((sumsq[j] / n as f64 - mean * mean) / n as f64).sqrt();
            assert!(
                (mean - 1.0).abs() <= 4.0 * se,
                "coordinate {j}: mean {mean}, se {se}"
            );
        }
    }

    #[test]
    fn z_on_boundary_is_constant() {
        let z0 = QuadrantPoint::new(0.0, 2.0);
        let path = simulate_z(1.0, &z0, 1e-3, 4, &[0.5, 1.0]).unwrap();
        for s in &path.states {
            assert_eq!((s.x1, s.x2), (0.0, 2.0));
        }
    }

    #[test]
    fn z_long_run_law_is_harmonic_measure() {
        // ℒ[Z_∞] = Q_z; by t = 50 nearly every path is absorbed
        let n = 20_000;
        let params = QMeasureParams::new(1.0, 1.0);
        let mut ws: Vec<f64> = (0..n)
            .map(|i| {
                let cfg = SdeConfig::new(1.0, 0.0, QuadrantPoint::ORIGIN, 1e-3, 0);
                let mut rng = stream(5, i as u64);
                let z = integrate(
                    &cfg,
                    &QuadrantPoint::new(1.0, 1.0),
                    50.0,
                    true,
                    &mut rng,
                    |_, _| {},
                )
                .unwrap();
                z[0] - z[1]
            })
            .collect();
        ws.sort_by(|a, b| a.total_cmp(b));
        let d = ks_statistic_sorted(&ws, |w| q_signed_cdf(&params, w).unwrap());
        assert!(d < 0.02, "KS = {d}");
    }

    #[test]
    fn brownian_scaling_of_z() {
        // (Z^γ_t) =ᵈ (Z_{γt}): compare γ=4 at t=0.25 with γ=1 at t=1
        let n = 20_000;
        let sample = |gamma: f64, t: f64, step: f64, seed: u64| -> Vec<f64> {
            let mut ws: Vec<f64> = (0..n)
                .map(|i| {
                    let cfg = SdeConfig::new(gamma, 0.0, QuadrantPoint::ORIGIN, step, 0);
                    let mut rng = stream(seed, i as u64);
                    let z = integrate(
                        &cfg,
                        &QuadrantPoint::new(1.0, 1.0),
                        t,
                        true,
                        &mut rng,
                        |_, _| {},
                    )
                    .unwrap();
                    z[0] - z[1]
                })
                .collect();
            ws.sort_by(|a, b| a.total_cmp(b));
            ws
        };
        let a = sample(4.0, 0.25, 2.5e-4, 6);
        let b = sample(1.0, 1.0, 1e-3, 7);
        let d = crate::verify::ks_two_sample_sorted(&a, &b);
        assert!(d < 0.025, "KS = {d}");
    }

    #[test]
    fn nonnegativity_everywhere() {
        let cfg = SdeConfig::new(50.0, 2.0, QuadrantPoint::new(1.0, 1.0), 1e-3, 8);
        let times: Vec<f64> = (1..=100).map(|k| k as f64 * 0.01).collect();
        let path = simulate_y(&cfg, &QuadrantPoint::new(1.0, 1.0), &times).unwrap();
        assert!(path.states.iter().all(|s| s.x1 >= 0.0 && s.x2 >= 0.0));
    }

    #[test]
    fn dual_flow_closed_form() {
        let s0 = DualState {
            y1: BoundaryPoint::axis1(1.0),
            y2: QuadrantPoint::ORIGIN,
        };
        let s = dual_flow(&s0, 1.0, std::f64::consts::LN_2);
        assert_eq!(s.y1.branch(), Branch::Axis1);
        assert!((s.y1.magnitude() - 0.5).abs() < 1e-15);
        assert!((s.y2.x1 - 0.5).abs() < 1e-15);
        assert_eq!(s.y2.x2, 0.0);

        // identity cases
        assert_eq!(dual_flow(&s0, 1.0, 0.0), s0);
        assert_eq!(dual_flow(&s0, 0.0, 5.0), s0);
    }

    #[test]
    fn dual_flow_semigroup_property() {
        let s0 = DualState {
            y1: BoundaryPoint::axis2(1.7),
            y2: QuadrantPoint::new(0.3, 0.9),
        };
        let c = 0.8;
        let a = dual_flow(&dual_flow(&s0, c, 0.4), c, 0.9);
        let b = dual_flow(&s0, c, 1.3);
        assert!((a.y1.magnitude() - b.y1.magnitude()).abs() < 1e-12);
        assert!((a.y2.x1 - b.y2.x1).abs() < 1e-12);
        assert!((a.y2.x2 - b.y2.x2).abs() < 1e-12);
    }

    #[test]
    fn finite_rate_duality_identity() {
        // E_y[F(Y_t,z)] = E_z[F(y, e^{-ct} Z_t) F(θ, ∫₀ᵗ c e^{-cr} Z_r dr)]
        let n = 100_000;
        let (c, t, gamma) = (1.0, 0.5, 1.0);
        let theta = QuadrantPoint::new(1.0, 1.0);
        let y = QuadrantPoint::new(1.0, 1.0);
        let z = QuadrantPoint::new(1.0, 0.0);
        let step = 1e-3;

        let mut lhs_sum = Complex64::new(0.0, 0.0);
        let mut lhs_sq = [0.0f64; 2];
        for i in 0..n {
            let cfg = SdeConfig::new(gamma, c, theta, step, 0);
            let mut rng = stream(100, i as u64);
            let yt = y_terminal(&cfg, &y, t, &mut rng).unwrap();
            let v = kernel_f(&yt, &z);
            lhs_sum += v;
            lhs_sq[0] += v.re * v.re;
            lhs_sq[1] += v.im * v.im;
        }
        let mut rhs_sum = Complex64::new(0.0, 0.0);
        let mut rhs_sq = [0.0f64; 2];
        for i in 0..n {
            let mut rng = stream(101, i as u64);
            let (zt, integral) =
                z_terminal_with_dual_integral(gamma, &z, step, t, c, &mut rng).unwrap();
            let v = kernel_f(&y, &zt.scale((-c * t).exp())) * kernel_f(&theta, &integral);
            rhs_sum += v;
            rhs_sq[0] += v.re * v.re;
            rhs_sq[1] += v.im * v.im;
        }
        let nf = n as f64;
        let lhs = lhs_sum / nf;
        let rhs = rhs_sum / nf;
        for j in 0..2 {
            let (l, r) = if j == 0 { (lhs.re, rhs.re) } else { (lhs.im, rhs.im) };
            let se_l = ((if j == 0 { lhs_sq[0] } else { lhs_sq[1] } / nf - l * l) / nf).sqrt();
            let se_r = ((if j == 0 { rhs_sq[0] } else { rhs_sq[1] } / nf - r * r) / nf).sqrt();
            let band = 4.0 * (se_l * se_l + se_r * se_r).sqrt();
            assert!(
                (l - r).abs() <= band,
                "component {j}: {l} vs {r} (band {band})"
            );
        }
    }

    #[test]
    fn moment_domination_for_boundary_starts() {
        // E[(Y^γ_{i,t})] ≤ exact X moment + 3σ for γ ∈ {1, 10, 100}
        use crate::harmonic_measure::q_moment;
        let x0 = QuadrantPoint::new(1.0, 0.0);
        let (c, t) = (1.0f64, 1.0f64);
        let theta = QuadrantPoint::new(1.0, 1.0);
        let e = (-c * t).exp();
        let anchor = QMeasureParams::new(
            e * x0.x1 + (1.0 - e) * theta.x1,
            e * x0.x2 + (1.0 - e) * theta.x2,
        );
        let exact = q_moment(&anchor, 1, 1.0).unwrap();
        let n = 20_000;
        for (gi, gamma) in [1.0, 10.0, 100.0].into_iter().enumerate() {
            let step = 1e-3_f64.min(1e-2 / gamma);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for i in 0..n {
                let cfg = SdeConfig::new(gamma, c, theta, step, 0);
                let mut rng = stream(200 + gi as u64, i as u64);
                let y = y_terminal(&cfg, &x0, t, &mut rng).unwrap();
                sum += y.x1;
                sumsq += y.x1 * y.x1;
            }
            let mean = sum / n as f64;
            let se = ((sumsq / n as f64 - mean * mean) / n as f64).sqrt();
            assert!(
                mean <= exact + 3.0 * se,
                "γ = {gamma}: mean {mean} vs exact {exact} (se {se})"
            );
        }
    }
}
