//! Discretized planar Brownian motion, rectangular cone exits, and the
//! strong pathwise construction `X_t = C(0,t) · D_{x + Ξ(0,t)}`.
//!
//! One Brownian path serves a whole nondecreasing family of cones: for
//! `y ≤ x` componentwise, the cone `[-y,∞)` sits inside `[-x,∞)`, so exits
//! couple monotonically path by path and a walker can simply keep going when
//! the cone grows. That coupling is what the strong construction rides on.
//!
//! The walker takes fixed steps of size `step` near the boundary. Far from
//! the boundary it may take one exact Gaussian macro-step sized `(d/6)²`
//! where `d` is the distance to the cone boundary (`far_field` flag, on by
//! default): Brownian increments over any horizon are exact in law, and with
//! the guard factor 6 the probability of an undetected boundary dip inside a
//! macro-step is below `exp(-36)` per step, far under Monte Carlo
//! resolution. This removes the quadratic cost of long excursions while
//! leaving the near-boundary discretization — the only source of bias —
//! untouched.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dual_kernels::{BoundaryPoint, QuadrantPoint};
use crate::error::Error;
use crate::path::{PathSample, PathState, Provenance, Scheme};
use crate::quadrature::adaptive_real;
use crate::rng::stream;
use crate::Result;

/// Walker configuration. `step` is the near-boundary time discretization;
/// the exit law converges to the harmonic measure as `step → 0`.
#[derive(Debug, Clone, Copy)]
pub struct WalkConfig {
    pub step: f64,
    pub max_steps: u64,
    /// Exact Gaussian macro-steps away from the boundary.
    pub far_field: bool,
    /// Per-coordinate Brownian-bridge dip detection within near-field steps;
    /// reduces projection bias at a given step size. Off by default.
    pub bridge_correction: bool,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            step: 1e-4,
            max_steps: 1_000_000_000,
            far_field: true,
            bridge_correction: false,
        }
    }
}

impl WalkConfig {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }
}

/// A lazily consumed planar Brownian path started at the origin. Increments
/// are drawn on demand; the walker owns its stream, so one path per worker.
pub struct BrownianPath {
    cfg: WalkConfig,
    seed: u64,
    rng: ChaCha8Rng,
    t: f64,
    b: [f64; 2],
    steps: u64,
    trace: Option<Vec<(f64, f64, f64)>>,
    trace_every: u64,
}

/// Exit data for one cone: `D_x = B_{τ_x} + x ∈ E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitRecord {
    pub cone: QuadrantPoint,
    pub exit_point: BoundaryPoint,
    pub exit_time: f64,
}

impl BrownianPath {
    /// Stream `id` under the master `seed`; independent paths use distinct ids.
    pub fn new(cfg: WalkConfig, seed: u64, id: u64) -> Self {
        assert!(cfg.step > 0.0, "step must be positive");
        Self {
            cfg,
            seed,
            rng: stream(seed, id),
            t: 0.0,
            b: [0.0, 0.0],
            steps: 0,
            trace: None,
            trace_every: 1,
        }
    }

    /// Record the walked trace `(t, b₁, b₂)`, keeping every `every`-th step.
    pub fn record_trace(&mut self, every: u64) {
        self.trace = Some(vec![(self.t, self.b[0], self.b[1])]);
        self.trace_every = every.max(1);
    }

    pub fn trace(&self) -> Option<&[(f64, f64, f64)]> {
        self.trace.as_deref()
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn step_size(&self) -> f64 {
        self.cfg.step
    }

    fn project(p1: f64, p2: f64) -> BoundaryPoint {
        let q1 = p1.max(0.0);
        let q2 = p2.max(0.0);
        if q2 == 0.0 {
            BoundaryPoint::axis1(q1)
        } else {
            BoundaryPoint::axis2(q2)
        }
    }

    /// Walk until `B_t + x` leaves the open quadrant; the first outside
    /// iterate is projected onto `E`. Continues from the current path state,
    /// which is what makes nondecreasing cone sequences couple.
    pub fn advance_to_exit(&mut self, x: &QuadrantPoint) -> Result<ExitRecord> {
        let h = self.cfg.step;
        loop {
            let p1 = self.b[0] + x.x1;
            let p2 = self.b[1] + x.x2;
            if p1 <= 0.0 || p2 <= 0.0 {
                return Ok(ExitRecord {
                    cone: *x,
                    exit_point: Self::project(p1, p2),
                    exit_time: self.t,
                });
            }
            if self.steps >= self.cfg.max_steps {
                return Err(Error::StepBudgetExceeded {
                    budget: self.cfg.max_steps,
                });
            }
            let d = p1.min(p2);
            let s = if self.cfg.far_field {
                ((d / 6.0) * (d / 6.0)).max(h)
            } else {
                h
            };
            let sq = s.sqrt();
            let g1: f64 = self.rng.sample(StandardNormal);
            let g2: f64 = self.rng.sample(StandardNormal);
            let n1 = self.b[0] + sq * g1;
            let n2 = self.b[1] + sq * g2;
            self.t += s;
            self.steps += 1;
            self.b = [n1, n2];
            if let Some(tr) = self.trace.as_mut() {
                if self.steps % self.trace_every == 0 {
                    tr.push((self.t, n1, n2));
                }
            }
            if self.cfg.bridge_correction && s <= h {
                let q1 = n1 + x.x1;
                let q2 = n2 + x.x2;
                if q1 > 0.0 && q2 > 0.0 {
                    // P[bridge from a to b over time s dips below 0] = exp(-2ab/s)
                    let dip1 = (-2.0 * p1 * q1 / s).exp();
                    let dip2 = (-2.0 * p2 * q2 / s).exp();
                    let u1: f64 = self.rng.random();
                    let u2: f64 = self.rng.random();
                    let hit1 = u1 < dip1;
                    let hit2 = u2 < dip2;
                    if hit1 || hit2 {
                        let exit_point = if hit1 && (!hit2 || dip1 >= dip2) {
                            BoundaryPoint::axis2(q2)
                        } else {
                            BoundaryPoint::axis1(q1)
                        };
                        return Ok(ExitRecord {
                            cone: *x,
                            exit_point,
                            exit_time: self.t,
                        });
                    }
                }
            }
        }
    }
}

/// Exit of a single cone from a fresh walk of `path`.
pub fn cone_exit(path: &mut BrownianPath, x: &QuadrantPoint) -> Result<ExitRecord> {
    path.advance_to_exit(x)
}

/// Exits for a componentwise nondecreasing cone sequence served by one path.
/// Exit times are nondecreasing along the sequence; a repeated cone consumes
/// no additional steps.
pub fn d_process(path: &mut BrownianPath, xs: &[QuadrantPoint]) -> Result<Vec<ExitRecord>> {
    for w in xs.windows(2) {
        assert!(
            w[0].le(&w[1]),
            "cone sequence must be componentwise nondecreasing: {:?} then {:?}",
            w[0],
            w[1]
        );
    }
    xs.iter().map(|x| path.advance_to_exit(x)).collect()
}

/// Time-dependent drift data `(c̄, θ̄)` entering the strong construction via
/// `C(s,t) = exp(-∫_s^t c̄)` and `Ξ(s,t) = ∫_s^t θ̄(r)/C(0,r) dr`.
///
/// For constant parameters `(c, θ)` the absolute drift rate is `θ̄ ≡ cθ`,
/// which makes `Ξ(0,t) = θ(e^{ct}-1)` and reproduces the constant-parameter
/// process `X_t = e^{-ct} D_{x+(e^{ct}-1)θ}`.
pub enum DriftSchedule {
    Constant {
        c: f64,
        theta: QuadrantPoint,
    },
    TimeVarying {
        cbar: Box<dyn Fn(f64) -> f64 + Send + Sync>,
        thetabar: Box<dyn Fn(f64) -> (f64, f64) + Send + Sync>,
    },
}

impl DriftSchedule {
    pub fn constant(c: f64, theta: QuadrantPoint) -> Self {
        assert!(c >= 0.0 && c.is_finite());
        Self::Constant { c, theta }
    }

    /// `C(s, t) = exp(-∫_s^t c̄(r) dr)`, multiplicative over abutting intervals.
    pub fn c_factor(&self, s: f64, t: f64) -> Result<f64> {
        assert!(0.0 <= s && s <= t, "need 0 ≤ s ≤ t, got ({s}, {t})");
        match self {
            Self::Constant { c, .. } => Ok((-c * (t - s)).exp()),
            Self::TimeVarying { cbar, .. } => {
                let (integral, _) = adaptive_real(&|r: f64| checked(cbar(r)), s, t, 1e-11)
                    .map_err(schedule_err)?;
                if !integral.is_finite() {
                    return Err(Error::ScheduleError {
                        reason: format!("∫c̄ over [{s}, {t}] is not finite"),
                    });
                }
                Ok((-integral).exp())
            }
        }
    }

    /// `Ξ(s, t) = ∫_s^t θ̄(r)/C(0,r) dr`, componentwise nondecreasing in `t`.
    pub fn xi(&self, s: f64, t: f64) -> Result<(f64, f64)> {
        assert!(0.0 <= s && s <= t, "need 0 ≤ s ≤ t, got ({s}, {t})");
        match self {
            Self::Constant { c, theta } => {
                // ∫cθ e^{cr} dr = θ (e^{ct} - e^{cs})
                let grow = (c * t).exp() - (c * s).exp();
                Ok((theta.x1 * grow, theta.x2 * grow))
            }
            Self::TimeVarying { thetabar, .. } => {
                let xi_i = |pick: &dyn Fn((f64, f64)) -> f64| -> Result<f64> {
                    let integrand = |r: f64| -> f64 {
                        let inv_c = match self.c_factor(0.0, r) {
                            Ok(c0r) => 1.0 / c0r,
                            Err(_) => f64::NAN,
                        };
                        checked(pick(thetabar(r))) * inv_c
                    };
                    let (v, _) =
                        adaptive_real(&integrand, s, t, 1e-10).map_err(schedule_err)?;
                    if !v.is_finite() {
                        return Err(Error::ScheduleError {
                            reason: format!("∫θ̄/C over [{s}, {t}] is not finite"),
                        });
                    }
                    Ok(v)
                };
                Ok((xi_i(&|p| p.0)?, xi_i(&|p| p.1)?))
            }
        }
    }
}

// NaNs from the user-supplied schedule propagate into the quadrature and
// surface as a ScheduleError rather than a bogus value.
fn checked(v: f64) -> f64 {
    if v.is_finite() && v >= 0.0 {
        v
    } else {
        f64::NAN
    }
}

fn schedule_err(e: Error) -> Error {
    Error::ScheduleError {
        reason: format!("quadrature of schedule failed: {e}"),
    }
}

/// Strong construction: evaluates `X_t = C(0,t) · D_{x₀ + Ξ(0,t)}` along a
/// strictly increasing time grid, all exits served by the one given path.
pub fn strong_construct(
    path: &mut BrownianPath,
    x0: &BoundaryPoint,
    schedule: &DriftSchedule,
    times: &[f64],
) -> Result<PathSample> {
    assert!(
        times.windows(2).all(|w| w[0] < w[1]) && times.first().map_or(true, |&t| t >= 0.0),
        "times must be strictly increasing and nonnegative"
    );
    let base = x0.to_quadrant();
    let mut cones = Vec::with_capacity(times.len());
    let mut factors = Vec::with_capacity(times.len());
    for &t in times {
        let (xi1, xi2) = schedule.xi(0.0, t)?;
        if !(xi1.is_finite() && xi2.is_finite() && xi1 >= 0.0 && xi2 >= 0.0) {
            return Err(Error::ScheduleError {
                reason: format!("Ξ(0,{t}) = ({xi1}, {xi2}) invalid"),
            });
        }
        cones.push(QuadrantPoint::new(base.x1 + xi1, base.x2 + xi2));
        factors.push(schedule.c_factor(0.0, t)?);
    }
    for w in cones.windows(2) {
        if !w[0].le(&w[1]) {
            return Err(Error::ScheduleError {
                reason: "Ξ must be componentwise nondecreasing".into(),
            });
        }
    }
    let exits = d_process(path, &cones)?;
    let states = times
        .iter()
        .zip(exits.iter().zip(factors.iter()))
        .map(|(&t, (exit, &cf))| PathState::from_boundary(t, &exit.exit_point.scale(cf)))
        .collect();
    Ok(PathSample {
        states,
        provenance: Provenance {
            scheme: Scheme::StrongConstruction,
            step: path.step_size(),
            seed: path.seed(),
            initial_jump: false,
        },
    })
}
