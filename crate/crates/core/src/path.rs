//! Sampled process paths with provenance.

use serde::{Deserialize, Serialize};

use crate::dual_kernels::{BoundaryPoint, QuadrantPoint};

/// Which construction produced a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Chained draws from the exact transition kernel.
    ExactKernel,
    /// Trotter product: drift flow alternating with `Q`-jumps on an ε-grid.
    Trotter,
    /// Strong construction from a single planar Brownian motion.
    StrongConstruction,
    /// Euler–Maruyama integration of the finite-rate SDE.
    EulerMaruyama,
}

/// How a path was generated: enough to reproduce it exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scheme: Scheme,
    /// Time step (Euler, Brownian walk) or grid width ε (Trotter); 0 for the
    /// exact kernel.
    pub step: f64,
    pub seed: u64,
    /// The path started in the open quadrant and its first action was a jump
    /// from `Q_{x₀}`; such paths are not right-continuous at 0.
    pub initial_jump: bool,
}

/// One recorded state. Trotter paths recorded between jumps follow the drift
/// flow and may leave `E`, hence the explicit `in_e` tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathState {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub in_e: bool,
}

impl PathState {
    pub fn from_boundary(t: f64, p: &BoundaryPoint) -> Self {
        let q = p.to_quadrant();
        Self {
            t,
            x1: q.x1,
            x2: q.x2,
            in_e: true,
        }
    }

    pub fn from_quadrant(t: f64, q: &QuadrantPoint) -> Self {
        Self {
            t,
            x1: q.x1,
            x2: q.x2,
            in_e: q.on_boundary(),
        }
    }

    /// The state as a boundary point, when it lies in `E`.
    pub fn boundary(&self) -> Option<BoundaryPoint> {
        BoundaryPoint::from_quadrant(&QuadrantPoint::new(self.x1, self.x2))
    }
}

/// A time grid with per-time states and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub states: Vec<PathState>,
    pub provenance: Provenance,
}

impl PathSample {
    /// Serialize as CSV rows `t,x1,x2,in_E` (header included).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x1,x2,in_E\n");
        for s in &self.states {
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.t,
                s.x1,
                s.x2,
                if s.in_e { 1 } else { 0 }
            ));
        }
        out
    }
}
