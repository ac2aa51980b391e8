//! Duality kernels and the state spaces they act on.
//!
//! The lozenge product
//!
//! ```text
//! x ⋄ y = -(x₁+x₂)(y₁+y₂) + i(x₁-x₂)(y₁-y₂)
//! ```
//!
//! and the kernel `F(x,y) = exp(x ⋄ y)` drive every duality identity in this
//! crate: they are the test functions for the generator, the moment
//! functionals for the transition kernel, and the observables in every
//! martingale check. `F` is bounded (`|F| ≤ 1` on the closed quadrant),
//! symmetric in its arguments and closed under complex conjugation via a
//! coordinate swap, which is what makes the family measure determining.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A complex value produced by the duality kernels, stored as an explicit
/// (re, im) pair in double precision.
pub type DualityValue = Complex64;

/// A point of the closed quadrant `[0,∞)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrantPoint {
    pub x1: f64,
    pub x2: f64,
}

impl QuadrantPoint {
    /// Both coordinates must be nonnegative and finite.
    pub fn new(x1: f64, x2: f64) -> Self {
        assert!(
            x1 >= 0.0 && x2 >= 0.0 && x1.is_finite() && x2.is_finite(),
            "quadrant point must have finite nonnegative coordinates, got ({x1}, {x2})"
        );
        Self { x1, x2 }
    }

    pub const ORIGIN: QuadrantPoint = QuadrantPoint { x1: 0.0, x2: 0.0 };

    pub fn scale(&self, r: f64) -> Self {
        Self::new(self.x1 * r, self.x2 * r)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.x1 + other.x1, self.x2 + other.x2)
    }

    /// Componentwise partial order of the quadrant.
    pub fn le(&self, other: &Self) -> bool {
        self.x1 <= other.x1 && self.x2 <= other.x2
    }

    /// True when at least one coordinate vanishes, i.e. the point lies in
    /// `E = [0,∞)² \ (0,∞)²`.
    pub fn on_boundary(&self) -> bool {
        self.x1 == 0.0 || self.x2 == 0.0
    }

    pub fn as_pair(&self) -> (f64, f64) {
        (self.x1, self.x2)
    }
}

/// Which part of `E` a boundary point lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Axis1,
    Axis2,
    Origin,
}

/// A point of `E = [0,∞)² \ (0,∞)²`: at most one coordinate is nonzero.
///
/// Stored as (branch, magnitude) so membership in `E` is a type invariant.
/// Constructors canonicalize magnitude 0 to [`Branch::Origin`], making
/// equality well defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    branch: Branch,
    magnitude: f64,
}

impl BoundaryPoint {
    pub const ORIGIN: BoundaryPoint = BoundaryPoint {
        branch: Branch::Origin,
        magnitude: 0.0,
    };

    pub fn new(branch: Branch, magnitude: f64) -> Self {
        assert!(
            magnitude >= 0.0 && magnitude.is_finite(),
            "boundary magnitude must be finite and nonnegative, got {magnitude}"
        );
        if magnitude == 0.0 {
            Self::ORIGIN
        } else {
            match branch {
                Branch::Origin => {
                    panic!("origin branch cannot carry magnitude {magnitude}")
                }
                b => Self {
                    branch: b,
                    magnitude,
                },
            }
        }
    }

    pub fn axis1(magnitude: f64) -> Self {
        Self::new(Branch::Axis1, magnitude)
    }

    pub fn axis2(magnitude: f64) -> Self {
        Self::new(Branch::Axis2, magnitude)
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    /// Embedding of `E` into the closed quadrant.
    pub fn to_quadrant(&self) -> QuadrantPoint {
        match self.branch {
            Branch::Axis1 => QuadrantPoint::new(self.magnitude, 0.0),
            Branch::Axis2 => QuadrantPoint::new(0.0, self.magnitude),
            Branch::Origin => QuadrantPoint::ORIGIN,
        }
    }

    /// Inverse of [`to_quadrant`](Self::to_quadrant) for quadrant points that
    /// lie in `E`; `None` for interior points.
    pub fn from_quadrant(p: &QuadrantPoint) -> Option<Self> {
        if p.x2 == 0.0 {
            Some(Self::new(Branch::Axis1, p.x1))
        } else if p.x1 == 0.0 {
            Some(Self::new(Branch::Axis2, p.x2))
        } else {
            None
        }
    }

    /// Scaling by `r ≥ 0` stays in `E`.
    pub fn scale(&self, r: f64) -> Self {
        match self.branch {
            Branch::Origin => Self::ORIGIN,
            b => Self::new(b, self.magnitude * r),
        }
    }

    /// Coordinate swap `(x₁, x₂) ↦ (x₂, x₁)`.
    pub fn swap(&self) -> Self {
        match self.branch {
            Branch::Axis1 => Self::new(Branch::Axis2, self.magnitude),
            Branch::Axis2 => Self::new(Branch::Axis1, self.magnitude),
            Branch::Origin => Self::ORIGIN,
        }
    }

    /// Signed-line embedding: axis 1 maps to `+magnitude`, axis 2 to
    /// `-magnitude`, the origin to 0. Injective on `E`.
    pub fn signed(&self) -> f64 {
        match self.branch {
            Branch::Axis1 => self.magnitude,
            Branch::Axis2 => -self.magnitude,
            Branch::Origin => 0.0,
        }
    }
}

/// Lozenge product on raw coordinate pairs (defined on all of ℝ²; the
/// generator applies it to differences like `θ - x`).
pub fn lozenge_raw(x1: f64, x2: f64, y1: f64, y2: f64) -> DualityValue {
    Complex64::new(-(x1 + x2) * (y1 + y2), (x1 - x2) * (y1 - y2))
}

/// Lozenge product `x ⋄ y` of two quadrant points.
pub fn lozenge(x: &QuadrantPoint, y: &QuadrantPoint) -> DualityValue {
    lozenge_raw(x.x1, x.x2, y.x1, y.x2)
}

/// Self-duality kernel `F(x, y) = exp(x ⋄ y)`.
///
/// Satisfies `|F(x,y)| = exp(-(x₁+x₂)(y₁+y₂)) ≤ 1` and the conjugation rule
/// `conj F(x, (y₁,y₂)) = F(x, (y₂,y₁))`.
pub fn kernel_f(x: &QuadrantPoint, y: &QuadrantPoint) -> DualityValue {
    lozenge(x, y).exp()
}

/// Product kernel `H((x,x'),(y,y')) = F(x,y) F(x',y')` on pairs.
pub fn kernel_h(
    x: &QuadrantPoint,
    x2: &QuadrantPoint,
    y: &QuadrantPoint,
    y2: &QuadrantPoint,
) -> DualityValue {
    kernel_f(x, y) * kernel_f(x2, y2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn lozenge_direct_substitution() {
        let v = lozenge(&QuadrantPoint::new(1.0, 0.0), &QuadrantPoint::new(1.0, 0.0));
        assert_eq!(v, Complex64::new(-1.0, 1.0));
    }

    #[test]
    fn lozenge_equal_coordinates_kill_imaginary_part() {
        for &(a, b) in &[(0.3, 0.9), (2.0, 0.0), (1.5, 1.5)] {
            let v = lozenge(&QuadrantPoint::new(1.0, 1.0), &QuadrantPoint::new(a, b));
            assert_eq!(v, Complex64::new(-2.0 * (a + b), 0.0));
        }
    }

    #[test]
    fn lozenge_zero_argument() {
        for &(a, b) in &[(0.0, 0.0), (1.0, 2.0), (5.0, 0.1)] {
            let v = lozenge(&QuadrantPoint::ORIGIN, &QuadrantPoint::new(a, b));
            assert_eq!(v, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn kernel_f_at_zero_is_one() {
        let x = QuadrantPoint::new(1.7, 0.4);
        assert_eq!(kernel_f(&x, &QuadrantPoint::ORIGIN), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn kernel_f_hand_values() {
        let v = kernel_f(&QuadrantPoint::new(1.0, 0.0), &QuadrantPoint::new(1.0, 0.0));
        let expect = (-1.0f64).exp() * Complex64::new(1.0f64.cos(), 1.0f64.sin());
        assert!(close(v, expect, 1e-15));

        // hand evaluation: (0,1) ⋄ (0.5,0) = -0.5 - 0.5i
        let v = kernel_f(&QuadrantPoint::new(0.0, 1.0), &QuadrantPoint::new(0.5, 0.0));
        let expect = (-0.5f64).exp() * Complex64::new(0.5f64.cos(), -(0.5f64.sin()));
        assert!(close(v, expect, 1e-15));
    }

    #[test]
    fn kernel_h_values() {
        let x = QuadrantPoint::new(1.0, 0.0);
        let xp = QuadrantPoint::new(0.0, 1.0);
        let one = kernel_h(&x, &xp, &QuadrantPoint::ORIGIN, &QuadrantPoint::ORIGIN);
        assert_eq!(one, Complex64::new(1.0, 0.0));

        let v = kernel_h(&x, &xp, &x, &xp);
        assert!(close(v, Complex64::new(-2.0, 2.0).exp(), 1e-15));

        // swapping the pairs jointly leaves H unchanged
        let w = kernel_h(&xp, &x, &xp, &x);
        assert!(close(v, w, 1e-15));
    }

    #[test]
    fn boundary_point_canonicalizes_origin() {
        assert_eq!(BoundaryPoint::axis1(0.0), BoundaryPoint::ORIGIN);
        assert_eq!(BoundaryPoint::axis2(0.0), BoundaryPoint::ORIGIN);
        assert_eq!(BoundaryPoint::ORIGIN.branch(), Branch::Origin);
    }

    #[test]
    fn boundary_point_embeds_into_quadrant() {
        let p = BoundaryPoint::axis2(2.5);
        assert_eq!(p.to_quadrant().as_pair(), (0.0, 2.5));
        assert_eq!(BoundaryPoint::from_quadrant(&p.to_quadrant()), Some(p));
        assert!(BoundaryPoint::from_quadrant(&QuadrantPoint::new(1.0, 1.0)).is_none());
    }

    // Lemma-style derivative identities checked by central differences:
    // Δ₁F(x,y) = 8 y₁ y₂ F(x,y) and ⟨z, ∇₁F(x,y)⟩ = (z ⋄ y) F(x,y).
    #[test]
    fn derivative_identities_by_finite_differences() {
        let h = 1e-4;
        let grid = [0.25f64, 0.75, 1.25, 2.0];
        for &x1 in &grid {
            for &x2 in &grid {
                for &y1 in &grid {
                    for &y2 in &grid {
                        let y = QuadrantPoint::new(y1, y2);
                        let f = |a: f64, b: f64| kernel_f(&QuadrantPoint::new(a, b), &y);
                        let f0 = f(x1, x2);

                        let lap = (f(x1 + h, x2) - 2.0 * f0 + f(x1 - h, x2)
                            + f(x1, x2 + h) - 2.0 * f0 + f(x1, x2 - h))
                            / (h * h);
                        let expect = 8.0 * y1 * y2 * f0;
                        assert!(
                            (lap - expect).norm() <= 1e-5 * expect.norm().max(1.0),
                            "laplacian mismatch at ({x1},{x2},{y1},{y2}): {lap} vs {expect}"
                        );

                        let z = (0.7, 1.3);
                        let grad_dot = ((f(x1 + h, x2) - f(x1 - h, x2)) * z.0
                            + (f(x1, x2 + h) - f(x1, x2 - h)) * z.1)
                            / (2.0 * h);
                        let expect = lozenge_raw(z.0, z.1, y1, y2) * f0;
                        assert!(
                            (grad_dot - expect).norm() <= 1e-5 * expect.norm().max(1.0),
                            "gradient mismatch at ({x1},{x2},{y1},{y2})"
                        );
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn lozenge_is_symmetric(x1 in 0.0..5.0f64, x2 in 0.0..5.0f64,
                                y1 in 0.0..5.0f64, y2 in 0.0..5.0f64) {
            let x = QuadrantPoint::new(x1, x2);
            let y = QuadrantPoint::new(y1, y2);
            prop_assert_eq!(lozenge(&x, &y), lozenge(&y, &x));
        }

        #[test]
        fn kernel_f_modulus_bound(x1 in 0.0..5.0f64, x2 in 0.0..5.0f64,
                                  y1 in 0.0..5.0f64, y2 in 0.0..5.0f64) {
            let x = QuadrantPoint::new(x1, x2);
            let y = QuadrantPoint::new(y1, y2);
            let m = kernel_f(&x, &y).norm();
            prop_assert!(m <= 1.0 + 1e-12);
            let product = (x1 + x2) * (y1 + y2);
            if product == 0.0 {
                prop_assert!((m - 1.0).abs() <= 1e-12);
            } else {
                prop_assert!(m < 1.0);
            }
        }

        #[test]
        fn kernel_f_conjugation(x1 in 0.0..5.0f64, x2 in 0.0..5.0f64,
                                a in 0.0..5.0f64, b in 0.0..5.0f64) {
            let x = QuadrantPoint::new(x1, x2);
            let v = kernel_f(&x, &QuadrantPoint::new(a, b));
            let w = kernel_f(&x, &QuadrantPoint::new(b, a));
            prop_assert!((v.conj() - w).norm() <= 1e-14);
        }

        #[test]
        fn boundary_scale_and_swap_stay_canonical(m in 0.0..10.0f64, r in 0.0..3.0f64) {
            let p = BoundaryPoint::axis1(m);
            let q = p.scale(r);
            if m * r == 0.0 {
                prop_assert_eq!(q, BoundaryPoint::ORIGIN);
            } else {
                prop_assert_eq!(q.branch(), Branch::Axis1);
            }
            prop_assert_eq!(p.swap().swap(), p);
        }
    }
}
