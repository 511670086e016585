//! Image points, the one-parameter division model and distortion-aware
//! epipolar residuals.
//!
//! Conventions used across the crate:
//!
//! - Image points are normalized: the image center is subtracted and the
//!   result divided by the longer image side, so on-sensor points lie in
//!   `[-0.5, 0.5]²`.
//! - A distorted point `(x, y)` undistorts to the homogeneous point
//!   `[x, y, 1 + λ(x² + y²)]`.
//! - The epipolar constraint reads `u(p1, λ1)ᵀ · F · u(p2, λ2) = 0`, with `F`
//!   stored row-major as `f = [f1..f9]`.

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};

/// Normalized image coordinates.
pub type ImagePoint = Vector2<f64>;

/// Models whose undistortion coefficients fall outside this range are
/// discarded: below `-2` the model mirrors the normalized image.
pub const PLAUSIBLE_LAMBDA: (f64, f64) = (-2.0, 0.5);

/// `|w| ≤` this is treated as a point mapped to infinity.
pub const W_EPS: f64 = 1e-12;

const ZERO_GRADIENT_EPS: f64 = 1e-14;

pub fn is_plausible_lambda(lambda: f64) -> bool {
    lambda.is_finite() && lambda >= PLAUSIBLE_LAMBDA.0 && lambda <= PLAUSIBLE_LAMBDA.1
}

/// A pair of distorted, normalized image points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub p1: ImagePoint,
    pub p2: ImagePoint,
}

impl Correspondence {
    pub fn new(p1: ImagePoint, p2: ImagePoint) -> Self {
        Self { p1, p2 }
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self::new(Vector2::new(v[0], v[1]), Vector2::new(v[2], v[3]))
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.p1.x, self.p1.y, self.p2.x, self.p2.y]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// A fundamental matrix in canonical form: unit Frobenius norm and a
/// positive largest-magnitude entry.
///
/// The zero matrix is kept as is since it has no canonical scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalMatrix(Matrix3<f64>);

impl FundamentalMatrix {
    pub fn new(m: Matrix3<f64>) -> Self {
        Self(canonicalize(m))
    }

    /// Builds from `f = [f1..f9]` in row-major order.
    pub fn from_row_major(f: &[f64]) -> Self {
        assert_eq!(f.len(), 9, "fundamental matrix needs 9 entries");
        Self::new(Matrix3::from_row_slice(f))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    /// Frobenius distance to `other`, minimized over the sign of `other`.
    pub fn distance(&self, other: &FundamentalMatrix) -> f64 {
        (self.0 - other.0).norm().min((self.0 + other.0).norm())
    }
}

fn canonicalize(m: Matrix3<f64>) -> Matrix3<f64> {
    let norm = m.norm();
    if norm == 0.0 || !norm.is_finite() {
        return m;
    }
    let m = m / norm;
    // Row-major scan; strict comparison keeps the first index on exact ties.
    let mut best = m[(0, 0)];
    for r in 0..3 {
        for c in 0..3 {
            if m[(r, c)].abs() > best.abs() {
                best = m[(r, c)];
            }
        }
    }
    if best < 0.0 {
        -m
    } else {
        m
    }
}

/// A fundamental matrix with the undistortion coefficients of both images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalModel {
    pub f: FundamentalMatrix,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl FundamentalModel {
    pub fn new(f: FundamentalMatrix, lambda1: f64, lambda2: f64) -> Self {
        Self { f, lambda1, lambda2 }
    }

    pub fn pinhole(f: FundamentalMatrix) -> Self {
        Self::new(f, 0.0, 0.0)
    }

    pub fn is_plausible(&self) -> bool {
        is_plausible_lambda(self.lambda1) && is_plausible_lambda(self.lambda2)
    }
}

/// Homogeneous undistorted point `[x, y, 1 + λr²]`.
pub fn undistort_homogeneous(p: &ImagePoint, lambda: f64) -> Vector3<f64> {
    Vector3::new(p.x, p.y, 1.0 + lambda * p.norm_squared())
}

/// Applies the division model and dehomogenizes.
pub fn undistort(p: &ImagePoint, lambda: f64) -> Result<ImagePoint> {
    let w = 1.0 + lambda * p.norm_squared();
    if w.abs() <= W_EPS {
        return Err(Error::DegeneratePoint);
    }
    Ok(p / w)
}

/// Closed-form inverse of [`undistort`].
pub fn distort(q: &ImagePoint, lambda: f64) -> Result<ImagePoint> {
    let r_u = q.norm();
    if r_u < 1e-12 {
        return Ok(*q);
    }
    let disc = 1.0 - 4.0 * lambda * r_u * r_u;
    if disc < 0.0 {
        return Err(Error::NoRealPreimage);
    }
    // (1 - sqrt(disc)) / (2λ r_u), rationalized so that λ → 0 is stable.
    let r_d = 2.0 * r_u / (1.0 + disc.sqrt());
    Ok(q * (1.0 + lambda * r_d * r_d))
}

/// Maps pixel coordinates to normalized coordinates: center subtracted,
/// divided by the longer side.
pub fn normalize_point(px: &Vector2<f64>, width: f64, height: f64) -> ImagePoint {
    assert!(width > 0.0 && height > 0.0, "image size must be positive");
    let scale = width.max(height);
    Vector2::new((px.x - 0.5 * width) / scale, (px.y - 0.5 * height) / scale)
}

fn checked_homogeneous(p: &ImagePoint, lambda: f64) -> Result<Vector3<f64>> {
    let u = undistort_homogeneous(p, lambda);
    if u.z.abs() <= W_EPS {
        return Err(Error::DegeneratePoint);
    }
    Ok(u)
}

/// `u(p1, λ1)ᵀ F u(p2, λ2)`.
pub fn epipolar_residual_algebraic(model: &FundamentalModel, c: &Correspondence) -> Result<f64> {
    let u1 = checked_homogeneous(&c.p1, model.lambda1)?;
    let u2 = checked_homogeneous(&c.p2, model.lambda2)?;
    Ok(u1.dot(&(model.f.matrix() * u2)))
}

/// The constraint value `g` and its gradient with respect to the distorted
/// coordinates `(x1, y1, x2, y2)`.
pub fn constraint_with_gradient(model: &FundamentalModel, c: &Correspondence) -> (f64, [f64; 4]) {
    let f = model.f.matrix();
    let u1 = undistort_homogeneous(&c.p1, model.lambda1);
    let u2 = undistort_homogeneous(&c.p2, model.lambda2);
    let l2 = f * u2; // epipolar line in image 1
    let l1 = f.transpose() * u1; // epipolar line in image 2
    let g = u1.dot(&l2);
    // du/dx = [1, 0, 2λx], du/dy = [0, 1, 2λy]
    let two_l1 = 2.0 * model.lambda1;
    let two_l2 = 2.0 * model.lambda2;
    let grad = [
        l2.x + two_l1 * c.p1.x * l2.z,
        l2.y + two_l1 * c.p1.y * l2.z,
        l1.x + two_l2 * c.p2.x * l1.z,
        l1.y + two_l2 * c.p2.y * l1.z,
    ];
    (g, grad)
}

/// First-order Sampson error of the composite constraint, linearized in the
/// distorted coordinates.
///
/// With both coefficients zero this is the classical Sampson error.
pub fn sampson_residual_distorted(model: &FundamentalModel, c: &Correspondence) -> Result<f64> {
    checked_homogeneous(&c.p1, model.lambda1)?;
    checked_homogeneous(&c.p2, model.lambda2)?;
    let (g, grad) = constraint_with_gradient(model, c);
    let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm >= ZERO_GRADIENT_EPS) {
        return Err(Error::ZeroGradient);
    }
    Ok(g.abs() / norm)
}
