//! Minimal random two-view scenes for solver unit tests.

use nalgebra::{Matrix3, Rotation3, Unit, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{distort, Correspondence, FundamentalMatrix};

pub struct Scene {
    pub corrs: Vec<Correspondence>,
    pub f: FundamentalMatrix,
    pub r: Matrix3<f64>,
    pub t: Vector3<f64>,
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Identity intrinsics, points 4..8 units deep, rotation below 20°, then
/// distorted with `lambda1`/`lambda2`. Points whose distorted image leaves
/// `[-0.6, 0.6]²` are redrawn.
pub fn scene(seed: u64, n: usize, lambda1: f64, lambda2: f64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axis = Unit::new_normalize(Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    ));
    let r = *Rotation3::from_axis_angle(&axis, rng.random_range(0.0..20f64.to_radians())).matrix();
    let t = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-0.3..0.3),
    )
    .normalize();
    // u1ᵀ F u2 = 0 with u2 ~ R X + t, u1 ~ X
    let f = FundamentalMatrix::new((skew(&t) * r).transpose());
    let mut corrs = Vec::with_capacity(n);
    while corrs.len() < n {
        let x = Vector3::new(
            rng.random_range(-0.4..0.4),
            rng.random_range(-0.4..0.4),
            1.0,
        ) * rng.random_range(4.0..8.0);
        let x2 = r * x + t;
        if x2.z <= 0.1 {
            continue;
        }
        let q1 = Vector2::new(x.x / x.z, x.y / x.z);
        let q2 = Vector2::new(x2.x / x2.z, x2.y / x2.z);
        let (Ok(p1), Ok(p2)) = (distort(&q1, lambda1), distort(&q2, lambda2)) else {
            continue;
        };
        if p1.amax() > 0.6 || p2.amax() > 0.6 {
            continue;
        }
        corrs.push(Correspondence::new(p1, p2));
    }
    Scene { corrs, f, r, t }
}
