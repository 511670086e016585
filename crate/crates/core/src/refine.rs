//! Algebraic refinement of the undistortion coefficients.
//!
//! With more than the minimal number of correspondences the eigenvalue
//! solvers fit `−A₀⁻¹A₁` by least squares, which biases `λ` when the data are
//! noisy, most visibly for mild distortion. This module minimizes the
//! weighted algebraic error
//!
//! ```text
//! e(λ₁, λ₂) = min_{‖f‖ = 1} Σᵢ wᵢ² (u(p1ᵢ, λ₁)ᵀ F u(p2ᵢ, λ₂))²
//! ```
//!
//! directly: for fixed coefficients `e` is the smallest eigenvalue of a 9×9
//! Gram matrix, so only the coefficients are searched. Weights are the
//! inverse constraint-gradient norms of a seed model, which turns the
//! algebraic error into a first-order Sampson error around that seed.

use nalgebra::{SMatrix, SVector};

use crate::geometry::{
    constraint_with_gradient, is_plausible_lambda, undistort_homogeneous, Correspondence, FundamentalMatrix,
    FundamentalModel, PLAUSIBLE_LAMBDA,
};

type Gram = SMatrix<f64, 9, 9>;

/// Default half-width of the window searched around the seed coefficient.
pub const DEFAULT_WINDOW: f64 = 0.3;
const SCAN_STEP: f64 = 0.02;
const GOLDEN_ITERS: usize = 40;
const COORDINATE_SWEEPS: usize = 2;
const NEWTON_STEPS: usize = 20;
const FD_STEP: f64 = 1e-4;

fn gram(corrs: &[Correspondence], weights: &[f64], lambda1: f64, lambda2: f64) -> Gram {
    let mut g = Gram::zeros();
    for (c, w) in corrs.iter().zip(weights) {
        let u1 = undistort_homogeneous(&c.p1, lambda1);
        let u2 = undistort_homogeneous(&c.p2, lambda2);
        let row = SVector::<f64, 9>::from_fn(|k, _| w * u1[k / 3] * u2[k % 3]);
        g.syger(1.0, &row, &row, 1.0);
    }
    g
}

/// Smallest eigenpair of the Gram matrix at `(λ₁, λ₂)`.
fn algebraic_fit(corrs: &[Correspondence], weights: &[f64], lambda1: f64, lambda2: f64) -> (f64, SVector<f64, 9>) {
    let eig = gram(corrs, weights, lambda1, lambda2).symmetric_eigen();
    let (i, value) = eig.eigenvalues.argmin();
    (value, eig.eigenvectors.column(i).into_owned())
}

/// Row weights of `model`: the Sampson factor `1 / ‖∇g‖`, times the Cauchy
/// IRLS factor `(1 + (r / scale)²)^(-1/2)` of the Sampson residual `r`.
/// An infinite `scale` gives plain Sampson weights.
pub fn sampson_weights(model: &FundamentalModel, corrs: &[Correspondence], scale: f64) -> Vec<f64> {
    corrs
        .iter()
        .map(|c| {
            let (g, grad) = constraint_with_gradient(model, c);
            let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 1e-12) {
                return 0.0;
            }
            let r = g / norm;
            (1.0 + (r / scale).powi(2)).sqrt().recip() / norm
        })
        .collect()
}

/// Minimizes `cost` over `[lo, hi]`: coarse scan, then golden-section search
/// around the best scan point.
fn minimize_1d(lo: f64, hi: f64, cost: impl Fn(f64) -> f64) -> f64 {
    let steps = ((hi - lo) / SCAN_STEP).ceil().max(1.0) as usize;
    let h = (hi - lo) / steps as f64;
    let (mut best, mut best_cost) = (lo, f64::INFINITY);
    for k in 0..=steps {
        let x = lo + h * k as f64;
        let c = cost(x);
        if c < best_cost {
            best = x;
            best_cost = c;
        }
    }
    let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    for _ in 0..GOLDEN_ITERS {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = cost(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = cost(x2);
        }
    }
    let x = 0.5 * (a + b);
    if cost(x) <= best_cost {
        x
    } else {
        best
    }
}

/// Damped Newton polish of a 2-D objective from finite differences. The
/// coefficients are strongly coupled, which coordinate descent handles poorly.
fn newton_2d(mut x: [f64; 2], bounds: [(f64, f64); 2], cost: impl Fn(f64, f64) -> f64) -> [f64; 2] {
    let h = FD_STEP;
    let mut fx = cost(x[0], x[1]);
    for _ in 0..NEWTON_STEPS {
        let [a, b] = x;
        let (fpa, fma) = (cost(a + h, b), cost(a - h, b));
        let (fpb, fmb) = (cost(a, b + h), cost(a, b - h));
        let fab = cost(a + h, b + h) - cost(a + h, b - h) - cost(a - h, b + h) + cost(a - h, b - h);
        let g = nalgebra::Vector2::new((fpa - fma) / (2.0 * h), (fpb - fmb) / (2.0 * h));
        let hxy = fab / (4.0 * h * h);
        let hess = nalgebra::Matrix2::new((fpa - 2.0 * fx + fma) / (h * h), hxy, hxy, (fpb - 2.0 * fx + fmb) / (h * h));
        let step = match hess.cholesky() {
            Some(c) => -c.solve(&g),
            None => -g * (1e-2 / g.norm().max(1e-300)),
        };
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-4 {
            let cand = [
                (a + t * step.x).clamp(bounds[0].0, bounds[0].1),
                (b + t * step.y).clamp(bounds[1].0, bounds[1].1),
            ];
            let fc = cost(cand[0], cand[1]);
            if fc < fx {
                x = cand;
                fx = fc;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved || (t * step.norm()) < 1e-12 {
            break;
        }
    }
    x
}

fn window(center: f64, half: f64) -> (f64, f64) {
    (
        (center - half).max(PLAUSIBLE_LAMBDA.0),
        (center + half).min(PLAUSIBLE_LAMBDA.1),
    )
}

/// Refines `seed` on `corrs`, keeping `λ₁ = λ₂` when `shared`.
///
/// Coefficients are searched within [`DEFAULT_WINDOW`] of the seed (clipped
/// to the plausible range); `F` is the minimizing null vector at the optimum.
/// Returns `None` for fewer than nine correspondences or a non-finite seed.
pub fn refine_distortion(corrs: &[Correspondence], seed: &FundamentalModel, shared: bool) -> Option<FundamentalModel> {
    refine_distortion_robust(corrs, seed, shared, f64::INFINITY, DEFAULT_WINDOW)
}

/// [`refine_distortion`] with Cauchy-reweighted rows of scale `scale`
/// (normalized units), which damps the pull of residual outliers, searching
/// coefficients within `±half_window` of the seed.
pub fn refine_distortion_robust(
    corrs: &[Correspondence],
    seed: &FundamentalModel,
    shared: bool,
    scale: f64,
    half_window: f64,
) -> Option<FundamentalModel> {
    if corrs.len() < 9 || !seed.is_plausible() || !(scale > 0.0) || !(half_window > 0.0) {
        return None;
    }
    let weights = sampson_weights(seed, corrs, scale);
    let cost = |l1: f64, l2: f64| algebraic_fit(corrs, &weights, l1, l2).0;
    let (l1, l2) = if shared {
        let (lo, hi) = window(seed.lambda1, half_window);
        let l = minimize_1d(lo, hi, |l| cost(l, l));
        (l, l)
    } else {
        let (mut l1, mut l2) = (seed.lambda1, seed.lambda2);
        let (lo1, hi1) = window(seed.lambda1, half_window);
        let (lo2, hi2) = window(seed.lambda2, half_window);
        for _ in 0..COORDINATE_SWEEPS {
            l1 = minimize_1d(lo1, hi1, |l| cost(l, l2));
            l2 = minimize_1d(lo2, hi2, |l| cost(l1, l));
        }
        let [l1, l2] = newton_2d([l1, l2], [(lo1, hi1), (lo2, hi2)], cost);
        (l1, l2)
    };
    if !is_plausible_lambda(l1) || !is_plausible_lambda(l2) {
        return None;
    }
    let (_, f) = algebraic_fit(corrs, &weights, l1, l2);
    if !f.iter().all(|v| v.is_finite()) {
        return None;
    }
    Some(FundamentalModel::new(FundamentalMatrix::from_row_major(f.as_slice()), l1, l2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sampson_residual_distorted;
    use crate::testutil::scene;
    use nalgebra::Vector2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noisy(seed: u64, lambda1: f64, lambda2: f64, sigma: f64) -> (Vec<Correspondence>, FundamentalModel) {
        let s = scene(seed, 150, lambda1, lambda2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let mut g = || Vector2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * sigma;
        let corrs = s.corrs.iter().map(|c| Correspondence::new(c.p1 + g(), c.p2 + g())).collect();
        (corrs, FundamentalModel::new(s.f, lambda1, lambda2))
    }

    fn score(m: &FundamentalModel, corrs: &[Correspondence]) -> f64 {
        corrs.iter().map(|c| sampson_residual_distorted(m, c).unwrap().powi(2)).sum()
    }

    #[test]
    fn noiseless_data_recover_truth_from_offset_seed() {
        let s = scene(1, 40, -0.7, -0.7);
        let seed = FundamentalModel::new(s.f, -0.6, -0.6);
        let m = refine_distortion(&s.corrs, &seed, true).unwrap();
        assert!((m.lambda1 + 0.7).abs() < 1e-6, "{}", m.lambda1);
        assert!(m.f.distance(&s.f) < 1e-5);

        let s = scene(2, 40, -0.4, -1.1);
        let seed = FundamentalModel::new(s.f, -0.6, -0.9);
        let m = refine_distortion(&s.corrs, &seed, false).unwrap();
        assert!((m.lambda1 + 0.4).abs() < 1e-5 && (m.lambda2 + 1.1).abs() < 1e-5, "{m:?}");
    }

    #[test]
    fn noisy_data_stay_close_and_fit_better_than_truth() {
        for seed in 0..10 {
            let (corrs, truth) = noisy(seed, -0.3, -0.3, 1e-3);
            let start = FundamentalModel::new(truth.f, 0.0, 0.0);
            let m = refine_distortion(&corrs, &start, true).unwrap();
            assert!((m.lambda1 + 0.3).abs() < 0.05, "{}", m.lambda1);
            assert!(score(&m, &corrs) < 1.2 * score(&truth, &corrs));
        }
    }

    #[test]
    fn cauchy_weights_resist_gross_outliers() {
        let (mut corrs, truth) = noisy(4, -0.9, -0.9, 5e-4);
        for c in corrs.iter_mut().step_by(8) {
            c.p2 *= 1.0 + 8e-3 / c.p2.norm().max(0.1);
        }
        let plain = refine_distortion_robust(&corrs, &truth, true, f64::INFINITY, 2.5).unwrap();
        let mut robust = truth;
        for _ in 0..4 {
            robust = refine_distortion_robust(&corrs, &robust, true, 1e-3, 2.5).unwrap();
        }
        assert!((robust.lambda1 + 0.9).abs() < 0.03, "{}", robust.lambda1);
        assert!((robust.lambda1 + 0.9).abs() <= (plain.lambda1 + 0.9).abs() + 1e-3, "{} {}", robust.lambda1, plain.lambda1);
        assert!(refine_distortion_robust(&corrs, &truth, true, 0.0, 0.3).is_none());
    }

    #[test]
    fn result_stays_in_window_and_plausible_range() {
        let s = scene(3, 30, -1.9, -1.9);
        let seed = FundamentalModel::new(s.f, -1.95, -1.95);
        let m = refine_distortion(&s.corrs, &seed, true).unwrap();
        assert!(m.is_plausible());
        assert!(refine_distortion(&s.corrs[..8], &seed, true).is_none());
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let x = minimize_1d(-1.0, 1.0, |x| (x - 0.123_456).powi(2));
        assert!((x - 0.123_456).abs() < 1e-8);
    }
}
