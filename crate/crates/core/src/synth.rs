//! Synthetic two-view scenes with controlled distortion, noise and outliers.
//!
//! Points are sampled in the distorted image of camera 1, lifted to 3D at a
//! random depth, projected into camera 2 and distorted there. Points whose
//! distorted projection leaves `[-0.5, 0.5]²` are redrawn, so every feature
//! stays on-sensor after distortion.

use nalgebra::{Rotation3, Unit, Vector2, Vector3};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{CameraIntrinsics, GroundTruth, RelativePose};
use crate::geometry::{distort, is_plausible_lambda, undistort, Correspondence};

/// Support of scenario A; density is flat on `[-1.5, 0]` and falls linearly
/// to half that value at `-1.8`.
const SCENARIO_A_FLAT: f64 = 1.5;
const SCENARIO_A_TAIL: f64 = 0.3;

/// Distribution of the ground-truth undistortion coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaMode {
    Fixed { lambda1: f64, lambda2: f64 },
    /// Mostly uniform on `[-1.5, 0]` with a thinning tail down to `-1.8`.
    ScenarioA,
    /// Uniform on `[-0.3, 0]`.
    ScenarioB,
    /// Uniform on `[-1.8, -0.5]`.
    ScenarioC,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub n_points: usize,
    /// Depth interval of the 3D points in camera 1, in baselines.
    pub depth_range: [f64; 2],
    pub rotation_bound_deg: f64,
    pub noise_sigma_px: f64,
    pub nominal_longer_side: f64,
    pub outlier_fraction: f64,
    pub lambda_mode: LambdaMode,
    /// Draw one coefficient and use it for both images.
    pub equal_lambdas: bool,
    /// Focal length of both cameras in normalized units.
    pub focal: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            n_points: 200,
            depth_range: [4.0, 8.0],
            rotation_bound_deg: 30.0,
            noise_sigma_px: 0.0,
            nominal_longer_side: 1000.0,
            outlier_fraction: 0.0,
            lambda_mode: LambdaMode::Fixed {
                lambda1: 0.0,
                lambda2: 0.0,
            },
            equal_lambdas: true,
            focal: 1.0,
            seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 14 {
            return Err(Error::config("n_points", "must be at least 14"));
        }
        let [near, far] = self.depth_range;
        if !(near > 0.0 && far >= near && far.is_finite()) {
            return Err(Error::config("depth_range", "must satisfy 0 < near <= far"));
        }
        if !(self.rotation_bound_deg >= 0.0 && self.rotation_bound_deg <= 180.0) {
            return Err(Error::config("rotation_bound_deg", "must lie in [0, 180]"));
        }
        if !(self.noise_sigma_px >= 0.0 && self.noise_sigma_px.is_finite()) {
            return Err(Error::config("noise_sigma_px", "must be non-negative"));
        }
        if !(self.nominal_longer_side > 0.0 && self.nominal_longer_side.is_finite()) {
            return Err(Error::config("nominal_longer_side", "must be positive"));
        }
        if !(self.outlier_fraction >= 0.0 && self.outlier_fraction < 0.9) {
            return Err(Error::config("outlier_fraction", "must lie in [0, 0.9)"));
        }
        if !(self.focal > 0.0 && self.focal.is_finite()) {
            return Err(Error::config("focal", "must be positive"));
        }
        if let LambdaMode::Fixed { lambda1, lambda2 } = self.lambda_mode {
            if !is_plausible_lambda(lambda1) || !is_plausible_lambda(lambda2) {
                return Err(Error::config("lambda_mode", "fixed values must lie in [-2.0, 0.5]"));
            }
            if self.equal_lambdas && lambda1 != lambda2 {
                return Err(Error::config("lambda_mode", "equal_lambdas requires lambda1 == lambda2"));
            }
        }
        Ok(())
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma_px / self.nominal_longer_side
    }

    /// Same configuration with the seed of pair `index`.
    pub fn for_pair(&self, index: u64) -> Self {
        Self {
            seed: pair_seed(self.seed, index),
            ..self.clone()
        }
    }
}

/// A generated image pair with everything needed to score an estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthPair {
    pub corrs: Vec<Correspondence>,
    pub pose: RelativePose,
    pub lambda1: f64,
    pub lambda2: f64,
    pub inlier_truth: Vec<bool>,
    pub k1: CameraIntrinsics,
    pub k2: CameraIntrinsics,
}

impl GroundTruthPair {
    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            pose: self.pose,
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            k1: self.k1,
            k2: self.k2,
        }
    }
}

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of pair `index` in a dataset seeded with `seed`: `mix64(seed ⊕ index)`.
pub fn pair_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ index)
}

pub fn sample_lambda<R: Rng + ?Sized>(mode: &LambdaMode, rng: &mut R) -> f64 {
    match *mode {
        LambdaMode::Fixed { lambda1, .. } => lambda1,
        LambdaMode::ScenarioA => {
            // Flat part carries 1.5 c, tail 0.225 c, c = 1 / 1.725.
            let tail_mass = 0.75 * SCENARIO_A_TAIL;
            let flat_p = SCENARIO_A_FLAT / (SCENARIO_A_FLAT + tail_mass);
            let u: f64 = rng.random();
            if u < flat_p {
                -SCENARIO_A_FLAT * u / flat_p
            } else {
                // Inverse CDF of the density ∝ 1 − s / 0.6 on s ∈ [0, 0.3].
                let v = ((u - flat_p) / (1.0 - flat_p)).min(1.0);
                let s = 2.0 * SCENARIO_A_TAIL * (1.0 - (1.0 - 0.75 * v).sqrt());
                -SCENARIO_A_FLAT - s.min(SCENARIO_A_TAIL)
            }
        }
        LambdaMode::ScenarioB => rng.random_range(-0.3..=0.0),
        LambdaMode::ScenarioC => rng.random_range(-1.8..=-0.5),
    }
}

fn sample_lambdas<R: Rng + ?Sized>(cfg: &SceneConfig, rng: &mut R) -> (f64, f64) {
    match cfg.lambda_mode {
        LambdaMode::Fixed { lambda1, lambda2 } => (lambda1, lambda2),
        ref mode => {
            let l1 = sample_lambda(mode, rng);
            let l2 = if cfg.equal_lambdas { l1 } else { sample_lambda(mode, rng) };
            (l1, l2)
        }
    }
}

fn sample_pose<R: Rng + ?Sized>(cfg: &SceneConfig, rng: &mut R) -> RelativePose {
    let axis = Unit::new_normalize(Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    ));
    let angle = rng.random_range(0.0..=cfg.rotation_bound_deg).to_radians();
    let r = *Rotation3::from_axis_angle(&axis, angle).matrix();
    let t = loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            break v / n;
        }
    };
    RelativePose { r, t }
}

fn on_sensor(p: &Vector2<f64>) -> bool {
    p.x.abs() <= 0.5 && p.y.abs() <= 0.5
}

fn uniform_point<R: Rng + ?Sized>(rng: &mut R) -> Vector2<f64> {
    Vector2::new(rng.random_range(-0.5..=0.5), rng.random_range(-0.5..=0.5))
}

/// Generates one pair; deterministic in `cfg`.
pub fn generate_pair(cfg: &SceneConfig) -> Result<GroundTruthPair> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lambda1, lambda2) = sample_lambdas(cfg, &mut rng);
    let pose = sample_pose(cfg, &mut rng);
    let k = CameraIntrinsics::from_focal(cfg.focal, 0.0, 0.0)?;
    let k_inv = k.inverse();
    let [near, far] = cfg.depth_range;
    let n = cfg.n_points;

    let mut corrs = Vec::with_capacity(n);
    let budget = 100 * n;
    let mut draws = 0;
    while corrs.len() < n {
        if draws == budget {
            return Err(Error::GenerationFailure);
        }
        draws += 1;
        let p1 = uniform_point(&mut rng);
        let depth = rng.random_range(near..=far);
        let Ok(q1) = undistort(&p1, lambda1) else {
            continue;
        };
        let x = k_inv * q1.push(1.0) * depth;
        let x2 = pose.r * x + pose.t;
        if x2.z <= 1e-6 {
            continue;
        }
        let Ok(p2) = distort(&k.project(&x2), lambda2) else {
            continue;
        };
        if !on_sensor(&p2) {
            continue;
        }
        corrs.push(Correspondence::new(p1, p2));
    }

    let sigma = cfg.noise_sigma();
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).map_err(|_| Error::config("noise_sigma_px", "invalid"))?;
        for c in &mut corrs {
            c.p1 += Vector2::new(normal.sample(&mut rng), normal.sample(&mut rng));
            c.p2 += Vector2::new(normal.sample(&mut rng), normal.sample(&mut rng));
        }
    }

    let mut inlier_truth = vec![true; n];
    let n_out = (n as f64 * cfg.outlier_fraction).round() as usize;
    for i in index::sample(&mut rng, n, n_out).into_iter() {
        corrs[i] = Correspondence::new(uniform_point(&mut rng), uniform_point(&mut rng));
        inlier_truth[i] = false;
    }

    Ok(GroundTruthPair {
        corrs,
        pose,
        lambda1,
        lambda2,
        inlier_truth,
        k1: k,
        k2: k,
    })
}

/// `count` pairs, pair `i` seeded with [`pair_seed`]`(cfg.seed, i)`.
pub fn generate_dataset(cfg: &SceneConfig, count: usize) -> Result<Vec<GroundTruthPair>> {
    (0..count as u64).map(|i| generate_pair(&cfg.for_pair(i))).collect()
}

/// Equal-distortion levels of the robustness sweep, 0 down to -1.8.
pub fn sweep_levels() -> Vec<f64> {
    (0..7).map(|i| -(3 * i) as f64 / 10.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate_model;
    use crate::geometry::{epipolar_residual_algebraic, sampson_residual_distorted, FundamentalModel};

    fn fixed(l: f64) -> LambdaMode {
        LambdaMode::Fixed { lambda1: l, lambda2: l }
    }

    #[test]
    fn scenario_b_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws: Vec<f64> = (0..100_000).map(|_| sample_lambda(&LambdaMode::ScenarioB, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean + 0.15).abs() < 0.003, "{mean}");
        assert!(draws.iter().all(|l| (-0.3..=0.0).contains(l)));
    }

    #[test]
    fn scenario_c_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100_000 {
            let l = sample_lambda(&LambdaMode::ScenarioC, &mut rng);
            assert!((-1.8..=-0.5).contains(&l));
        }
    }

    #[test]
    fn scenario_a_tail_mass_and_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000;
        let c = 1.0 / 1.725;
        let mut tail = 0usize;
        let mut bins = [0usize; 3];
        for _ in 0..n {
            let l = sample_lambda(&LambdaMode::ScenarioA, &mut rng);
            assert!((-1.8..=0.0).contains(&l));
            if l < -1.5 {
                tail += 1;
                bins[(((-1.5 - l) / 0.1) as usize).min(2)] += 1;
            }
        }
        let mass = tail as f64 / n as f64;
        assert!((mass - 0.225 * c).abs() < 0.002, "{mass}");
        // Density c(1 − s/0.6) integrated over 0.1-wide bins.
        for (k, &count) in bins.iter().enumerate() {
            let (a, b) = (0.1 * k as f64, 0.1 * (k + 1) as f64);
            let expected = c * ((b - a) - (b * b - a * a) / 1.2);
            assert!((count as f64 / n as f64 - expected).abs() < 0.002);
        }
    }

    #[test]
    fn sweep_levels_values() {
        let levels = sweep_levels();
        assert_eq!(levels, vec![0.0, -0.3, -0.6, -0.9, -1.2, -1.5, -1.8]);
    }

    #[test]
    fn noiseless_pairs_satisfy_the_model() {
        for seed in 0..20 {
            let cfg = SceneConfig {
                lambda_mode: LambdaMode::ScenarioC,
                equal_lambdas: seed % 2 == 0,
                seed,
                ..SceneConfig::default()
            };
            let pair = generate_pair(&cfg).unwrap();
            let model = FundamentalModel::new(pair.pose.fundamental(&pair.k1, &pair.k2), pair.lambda1, pair.lambda2);
            for c in &pair.corrs {
                assert!(c.p1.amax() <= 0.5 && c.p2.amax() <= 0.5);
                assert!(epipolar_residual_algebraic(&model, c).unwrap().abs() < 1e-12);
            }
            if cfg.equal_lambdas {
                assert_eq!(pair.lambda1, pair.lambda2);
            }
        }
    }

    #[test]
    fn ground_truth_self_consistency() {
        for seed in 0..20 {
            let cfg = SceneConfig {
                lambda_mode: LambdaMode::ScenarioA,
                outlier_fraction: 0.3,
                seed,
                ..SceneConfig::default()
            };
            let pair = generate_pair(&cfg).unwrap();
            let model = FundamentalModel::new(pair.pose.fundamental(&pair.k1, &pair.k2), pair.lambda1, pair.lambda2);
            let report = evaluate_model(&model, &pair.corrs, &pair.inlier_truth, &pair.ground_truth()).unwrap();
            assert!(report.pose_err < 1e-6, "{report:?}");
            assert_eq!(report.lambda_err, 0.0);
        }
    }

    #[test]
    fn outlier_bookkeeping() {
        let cfg = SceneConfig {
            outlier_fraction: 0.3,
            lambda_mode: fixed(-0.5),
            seed: 4,
            ..SceneConfig::default()
        };
        let pair = generate_pair(&cfg).unwrap();
        assert_eq!(pair.inlier_truth.iter().filter(|m| !**m).count(), 60);
        let model = FundamentalModel::new(pair.pose.fundamental(&pair.k1, &pair.k2), -0.5, -0.5);
        for (c, inlier) in pair.corrs.iter().zip(&pair.inlier_truth) {
            if *inlier {
                assert!(epipolar_residual_algebraic(&model, c).unwrap().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic() {
        let cfg = SceneConfig {
            noise_sigma_px: 1.0,
            outlier_fraction: 0.2,
            lambda_mode: LambdaMode::ScenarioA,
            seed: 77,
            ..SceneConfig::default()
        };
        assert_eq!(generate_pair(&cfg).unwrap(), generate_pair(&cfg).unwrap());
        let other = generate_pair(&SceneConfig { seed: 78, ..cfg.clone() }).unwrap();
        assert_ne!(generate_pair(&cfg).unwrap(), other);
    }

    #[test]
    fn noise_level() {
        // Sampson error of isotropic noise on all four coordinates has
        // standard deviation σ to first order.
        let cfg = SceneConfig {
            noise_sigma_px: 1.0,
            n_points: 2000,
            lambda_mode: fixed(-0.7),
            seed: 5,
            ..SceneConfig::default()
        };
        let pair = generate_pair(&cfg).unwrap();
        let model = FundamentalModel::new(pair.pose.fundamental(&pair.k1, &pair.k2), -0.7, -0.7);
        let ms: f64 = pair
            .corrs
            .iter()
            .map(|c| sampson_residual_distorted(&model, c).unwrap().powi(2))
            .sum::<f64>()
            / pair.corrs.len() as f64;
        let rms = ms.sqrt();
        let sigma = cfg.noise_sigma();
        assert!((rms / sigma - 1.0).abs() < 0.1, "rms {rms} sigma {sigma}");
    }

    #[test]
    fn validation() {
        let bad = |f: fn(&mut SceneConfig)| {
            let mut cfg = SceneConfig::default();
            f(&mut cfg);
            generate_pair(&cfg).unwrap_err()
        };
        assert!(matches!(bad(|c| c.outlier_fraction = 1.5), Error::InvalidConfig { field, .. } if field == "outlier_fraction"));
        assert!(matches!(bad(|c| c.n_points = 10), Error::InvalidConfig { field, .. } if field == "n_points"));
        assert!(matches!(
            bad(|c| c.lambda_mode = LambdaMode::Fixed { lambda1: -0.2, lambda2: -0.4 }),
            Error::InvalidConfig { .. }
        ));
    }

    #[test]
    fn pair_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| pair_seed(9, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn lambda_mode_serde() {
        let json = serde_json::to_string(&LambdaMode::Fixed { lambda1: -0.9, lambda2: -0.9 }).unwrap();
        assert_eq!(json, r#"{"kind":"fixed","lambda1":-0.9,"lambda2":-0.9}"#);
        let mode: LambdaMode = serde_json::from_str(r#"{"kind":"scenario_a"}"#).unwrap();
        assert_eq!(mode, LambdaMode::ScenarioA);
    }
}
