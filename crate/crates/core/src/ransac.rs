//! RANSAC with λ-sampling.
//!
//! Each iteration draws seven correspondences and runs the pinhole 7-point
//! solver once per undistortion pair of a [`SampleGrid`], on the sample
//! undistorted with that pair. Hypotheses are scored with the
//! distortion-aware Sampson residual under a truncated quadratic loss. New
//! best models are refined by local optimization: refitting the 9-point
//! (shared grid) or 12-point (different grids) distortion solver on the
//! current inliers, plus a weighted algebraic refinement of each candidate's
//! undistortion coefficients.

use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distortion::{solve_equal_9pt, solve_two_12pt, EQUAL_MIN_POINTS, TWO_MIN_POINTS};
use crate::error::{Error, Result};
use crate::refine::{refine_distortion, refine_distortion_robust, DEFAULT_WINDOW};
use crate::geometry::{
    is_plausible_lambda, sampson_residual_distorted, undistort, Correspondence, FundamentalModel, PLAUSIBLE_LAMBDA,
};
use crate::minimal::solve_7pt;

pub const SAMPLE_SIZE: usize = 7;

/// Extra inliers required on top of the non-minimal solver size before
/// local optimization runs.
pub const LO_MARGIN: usize = 3;
/// Threshold factor of the correspondence set used by the robust LO chain.
const LO_WIDE_FACTOR: f64 = 3.0;
/// Cauchy scale of the robust LO chain, relative to the threshold.
const LO_CAUCHY_FACTOR: f64 = 1.0 / 3.0;
const LO_IRLS_STEPS: usize = 4;

/// Fixed undistortion values tried in every iteration.
///
/// With `shared` set only the diagonal pairs `(λ, λ)` of `u1` are
/// enumerated (equal-distortion prior); otherwise all `u1 × u2` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleGrid {
    pub u1: Vec<f64>,
    #[serde(default)]
    pub u2: Vec<f64>,
    pub shared: bool,
}

impl SampleGrid {
    pub fn shared(values: &[f64]) -> Self {
        Self {
            u1: values.to_vec(),
            u2: values.to_vec(),
            shared: true,
        }
    }

    pub fn different(u1: &[f64], u2: &[f64]) -> Self {
        Self {
            u1: u1.to_vec(),
            u2: u2.to_vec(),
            shared: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.u1.is_empty() {
            return Err(Error::config("grid.u1", "must not be empty"));
        }
        if self.shared {
            if !self.u2.is_empty() && self.u2 != self.u1 {
                return Err(Error::config("grid.u2", "must be empty or equal u1 for a shared grid"));
            }
        } else if self.u2.is_empty() {
            return Err(Error::config("grid.u2", "must not be empty"));
        }
        for (field, values) in [("grid.u1", &self.u1), ("grid.u2", &self.u2)] {
            if let Some(v) = values.iter().find(|v| !is_plausible_lambda(**v)) {
                return Err(Error::config(field, format!("{v} is outside [-2.0, 0.5]")));
            }
        }
        Ok(())
    }

    /// `(λ₁, λ₂)` pairs in enumeration order.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        if self.shared {
            self.u1.iter().map(|&l| (l, l)).collect()
        } else {
            self.u1
                .iter()
                .flat_map(|&a| self.u2.iter().map(move |&b| (a, b)))
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacConfig {
    /// Inlier threshold in pixels of the nominal image.
    pub threshold_px: f64,
    /// Longer image side in pixels used to convert pixel thresholds into
    /// normalized units.
    pub nominal_longer_side: f64,
    pub confidence: f64,
    pub max_iterations: usize,
    pub min_iterations: usize,
    pub lo_enabled: bool,
    pub lo_rounds: usize,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            threshold_px: 3.0,
            nominal_longer_side: 1000.0,
            confidence: 0.9999,
            max_iterations: 10_000,
            min_iterations: 100,
            lo_enabled: true,
            lo_rounds: 3,
            seed: 0,
        }
    }
}

impl RansacConfig {
    pub fn threshold(&self) -> f64 {
        self.threshold_px / self.nominal_longer_side
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_px > 0.0 && self.threshold_px.is_finite()) {
            return Err(Error::config("threshold_px", "must be positive"));
        }
        if !(self.nominal_longer_side > 0.0 && self.nominal_longer_side.is_finite()) {
            return Err(Error::config("nominal_longer_side", "must be positive"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::config("confidence", "must lie in (0, 1)"));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("max_iterations", "must be positive"));
        }
        if self.min_iterations > self.max_iterations {
            return Err(Error::config("min_iterations", "must not exceed max_iterations"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub model: FundamentalModel,
    pub inlier_mask: Vec<bool>,
    /// Sum of truncated squared residuals; lower is better.
    pub score: f64,
    /// Iterations that produced at least one solver result.
    pub iterations_used: usize,
    /// 7-point solver calls over all draws, including degenerate ones.
    pub solver_invocations: usize,
    /// Seconds spent in [`run_ransac`].
    pub elapsed: f64,
}

impl Estimate {
    pub fn inlier_count(&self) -> usize {
        self.inlier_mask.iter().filter(|m| **m).count()
    }

    pub fn inliers(&self, corrs: &[Correspondence]) -> Vec<Correspondence> {
        select(corrs, &self.inlier_mask)
    }
}

fn select(corrs: &[Correspondence], mask: &[bool]) -> Vec<Correspondence> {
    corrs
        .iter()
        .zip(mask)
        .filter(|(_, keep)| **keep)
        .map(|(c, _)| *c)
        .collect()
}

/// Truncated quadratic score: each point contributes `min(r², τ²)`, and is
/// an inlier iff `r < τ`. Points without a defined residual are outliers.
pub fn score_model(model: &FundamentalModel, corrs: &[Correspondence], tau: f64) -> (f64, Vec<bool>) {
    assert!(tau > 0.0, "threshold must be positive");
    let tau2 = tau * tau;
    let mut score = 0.0;
    let mut mask = Vec::with_capacity(corrs.len());
    for c in corrs {
        match sampson_residual_distorted(model, c) {
            Ok(r) if r < tau => {
                score += r * r;
                mask.push(true);
            }
            _ => {
                score += tau2;
                mask.push(false);
            }
        }
    }
    (score, mask)
}

/// `k` distinct indices drawn uniformly from `0..n`.
pub fn draw_sample<R: rand::Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    if n < k {
        return Err(Error::InsufficientCorrespondences { needed: k, got: n });
    }
    Ok(index::sample(rng, n, k).into_vec())
}

/// Iterations needed to draw an all-inlier sample with probability
/// `confidence` given the inlier ratio.
pub fn required_iterations(inlier_ratio: f64, confidence: f64, sample_size: usize) -> usize {
    let p_good = inlier_ratio.clamp(0.0, 1.0).powi(sample_size as i32);
    if p_good >= 1.0 {
        return 0;
    }
    if p_good <= 0.0 {
        return usize::MAX;
    }
    let n = (1.0 - confidence).ln() / (1.0 - p_good).ln();
    if n.is_finite() {
        n.ceil().max(0.0) as usize
    } else {
        usize::MAX
    }
}

/// Robust refinement chain: Cauchy-reweighted refinement on the
/// correspondences within `LO_WIDE_FACTOR · τ` of `current`. The first step
/// searches the whole plausible range, so a model stuck at the wrong
/// coefficient can still move.
fn robust_chain(corrs: &[Correspondence], current: &FundamentalModel, shared: bool, tau: f64) -> Option<FundamentalModel> {
    let (_, wide) = score_model(current, corrs, LO_WIDE_FACTOR * tau);
    let pts: Vec<Correspondence> = corrs.iter().zip(&wide).filter(|(_, w)| **w).map(|(c, _)| *c).collect();
    let full = PLAUSIBLE_LAMBDA.1 - PLAUSIBLE_LAMBDA.0;
    let mut m = *current;
    for step in 0..LO_IRLS_STEPS {
        let half = if step == 0 { full } else { DEFAULT_WINDOW };
        m = refine_distortion_robust(&pts, &m, shared, LO_CAUCHY_FACTOR * tau, half)?;
    }
    Some(m)
}

fn refit_candidates(inliers: &[Correspondence], shared: bool, current: &FundamentalModel) -> Vec<FundamentalModel> {
    let roots: Vec<FundamentalModel> = if shared {
        solve_equal_9pt(inliers)
            .map(|sols| {
                sols.into_iter()
                    .map(|(f, l)| FundamentalModel::new(f, l, l))
                    .collect()
            })
            .unwrap_or_default()
    } else {
        solve_two_12pt(inliers)
            .map(|sols| {
                sols.into_iter()
                    .map(|(f, l1, l2)| FundamentalModel::new(f, l1, l2))
                    .collect()
            })
            .unwrap_or_default()
    };
    // The solver's overdetermined fit biases λ on noisy data; refining from
    // every root and from the current model removes most of it.
    let refined: Vec<_> = roots
        .iter()
        .chain(std::iter::once(current))
        .filter_map(|m| refine_distortion(inliers, m, shared))
        .collect();
    roots.into_iter().chain(refined).collect()
}

/// Refits the distortion solver on the current inliers for up to
/// `cfg.lo_rounds` rounds, adopting a candidate only if it strictly lowers
/// the score. Never returns a worse estimate than `best`.
pub fn local_optimize(
    best: &Estimate,
    corrs: &[Correspondence],
    shared: bool,
    cfg: &RansacConfig,
) -> Estimate {
    let tau = cfg.threshold();
    let needed = if shared { EQUAL_MIN_POINTS } else { TWO_MIN_POINTS } + LO_MARGIN;
    let mut current = best.clone();
    for _ in 0..cfg.lo_rounds {
        let inliers = current.inliers(corrs);
        if inliers.len() < needed {
            break;
        }
        let mut improved = false;
        let mut candidates = refit_candidates(&inliers, shared, &current.model);
        candidates.extend(robust_chain(corrs, &current.model, shared, tau));
        for model in candidates {
            if !model.is_plausible() {
                continue;
            }
            let (score, mask) = score_model(&model, corrs, tau);
            if score < current.score {
                current.model = model;
                current.score = score;
                current.inlier_mask = mask;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    current
}

/// Robust estimation of a [`FundamentalModel`] with λ-sampling.
///
/// Deterministic in `(corrs, grid, cfg)`.
pub fn run_ransac(corrs: &[Correspondence], grid: &SampleGrid, cfg: &RansacConfig) -> Result<Estimate> {
    let start = Instant::now();
    grid.validate()?;
    cfg.validate()?;
    let n = corrs.len();
    if n < SAMPLE_SIZE {
        return Err(Error::InsufficientCorrespondences {
            needed: SAMPLE_SIZE,
            got: n,
        });
    }
    let tau = cfg.threshold();
    let pairs = grid.pairs();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut best: Option<Estimate> = None;
    // Best score of a minimal-sample hypothesis before LO. Comparing new
    // hypotheses against it, not against the LO-refined best, lets a later
    // hypothesis from a different basin still reach LO.
    let mut best_raw = f64::INFINITY;
    let mut iterations = 0usize;
    let mut invocations = 0usize;
    let mut attempts = 0usize;
    let attempt_cap = cfg.max_iterations.saturating_mul(10);
    let mut bound = cfg.max_iterations;
    let mut sample = Vec::with_capacity(SAMPLE_SIZE);

    while iterations < bound && attempts < attempt_cap {
        attempts += 1;
        let indices = draw_sample(n, SAMPLE_SIZE, &mut rng)?;
        let mut solved = false;
        for &(l1, l2) in &pairs {
            invocations += 1;
            sample.clear();
            for &i in &indices {
                let c = &corrs[i];
                match (undistort(&c.p1, l1), undistort(&c.p2, l2)) {
                    (Ok(p1), Ok(p2)) => sample.push(Correspondence::new(p1, p2)),
                    _ => break,
                }
            }
            if sample.len() != SAMPLE_SIZE {
                continue;
            }
            let Ok(fs) = solve_7pt(&sample) else {
                continue;
            };
            solved = true;
            for f in fs {
                let model = FundamentalModel::new(f, l1, l2);
                if !model.is_plausible() {
                    continue;
                }
                let (score, mask) = score_model(&model, corrs, tau);
                if score >= best_raw {
                    continue;
                }
                best_raw = score;
                let mut candidate = Estimate {
                    model,
                    inlier_mask: mask,
                    score,
                    iterations_used: 0,
                    solver_invocations: 0,
                    elapsed: 0.0,
                };
                if cfg.lo_enabled {
                    candidate = local_optimize(&candidate, corrs, grid.shared, cfg);
                }
                if best.as_ref().is_none_or(|b| candidate.score < b.score) {
                    best = Some(candidate);
                }
            }
        }
        if solved {
            iterations += 1;
        }
        if let Some(b) = &best {
            let ratio = b.inlier_count() as f64 / n as f64;
            bound = required_iterations(ratio, cfg.confidence, SAMPLE_SIZE)
                .clamp(cfg.min_iterations, cfg.max_iterations);
        }
    }

    let mut best = best.ok_or(Error::NoModelFound)?;
    if cfg.lo_enabled {
        best = local_optimize(&best, corrs, grid.shared, cfg);
    }
    best.iterations_used = iterations;
    best.solver_invocations = invocations;
    best.elapsed = start.elapsed().as_secs_f64();
    Ok(best)
}
