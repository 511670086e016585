//! λ-sampling RANSAC on a noisy pair with outliers, with and without local
//! optimization.

use radpose::eval::evaluate_model;
use radpose::synth::{generate_pair, LambdaMode, SceneConfig};
use radpose::{run_ransac, RansacConfig, SampleGrid};

fn main() -> radpose::Result<()> {
    let pair = generate_pair(&SceneConfig {
        n_points: 300,
        noise_sigma_px: 0.5,
        outlier_fraction: 0.3,
        lambda_mode: LambdaMode::Fixed {
            lambda1: -0.9,
            lambda2: -0.9,
        },
        seed: 42,
        ..SceneConfig::default()
    })?;
    let gt = pair.ground_truth();

    let runs = [
        ("7pt{0}", SampleGrid::shared(&[0.0]), false),
        ("7pt{0,-0.6,-1.2}", SampleGrid::shared(&[0.0, -0.6, -1.2]), false),
        ("7pt{0,-0.6,-1.2}+9pt", SampleGrid::shared(&[0.0, -0.6, -1.2]), true),
    ];
    for (name, grid, lo) in runs {
        let cfg = RansacConfig {
            lo_enabled: lo,
            seed: 1,
            ..RansacConfig::default()
        };
        let est = run_ransac(&pair.corrs, &grid, &cfg)?;
        let report = evaluate_model(&est.model, &pair.corrs, &est.inlier_mask, &gt)?;
        println!(
            "{name:<22} λ = {:>7.4}  pose error {:>6.3}°  inliers {:>3}  iterations {:>4}  {:.1} ms",
            est.model.lambda1,
            report.pose_err,
            est.inlier_count(),
            est.iterations_used,
            est.elapsed * 1e3
        );
    }
    Ok(())
}
