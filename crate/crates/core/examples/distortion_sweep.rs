//! A reduced robustness sweep: median λ error per distortion level for the
//! pinhole baseline and for λ-sampling with local optimization.

use radpose::bench::{run_sweep, BenchOptions, SweepConfig};
use radpose::synth::SceneConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SweepConfig {
        pairs_per_level: 10,
        levels: vec![0.0, -0.6, -1.2, -1.8],
        seed: 7,
        scene: SceneConfig {
            noise_sigma_px: 0.5,
            outlier_fraction: 0.3,
            ..SceneConfig::default()
        },
        ransac: BenchOptions {
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            ..BenchOptions::default()
        },
        ..SweepConfig::default()
    };
    println!("{:>6}  {:<24} {:>10} {:>12}", "level", "method", "med ε(λ)", "med pose °");
    for row in run_sweep(&cfg)? {
        println!(
            "{:>6}  {:<24} {:>10.4} {:>12.3}",
            row.level, row.method, row.lambda_err.median, row.pose_err.median
        );
    }
    Ok(())
}
