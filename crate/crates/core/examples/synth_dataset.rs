//! Generates a small dataset with Scenario A distortion, writes it as JSON
//! Lines and reads it back.

use radpose::bench::{read_dataset, synth_pairs, write_dataset, SynthConfig};
use radpose::synth::{LambdaMode, SceneConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig {
        pairs: 5,
        scene: SceneConfig {
            noise_sigma_px: 0.5,
            outlier_fraction: 0.2,
            lambda_mode: LambdaMode::ScenarioA,
            seed: 2024,
            ..SceneConfig::default()
        },
    };
    let pairs = synth_pairs(&cfg, 1)?;
    for p in &pairs {
        let inliers = p.pair.inlier_truth.iter().filter(|b| **b).count();
        println!(
            "pair {}: λ1 = {:>7.4}, λ2 = {:>7.4}, {} correspondences ({inliers} inliers)",
            p.pair_id,
            p.pair.lambda1,
            p.pair.lambda2,
            p.pair.corrs.len()
        );
    }

    let mut buf = Vec::new();
    write_dataset(&mut buf, &pairs)?;
    let back = read_dataset(buf.as_slice())?;
    println!("{} bytes of JSON Lines, round trip exact: {}", buf.len(), back == pairs);
    Ok(())
}
