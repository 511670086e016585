//! Pinhole 7-point solver on a noiseless synthetic pair.

use radpose::minimal::solve_7pt;
use radpose::synth::{generate_pair, SceneConfig};

fn main() -> radpose::Result<()> {
    let mut pair = generate_pair(&SceneConfig {
        n_points: 14,
        seed: 11,
        ..SceneConfig::default()
    })?;
    pair.corrs.truncate(7);
    let truth = pair.pose.fundamental(&pair.k1, &pair.k2);

    let roots = solve_7pt(&pair.corrs)?;
    println!("{} real solution(s)", roots.len());
    for (i, f) in roots.iter().enumerate() {
        println!("  #{i}: distance to ground truth {:.2e}", f.distance(&truth));
    }
    Ok(())
}
