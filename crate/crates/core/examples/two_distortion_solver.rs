//! Non-minimal solver for F and one undistortion coefficient per image.

use radpose::distortion::solve_two_12pt;
use radpose::synth::{generate_pair, LambdaMode, SceneConfig};

fn main() -> radpose::Result<()> {
    let (lambda1, lambda2) = (-0.4, -1.1);
    let mut pair = generate_pair(&SceneConfig {
        n_points: 14,
        lambda_mode: LambdaMode::Fixed { lambda1, lambda2 },
        equal_lambdas: false,
        seed: 8,
        ..SceneConfig::default()
    })?;
    pair.corrs.truncate(12);
    let truth = pair.pose.fundamental(&pair.k1, &pair.k2);

    println!("true λ1 = {lambda1}, λ2 = {lambda2}");
    for (f, l1, l2) in solve_two_12pt(&pair.corrs)? {
        println!("  λ1 = {l1:>9.6}, λ2 = {l2:>9.6}, F distance {:.2e}", f.distance(&truth));
    }
    Ok(())
}
