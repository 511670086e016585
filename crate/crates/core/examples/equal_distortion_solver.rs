//! Non-minimal solver for F and a shared undistortion coefficient.
//!
//! Nine correspondences are the minimum; more are fitted in the
//! least-squares sense.

use radpose::distortion::solve_equal_9pt;
use radpose::synth::{generate_pair, LambdaMode, SceneConfig};

fn main() -> radpose::Result<()> {
    let lambda = -0.7;
    for n in [9, 40] {
        let mut pair = generate_pair(&SceneConfig {
            n_points: n.max(14),
            lambda_mode: LambdaMode::Fixed {
                lambda1: lambda,
                lambda2: lambda,
            },
            seed: 3,
            ..SceneConfig::default()
        })?;
        pair.corrs.truncate(n);
        let truth = pair.pose.fundamental(&pair.k1, &pair.k2);
        println!("{n} correspondences, true λ = {lambda}");
        for (f, l) in solve_equal_9pt(&pair.corrs)? {
            println!("  λ = {l:>9.6}, F distance {:.2e}", f.distance(&truth));
        }
    }
    Ok(())
}
