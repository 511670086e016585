//! Division-model distortion and its closed-form inverse.

use nalgebra::Vector2;
use radpose::{distort, normalize_point, undistort};

fn main() -> radpose::Result<()> {
    // A pixel in a 1600x1200 image, normalized by the longer side.
    let p = normalize_point(&Vector2::new(1450.0, 1020.0), 1600.0, 1200.0);
    println!("normalized point: ({:.4}, {:.4})", p.x, p.y);

    for lambda in [0.0, -0.3, -0.9, -1.5] {
        let q = undistort(&p, lambda)?;
        let back = distort(&q, lambda)?;
        println!(
            "λ = {lambda:>5}: undistorted ({:.4}, {:.4}), round-trip error {:.1e}",
            q.x,
            q.y,
            (back - p).norm()
        );
    }
    Ok(())
}
