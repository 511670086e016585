//! Pose recovery from a fundamental matrix and the error measures.

use nalgebra::{Rotation3, Vector3};
use radpose::eval::{distortion_error, pose_auc, rotation_error, translation_error, AUC_THRESHOLDS};
use radpose::synth::{generate_pair, SceneConfig};
use radpose::{FundamentalModel, Result};

fn main() -> Result<()> {
    let r_gt = Rotation3::from_euler_angles(0.1, -0.2, 0.05);
    let r_est = Rotation3::from_euler_angles(0.1, -0.2, 0.07);
    println!("rotation error   {:.4}°", rotation_error(r_est.matrix(), r_gt.matrix()));
    let t_err = translation_error(&Vector3::new(1.0, 0.1, 0.0), &Vector3::new(1.0, 0.0, 0.0))?;
    println!("translation error {t_err:.4}°");

    let est = FundamentalModel::new(radpose::FundamentalMatrix::new(nalgebra::Matrix3::identity()), -0.2, -1.0);
    println!("ε(λ)             {:.4}", distortion_error(&est, -0.3, -0.8));

    let errors = [0.5, 2.0, 7.0, 15.0, f64::INFINITY];
    let auc = pose_auc(&errors, &AUC_THRESHOLDS)?;
    println!("AUC@5/10/20      {:.3} {:.3} {:.3}", auc[0], auc[1], auc[2]);

    // Pose recovered from the exact fundamental matrix of a synthetic pair.
    let pair = generate_pair(&SceneConfig {
        seed: 5,
        ..SceneConfig::default()
    })?;
    let model = FundamentalModel::pinhole(pair.pose.fundamental(&pair.k1, &pair.k2));
    let report = radpose::eval::evaluate_model(&model, &pair.corrs, &[], &pair.ground_truth())?;
    println!("exact F pose error {:.2e}°", report.pose_err);
    Ok(())
}
