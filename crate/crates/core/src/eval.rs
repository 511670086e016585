//! Pose recovery from an estimated model and the error metrics used to
//! compare estimators.
//!
//! Camera convention: a world point `X` in camera-1 coordinates maps to
//! `R X + t` in camera 2. Calibrated rays satisfy `n2ᵀ E n1 = 0` with
//! `E = [t]× R`, while the fundamental matrix follows the crate-wide
//! `u1ᵀ F u2 = 0`. Hence `F = K1⁻ᵀ Eᵀ K2⁻¹` and `E = K2ᵀ Fᵀ K1`.

use nalgebra::{Matrix3, Matrix4, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{undistort, Correspondence, FundamentalMatrix, FundamentalModel};

pub const AUC_THRESHOLDS: [f64; 3] = [5.0, 10.0, 20.0];

/// Upper-triangular calibration matrix in normalized image units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct CameraIntrinsics {
    k: Matrix3<f64>,
}

impl CameraIntrinsics {
    pub fn new(k: Matrix3<f64>) -> Result<Self> {
        let upper = k[(1, 0)] == 0.0 && k[(2, 0)] == 0.0 && k[(2, 1)] == 0.0;
        if !upper || !(k[(0, 0)] > 0.0 && k[(1, 1)] > 0.0) || k[(2, 2)] != 1.0 || !k.iter().all(|v| v.is_finite()) {
            return Err(Error::config("intrinsics", "must be upper triangular with positive focal entries and k[2][2] = 1"));
        }
        Ok(Self { k })
    }

    pub fn identity() -> Self {
        Self { k: Matrix3::identity() }
    }

    pub fn from_focal(focal: f64, cx: f64, cy: f64) -> Result<Self> {
        Self::new(Matrix3::new(focal, 0.0, cx, 0.0, focal, cy, 0.0, 0.0, 1.0))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.k
    }

    pub fn inverse(&self) -> Matrix3<f64> {
        // Upper triangular with positive diagonal, always invertible.
        self.k.try_inverse().expect("valid intrinsics are invertible")
    }

    /// Calibrated ray of an undistorted image point, dehomogenized.
    pub fn calibrate(&self, p: &Vector2<f64>) -> Vector2<f64> {
        let n = self.inverse() * p.push(1.0);
        Vector2::new(n.x / n.z, n.y / n.z)
    }

    pub fn project(&self, x: &Vector3<f64>) -> Vector2<f64> {
        let p = self.k * x;
        Vector2::new(p.x / p.z, p.y / p.z)
    }
}

impl TryFrom<[[f64; 3]; 3]> for CameraIntrinsics {
    type Error = Error;

    fn try_from(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::new(Matrix3::from_fn(|i, j| rows[i][j]))
    }
}

impl From<CameraIntrinsics> for [[f64; 3]; 3] {
    fn from(k: CameraIntrinsics) -> Self {
        std::array::from_fn(|i| std::array::from_fn(|j| k.k[(i, j)]))
    }
}

/// Rotation and unit translation direction, `X₂ = R X₁ + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativePose {
    pub r: Matrix3<f64>,
    pub t: Vector3<f64>,
}

impl RelativePose {
    pub fn essential(&self) -> Matrix3<f64> {
        skew(&self.t) * self.r
    }

    /// Fundamental matrix under the `u1ᵀ F u2 = 0` convention.
    pub fn fundamental(&self, k1: &CameraIntrinsics, k2: &CameraIntrinsics) -> FundamentalMatrix {
        FundamentalMatrix::new(k1.inverse().transpose() * self.essential().transpose() * k2.inverse())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseErrorReport {
    pub rot_err: f64,
    pub trans_err: f64,
    pub pose_err: f64,
    pub lambda_err: f64,
}

impl PoseErrorReport {
    pub fn new(rot_err: f64, trans_err: f64, lambda_err: f64) -> Self {
        Self {
            rot_err,
            trans_err,
            pose_err: rot_err.max(trans_err),
            lambda_err,
        }
    }

    /// Report for a failed estimate: every error is infinite.
    pub fn failed() -> Self {
        Self::new(f64::INFINITY, f64::INFINITY, f64::INFINITY)
    }
}

pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// `E = K2ᵀ Fᵀ K1` with singular values projected to `(s, s, 0)`.
pub fn essential_from_fundamental(
    f: &FundamentalMatrix,
    k1: &CameraIntrinsics,
    k2: &CameraIntrinsics,
) -> Matrix3<f64> {
    let e = k2.matrix().transpose() * f.matrix().transpose() * k1.matrix();
    project_essential(&e)
}

fn project_essential(e: &Matrix3<f64>) -> Matrix3<f64> {
    let mut d = e.svd(true, true);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| d.singular_values[b].total_cmp(&d.singular_values[a]));
    let s = 0.5 * (d.singular_values[idx[0]] + d.singular_values[idx[1]]);
    d.singular_values[idx[0]] = s;
    d.singular_values[idx[1]] = s;
    d.singular_values[idx[2]] = 0.0;
    d.recompose().unwrap_or(*e)
}

/// The four `(R, t)` pairs consistent with an essential matrix.
pub fn decompose_essential(e: &Matrix3<f64>) -> [RelativePose; 4] {
    let d = e.svd(true, true);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| d.singular_values[b].total_cmp(&d.singular_values[a]));
    let u0 = d.u.expect("requested U");
    let vt0 = d.v_t.expect("requested V");
    let mut u = Matrix3::from_columns(&[u0.column(order[0]), u0.column(order[1]), u0.column(order[2])]);
    let mut v = Matrix3::from_columns(&[
        vt0.row(order[0]).transpose(),
        vt0.row(order[1]).transpose(),
        vt0.row(order[2]).transpose(),
    ]);
    if u.determinant() < 0.0 {
        u.column_mut(2).neg_mut();
    }
    if v.determinant() < 0.0 {
        v.column_mut(2).neg_mut();
    }
    let w = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
    let ra = u * w * v.transpose();
    let rb = u * w.transpose() * v.transpose();
    let t: Vector3<f64> = u.column(2).into();
    [
        RelativePose { r: ra, t },
        RelativePose { r: ra, t: -t },
        RelativePose { r: rb, t },
        RelativePose { r: rb, t: -t },
    ]
}

/// Linear (DLT) triangulation in camera-1 coordinates, `None` for points at
/// infinity.
pub fn triangulate(pose: &RelativePose, n1: &Vector2<f64>, n2: &Vector2<f64>) -> Option<Vector3<f64>> {
    let p2 = nalgebra::Matrix3x4::from_columns(&[
        pose.r.column(0).into(),
        pose.r.column(1).into(),
        pose.r.column(2).into(),
        pose.t,
    ]);
    let mut a = Matrix4::zeros();
    a.set_row(0, &nalgebra::RowVector4::new(-1.0, 0.0, n1.x, 0.0));
    a.set_row(1, &nalgebra::RowVector4::new(0.0, -1.0, n1.y, 0.0));
    a.set_row(2, &(p2.row(2) * n2.x - p2.row(0)));
    a.set_row(3, &(p2.row(2) * n2.y - p2.row(1)));
    let d = a.svd(false, true);
    let (imin, _) = d.singular_values.argmin();
    let h = d.v_t.expect("requested V").row(imin).transpose();
    if h[3].abs() < 1e-12 * h.norm() {
        return None;
    }
    Some(Vector3::new(h[0], h[1], h[2]) / h[3])
}

struct Vote {
    in_front: usize,
    residual: f64,
}

fn vote(pose: &RelativePose, corrs: &[Correspondence]) -> Vote {
    let mut in_front = 0;
    let mut residual = 0.0;
    for c in corrs {
        let Some(x) = triangulate(pose, &c.p1, &c.p2) else {
            continue;
        };
        let x2 = pose.r * x + pose.t;
        if x.z > 0.0 && x2.z > 0.0 {
            in_front += 1;
        }
        let e1 = Vector2::new(x.x / x.z, x.y / x.z) - c.p1;
        let e2 = Vector2::new(x2.x / x2.z, x2.y / x2.z) - c.p2;
        let r = e1.norm_squared() + e2.norm_squared();
        if r.is_finite() {
            residual += r;
        }
    }
    Vote { in_front, residual }
}

/// Picks the decomposition of `e` that puts most triangulated points in front
/// of both cameras. `corrs` are undistorted, calibrated rays.
pub fn recover_pose(e: &Matrix3<f64>, corrs: &[Correspondence]) -> Result<RelativePose> {
    if corrs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let candidates = decompose_essential(e);
    let votes: Vec<Vote> = candidates.iter().map(|p| vote(p, corrs)).collect();
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| {
        votes[b]
            .in_front
            .cmp(&votes[a].in_front)
            .then(votes[a].residual.total_cmp(&votes[b].residual))
    });
    let (best, second) = (&votes[order[0]], &votes[order[1]]);
    let residual_tie = (best.residual - second.residual).abs()
        <= 1e-12 * best.residual.abs().max(second.residual.abs()).max(f64::MIN_POSITIVE);
    if best.in_front == second.in_front && residual_tie {
        return Err(Error::DecompositionAmbiguous);
    }
    Ok(candidates[order[0]])
}

/// Angle in degrees of the rotation taking `r_est` to `r_gt`.
///
/// Same angle as `acos((tr(r_estᵀ r_gt) − 1) / 2)`, evaluated with `atan2`
/// so that sub-microdegree errors are not lost to rounding near `acos(1)`.
pub fn rotation_error(r_est: &Matrix3<f64>, r_gt: &Matrix3<f64>) -> f64 {
    let m = r_est.transpose() * r_gt;
    let cos2 = (m.trace() - 1.0).clamp(-2.0, 2.0);
    let sin2 = Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]).norm();
    sin2.atan2(cos2).to_degrees()
}

/// Angle in degrees between translation directions. The sign is kept, so
/// opposite directions give 180°.
pub fn translation_error(t_est: &Vector3<f64>, t_gt: &Vector3<f64>) -> Result<f64> {
    let (a, b) = (t_est.norm(), t_gt.norm());
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok((t_est.dot(t_gt) / (a * b)).clamp(-1.0, 1.0).acos().to_degrees())
}

/// Exact area under the recall curve up to each threshold, normalized to
/// `[0, 1]`: `AUC@t = mean(max(0, 1 − eᵢ/t))`.
pub fn pose_auc(errors: &[f64], thresholds: &[f64]) -> Result<Vec<f64>> {
    if errors.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = errors.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| errors.iter().map(|&e| (1.0 - e / t).max(0.0)).sum::<f64>() / n)
        .collect())
}

/// `|λ_est − λ_gt|` for equal distortion, otherwise the mean over both
/// images.
pub fn distortion_error(est: &FundamentalModel, gt_lambda1: f64, gt_lambda2: f64) -> f64 {
    let e1 = (est.lambda1 - gt_lambda1).abs();
    if est.lambda1 == est.lambda2 && gt_lambda1 == gt_lambda2 {
        return e1;
    }
    0.5 * (e1 + (est.lambda2 - gt_lambda2).abs())
}

/// Ground truth a pose estimate is compared against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub pose: RelativePose,
    pub lambda1: f64,
    pub lambda2: f64,
    pub k1: CameraIntrinsics,
    pub k2: CameraIntrinsics,
}

/// Recovers the pose of `model` from the masked correspondences and scores
/// it against `gt`. Uses all correspondences when the mask selects none.
pub fn evaluate_model(
    model: &FundamentalModel,
    corrs: &[Correspondence],
    mask: &[bool],
    gt: &GroundTruth,
) -> Result<PoseErrorReport> {
    let use_all = !mask.iter().any(|m| *m);
    let mut rays = Vec::new();
    for (i, c) in corrs.iter().enumerate() {
        if !use_all && !mask.get(i).copied().unwrap_or(false) {
            continue;
        }
        let (Ok(q1), Ok(q2)) = (undistort(&c.p1, model.lambda1), undistort(&c.p2, model.lambda2)) else {
            continue;
        };
        rays.push(Correspondence::new(gt.k1.calibrate(&q1), gt.k2.calibrate(&q2)));
    }
    let e = essential_from_fundamental(&model.f, &gt.k1, &gt.k2);
    let pose = recover_pose(&e, &rays)?;
    Ok(PoseErrorReport::new(
        rotation_error(&pose.r, &gt.pose.r),
        translation_error(&pose.t, &gt.pose.t)?,
        distortion_error(model, gt.lambda1, gt.lambda2),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub rot_err: Summary,
    pub trans_err: Summary,
    pub pose_err: Summary,
    pub lambda_err: Summary,
    /// AUC of the pose error at 5°, 10° and 20°.
    pub auc: [f64; 3],
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Median; the mean of the middle pair for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn summarize(values: &[f64]) -> Summary {
    Summary {
        mean: mean(values),
        median: median(values),
    }
}

pub fn aggregate(reports: &[PoseErrorReport]) -> Result<Aggregate> {
    if reports.is_empty() {
        return Err(Error::EmptyInput);
    }
    let field = |f: fn(&PoseErrorReport) -> f64| reports.iter().map(f).collect::<Vec<_>>();
    let pose = field(|r| r.pose_err);
    let auc = pose_auc(&pose, &AUC_THRESHOLDS)?;
    Ok(Aggregate {
        count: reports.len(),
        rot_err: summarize(&field(|r| r.rot_err)),
        trans_err: summarize(&field(|r| r.trans_err)),
        pose_err: summarize(&pose),
        lambda_err: summarize(&field(|r| r.lambda_err)),
        auc: [auc[0], auc[1], auc[2]],
    })
}
