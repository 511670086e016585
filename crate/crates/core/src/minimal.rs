//! Pinhole fundamental-matrix solvers.
//!
//! Inputs are assumed to be already normalized to `[-0.5, 0.5]²` and already
//! undistorted (or pinhole), so no Hartley re-normalization happens here.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{Correspondence, FundamentalMatrix};
use crate::numerics::{cubic_real_roots, svd, DenseMatrix};

/// Relative singular-value floor below which a design matrix is treated as
/// rank deficient.
const DESIGN_RANK_TOL: f64 = 1e-10;

/// Interpolation parameters beyond this magnitude are discarded.
const MAX_ALPHA: f64 = 1e6;

/// One row of the epipolar design matrix: `u1ᵀ F u2 = fᵀ · row` with `f`
/// row-major, i.e. `row[3i + j] = u1[i] · u2[j]`.
///
/// For inhomogeneous points this is
/// `[x·x′, x·y′, x, y·x′, y·y′, y, x′, y′, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpipolarDesignRow(pub [f64; 9]);

impl EpipolarDesignRow {
    pub fn from_homogeneous(u1: &Vector3<f64>, u2: &Vector3<f64>) -> Self {
        let mut row = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                row[3 * i + j] = u1[i] * u2[j];
            }
        }
        Self(row)
    }

    pub fn from_correspondence(c: &Correspondence) -> Self {
        Self::from_homogeneous(&c.p1.push(1.0), &c.p2.push(1.0))
    }
}

pub fn design_matrix(corrs: &[Correspondence]) -> DenseMatrix {
    DenseMatrix::from_fn(corrs.len(), 9, |r, c| {
        EpipolarDesignRow::from_correspondence(&corrs[r]).0[c]
    })
}

fn reshape(v: impl Iterator<Item = f64>) -> Matrix3<f64> {
    let entries: Vec<f64> = v.collect();
    Matrix3::from_row_slice(&entries)
}

/// Minimal 7-point solver: up to three fundamental matrices satisfying the
/// seven constraints and `det F = 0`.
pub fn solve_7pt(corrs: &[Correspondence]) -> Result<Vec<FundamentalMatrix>> {
    if corrs.len() != 7 {
        return Err(Error::InsufficientCorrespondences {
            needed: 7,
            got: corrs.len(),
        });
    }
    solve_7pt_design(&design_matrix(corrs))
}

/// 7-point solver on a prebuilt 7×9 design matrix.
pub fn solve_7pt_design(design: &DenseMatrix) -> Result<Vec<FundamentalMatrix>> {
    assert_eq!(design.shape(), (7, 9));
    let d = svd(design)?;
    if !(d.s[0] > 0.0) || d.s[6] <= DESIGN_RANK_TOL * d.s[0] {
        return Err(Error::DegenerateSample);
    }
    let f1 = reshape(d.smallest_right_vector(0).iter().copied());
    let f2 = reshape(d.smallest_right_vector(1).iter().copied());

    // det(α F1 + (1 − α) F2) = det(F2 + α (F1 − F2)), sampled at α ∈ {0, 1, -1, 2}
    // and interpolated.
    let diff = f1 - f2;
    let det_at = |a: f64| (f2 + diff * a).determinant();
    let (d0, d1, dm1, d2) = (det_at(0.0), det_at(1.0), det_at(-1.0), det_at(2.0));
    let c0 = d0;
    let c2 = 0.5 * (d1 + dm1) - d0;
    let odd = 0.5 * (d1 - dm1); // c1 + c3
    let c3 = (d2 - c0 - 4.0 * c2 - 2.0 * odd) / 6.0;
    let c1 = odd - c3;

    let roots = match cubic_real_roots(c3, c2, c1, c0) {
        Ok(roots) => roots,
        Err(Error::AllZeroCoefficients) => return Err(Error::DegenerateSample),
        Err(e) => return Err(e),
    };
    Ok(roots
        .into_iter()
        .filter(|a| a.is_finite() && a.abs() <= MAX_ALPHA)
        .map(|a| FundamentalMatrix::new(f2 + diff * a))
        .collect())
}

/// Linear 8-point solver with rank-2 projection.
pub fn solve_8pt_linear(corrs: &[Correspondence]) -> Result<FundamentalMatrix> {
    if corrs.len() < 8 {
        return Err(Error::InsufficientCorrespondences {
            needed: 8,
            got: corrs.len(),
        });
    }
    let d = svd(&design_matrix(corrs))?;
    if !(d.s[0] > 0.0) || d.s[7] <= DESIGN_RANK_TOL * d.s[0] {
        return Err(Error::DegenerateSample);
    }
    let f = reshape(d.smallest_right_vector(0).iter().copied());
    Ok(enforce_rank2(&FundamentalMatrix::new(f)))
}

/// Nearest rank-2 matrix in Frobenius norm, re-normalized.
pub fn enforce_rank2(f: &FundamentalMatrix) -> FundamentalMatrix {
    let mut d = f.matrix().svd(true, true);
    d.singular_values[2] = 0.0;
    match d.recompose() {
        Ok(m) => FundamentalMatrix::new(m),
        Err(_) => *f,
    }
}
