//! Small dense linear algebra used by the solvers.
//!
//! Decompositions are delegated to `nalgebra`; this module pins down the
//! contracts the solvers rely on (ordering, completeness of `V`, rank
//! checks, real-eigenvalue filtering) and turns non-convergence into errors.

use nalgebra::linalg::balancing::balance_parlett_reinsch;
use nalgebra::{DMatrix, DVector, Schur, SVD};

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;

const MAX_ITERATIONS: usize = 10_000;

/// Eigenvalues with `|Im| ≤ IMAG_TOL · (1 + |Re|)` are reported as real.
pub const IMAG_TOL: f64 = 1e-6;

/// Relative singular-value floor for [`solve_least_squares`].
pub const RANK_TOL: f64 = 1e-10;

/// Singular value decomposition `m = u · diag(s) · vᵀ`.
///
/// `s` is sorted in non-increasing order and has `min(rows, cols)` entries.
/// `u` is thin (`rows × min(rows, cols)`); `v` is always the full
/// `cols × cols` orthogonal matrix so that null spaces of wide matrices are
/// available.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DenseMatrix,
    pub s: DVector<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    /// Right singular vector of the `k`-th smallest singular direction, counting
    /// the trailing columns of `v` (which includes the null space of wide
    /// matrices).
    pub fn smallest_right_vector(&self, k: usize) -> DVector<f64> {
        let n = self.v.ncols();
        self.v.column(n - 1 - k).into_owned()
    }
}

fn svd_tall(m: &DenseMatrix) -> Result<(DenseMatrix, DVector<f64>, DenseMatrix)> {
    let svd = SVD::try_new(m.clone(), true, true, f64::EPSILON, MAX_ITERATIONS)
        .ok_or(Error::ConvergenceFailure)?;
    let u = svd.u.ok_or(Error::ConvergenceFailure)?;
    let v = svd.v_t.ok_or(Error::ConvergenceFailure)?.transpose();
    Ok((u, svd.singular_values, v))
}

pub fn svd(m: &DenseMatrix) -> Result<Svd> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::ConvergenceFailure);
    }
    let (rows, cols) = m.shape();
    if rows >= cols {
        let (u, s, v) = svd_tall(m)?;
        return Ok(Svd { u, s, v });
    }
    // Wide: decompose the transpose, then complete the thin right factor to
    // an orthonormal basis of R^cols.
    let (vt, s, u) = svd_tall(&m.transpose())?;
    let mut augmented = DenseMatrix::zeros(cols, rows + cols);
    augmented.columns_mut(0, rows).copy_from(&vt);
    augmented
        .columns_mut(rows, cols)
        .copy_from(&DenseMatrix::identity(cols, cols));
    let q = augmented.qr().q();
    let mut v = DenseMatrix::zeros(cols, cols);
    v.columns_mut(0, rows).copy_from(&vt);
    v.columns_mut(rows, cols - rows)
        .copy_from(&q.columns(rows, cols - rows));
    Ok(Svd { u, s, v })
}

/// All eigenvalues of a small square matrix whose imaginary part is below
/// [`IMAG_TOL`].
pub fn real_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    real_eigenvalues_with_tol(m, IMAG_TOL)
}

pub fn real_eigenvalues_with_tol(m: &DenseMatrix, imag_tol: f64) -> Result<Vec<f64>> {
    assert!(m.is_square(), "eigenvalues need a square matrix");
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::ConvergenceFailure);
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut balanced = m.clone();
    balance_parlett_reinsch(&mut balanced);
    let schur =
        Schur::try_new(balanced, f64::EPSILON, MAX_ITERATIONS).ok_or(Error::ConvergenceFailure)?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= imag_tol * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect())
}

/// Minimizes `‖a·x − b‖_F` for `a` with full column rank.
///
/// Rank is judged on the singular values of `a`: the smallest must exceed
/// [`RANK_TOL`] times the largest, otherwise [`Error::RankDeficient`].
pub fn solve_least_squares(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let (rows, cols) = a.shape();
    assert!(rows >= cols, "least squares needs rows >= cols");
    assert_eq!(b.nrows(), rows, "right-hand side row count mismatch");
    let Svd { u, s, v } = svd(a)?;
    let largest = s[0];
    if !(largest > 0.0) || s[cols - 1] <= RANK_TOL * largest {
        return Err(Error::RankDeficient);
    }
    let mut utb = u.transpose() * b;
    for (i, mut row) in utb.row_iter_mut().enumerate() {
        row /= s[i];
    }
    Ok(v * utb)
}

fn horner(coeffs: &[f64; 4], x: f64) -> (f64, f64) {
    let [c3, c2, c1, c0] = *coeffs;
    let value = ((c3 * x + c2) * x + c1) * x + c0;
    let derivative = (3.0 * c3 * x + 2.0 * c2) * x + c1;
    (value, derivative)
}

fn polish(coeffs: &[f64; 4], mut x: f64) -> f64 {
    for _ in 0..3 {
        let (value, derivative) = horner(coeffs, x);
        if derivative == 0.0 || value == 0.0 {
            break;
        }
        let next = x - value / derivative;
        if horner(coeffs, next).0.abs() < value.abs() {
            x = next;
        } else {
            break;
        }
    }
    x
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        // b = 0 and disc = 0, so c = 0 too
        return vec![0.0, 0.0];
    }
    vec![q / a, c / q]
}

/// Real roots of `c3·x³ + c2·x² + c1·x + c0`.
///
/// A leading coefficient below `1e-12 · max|cᵢ|` degrades to the quadratic
/// (and then linear) case.
pub fn cubic_real_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Result<Vec<f64>> {
    let scale = [c3, c2, c1, c0].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Err(Error::AllZeroCoefficients);
    }
    let tiny = 1e-12 * scale;
    if c3.abs() < tiny {
        if c2.abs() < tiny {
            if c1.abs() < tiny {
                return Ok(Vec::new());
            }
            return Ok(vec![-c0 / c1]);
        }
        let coeffs = [0.0, c2, c1, c0];
        return Ok(quadratic_roots(c2, c1, c0)
            .into_iter()
            .map(|r| polish(&coeffs, r))
            .collect());
    }

    let (a, b, c) = (c2 / c3, c1 / c3, c0 / c3);
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = 0.25 * q * q + p * p * p / 27.0;

    let roots: Vec<f64> = if disc > 0.0 {
        let big = -q.signum() * (0.5 * q.abs() + disc.sqrt()).cbrt();
        let t = if big == 0.0 { 0.0 } else { big - p / (3.0 * big) };
        vec![t - shift]
    } else if p == 0.0 {
        vec![-shift; 3]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift)
            .collect()
    };
    let coeffs = [c3, c2, c1, c0];
    Ok(roots.into_iter().map(|r| polish(&coeffs, r)).collect())
}
