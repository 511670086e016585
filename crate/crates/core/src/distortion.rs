//! Non-minimal solvers for the fundamental matrix with unknown radial
//! distortion.
//!
//! Both solvers drop the `det F = 0` constraint and pose the problem as a
//! polynomial eigenvalue problem in the undistortion coefficient:
//!
//! - equal distortion, `(A₀ + λA₁ + λ²A₂) f = 0` with `N ≥ 9` rows;
//! - different distortions, `(C₀ + λ₁C₁) f̃ = 0` with `N ≥ 12` rows, where
//!   `f̃ = [f; λ₂f₃; λ₂f₆; λ₂f₉]` hides the second coefficient in the unknown.
//!
//! With `σ = 1/λ` each problem becomes a standard eigenvalue problem of a
//! companion-like matrix. Most of its columns are structurally zero (they
//! come from zero columns of `A₂`, `A₁` or `C₁`); removing those columns with
//! their rows leaves a 6×6 matrix for the equal case and a 4×4 matrix for
//! the different case. The retained index sets are derived from the sparsity
//! of the assembled coefficient matrices rather than hard-coded.
//!
//! For `N` larger than the minimal count, `A₀⁻¹` and `C₀⁻¹` are replaced by
//! linear least squares.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::{is_plausible_lambda, Correspondence, FundamentalMatrix};
use crate::numerics::{real_eigenvalues, solve_least_squares, svd, DenseMatrix};

/// Eigenvalues `σ` with `|σ|` at or below this are treated as `λ = ∞`.
const SIGMA_EPS: f64 = 1e-8;

pub const EQUAL_MIN_POINTS: usize = 9;
pub const TWO_MIN_POINTS: usize = 12;

/// Coefficient matrices of `(A₀ + λA₁ + λ²A₂) f = 0`.
///
/// Per correspondence `(x, y) ↔ (x′, y′)` with distorted radii `r`, `r′`:
///
/// ```text
/// A₀: [x·x′, x·y′, x, y·x′, y·y′, y, x′, y′, 1]
/// A₁: [0, 0, x·r′², 0, 0, y·r′², x′·r², y′·r², r² + r′²]
/// A₂: [0, 0, 0, 0, 0, 0, 0, 0, r²·r′²]
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct EqualDistortionSystem {
    pub a0: DenseMatrix,
    pub a1: DenseMatrix,
    pub a2: DenseMatrix,
}

impl EqualDistortionSystem {
    pub fn build(corrs: &[Correspondence]) -> Result<Self> {
        if corrs.len() < EQUAL_MIN_POINTS {
            return Err(Error::InsufficientCorrespondences {
                needed: EQUAL_MIN_POINTS,
                got: corrs.len(),
            });
        }
        let n = corrs.len();
        let mut a0 = DenseMatrix::zeros(n, 9);
        let mut a1 = DenseMatrix::zeros(n, 9);
        let mut a2 = DenseMatrix::zeros(n, 9);
        for (i, c) in corrs.iter().enumerate() {
            let (x, y) = (c.p1.x, c.p1.y);
            let (xp, yp) = (c.p2.x, c.p2.y);
            let r2 = x * x + y * y;
            let rp2 = xp * xp + yp * yp;
            a0.row_mut(i)
                .copy_from_slice(&[x * xp, x * yp, x, y * xp, y * yp, y, xp, yp, 1.0]);
            a1.row_mut(i).copy_from_slice(&[
                0.0,
                0.0,
                x * rp2,
                0.0,
                0.0,
                y * rp2,
                xp * r2,
                yp * r2,
                r2 + rp2,
            ]);
            a2[(i, 8)] = r2 * rp2;
        }
        Ok(Self { a0, a1, a2 })
    }

    /// Scales row `i` of every coefficient matrix by `weights[i]`.
    pub fn weighted(mut self, weights: &[f64]) -> Self {
        assert_eq!(weights.len(), self.a0.nrows());
        for (i, &w) in weights.iter().enumerate() {
            for m in [&mut self.a0, &mut self.a1, &mut self.a2] {
                m.row_mut(i).scale_mut(w);
            }
        }
        self
    }

    /// `A₀ + λA₁ + λ²A₂`.
    pub fn pencil(&self, lambda: f64) -> DenseMatrix {
        &self.a0 + &self.a1 * lambda + &self.a2 * (lambda * lambda)
    }
}

/// Coefficient matrices of `(C₀ + λ₁C₁) f̃ = 0`, `f̃ = [f; λ₂f₃; λ₂f₆; λ₂f₉]`.
///
/// ```text
/// C₀: [x·x′, x·y′, x, y·x′, y·y′, y, x′, y′, 1, x·r′², y·r′², r′²]
/// C₁: [0, 0, 0, 0, 0, 0, x′·r², y′·r², r², 0, 0, r²·r′²]
/// ```
///
/// Under `u(p1, λ₁)ᵀ F u(p2, λ₂) = 0`, `λ₂` multiplies the third column of
/// `F` and `λ₁` its third row, so `λ₂` is the hidden variable and `λ₁` the
/// eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoDistortionSystem {
    pub c0: DenseMatrix,
    pub c1: DenseMatrix,
}

impl TwoDistortionSystem {
    pub fn build(corrs: &[Correspondence]) -> Result<Self> {
        if corrs.len() < TWO_MIN_POINTS {
            return Err(Error::InsufficientCorrespondences {
                needed: TWO_MIN_POINTS,
                got: corrs.len(),
            });
        }
        let n = corrs.len();
        let mut c0 = DenseMatrix::zeros(n, 12);
        let mut c1 = DenseMatrix::zeros(n, 12);
        for (i, c) in corrs.iter().enumerate() {
            let (x, y) = (c.p1.x, c.p1.y);
            let (xp, yp) = (c.p2.x, c.p2.y);
            let r2 = x * x + y * y;
            let rp2 = xp * xp + yp * yp;
            c0.row_mut(i).copy_from_slice(&[
                x * xp,
                x * yp,
                x,
                y * xp,
                y * yp,
                y,
                xp,
                yp,
                1.0,
                x * rp2,
                y * rp2,
                rp2,
            ]);
            c1[(i, 6)] = xp * r2;
            c1[(i, 7)] = yp * r2;
            c1[(i, 8)] = r2;
            c1[(i, 11)] = r2 * rp2;
        }
        Ok(Self { c0, c1 })
    }

    /// Scales row `i` of both coefficient matrices by `weights[i]`.
    pub fn weighted(mut self, weights: &[f64]) -> Self {
        assert_eq!(weights.len(), self.c0.nrows());
        for (i, &w) in weights.iter().enumerate() {
            self.c0.row_mut(i).scale_mut(w);
            self.c1.row_mut(i).scale_mut(w);
        }
        self
    }

    /// `C₀ + λ₁C₁`.
    pub fn pencil(&self, lambda1: f64) -> DenseMatrix {
        &self.c0 + &self.c1 * lambda1
    }
}

/// `f̃ = [f₁..f₉, λf₃, λf₆, λf₉]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedFundamentalVector(pub [f64; 12]);

impl LiftedFundamentalVector {
    pub fn fundamental(&self) -> FundamentalMatrix {
        FundamentalMatrix::from_row_major(&self.0[..9])
    }

    /// Least-squares fit of the three consistency ratios
    /// `f̃₁₀/f̃₃ = f̃₁₁/f̃₆ = f̃₁₂/f̃₉`.
    pub fn lambda(&self) -> f64 {
        let v = &self.0;
        let num = v[9] * v[2] + v[10] * v[5] + v[11] * v[8];
        let den = v[2] * v[2] + v[5] * v[5] + v[8] * v[8];
        num / den
    }

    /// Largest deviation `|f̃₉₊ᵢ − λ·f̃₃ᵢ|` relative to `‖f̃‖`.
    pub fn consistency_error(&self, lambda: f64) -> f64 {
        let v = &self.0;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        [(9, 2), (10, 5), (11, 8)]
            .iter()
            .map(|&(hi, lo)| (v[hi] - lambda * v[lo]).abs())
            .fold(0.0, f64::max)
            / norm
    }
}

fn nonzero_columns(m: &DenseMatrix) -> Vec<bool> {
    m.column_iter()
        .map(|c| c.iter().any(|v| *v != 0.0))
        .collect()
}

/// Repeatedly drops indices whose column, restricted to the surviving rows,
/// is structurally zero. Such columns only contribute zero eigenvalues.
fn eliminate_zero_columns(structure: &[Vec<bool>]) -> Vec<usize> {
    let n = structure.len();
    let mut keep = vec![true; n];
    loop {
        let mut changed = false;
        for j in 0..n {
            if keep[j] && !(0..n).any(|i| keep[i] && structure[i][j]) {
                keep[j] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (0..n).filter(|&i| keep[i]).collect()
}

fn null_vector(m: &DenseMatrix) -> Result<DVector<f64>> {
    Ok(svd(m)?.smallest_right_vector(0))
}

fn map_degenerate(e: Error) -> Error {
    match e {
        Error::RankDeficient => Error::DegenerateSample,
        other => other,
    }
}

/// Index in the stacked state `[f; σf]` of the 18×18 companion matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    F(usize),
    SigmaF(usize),
}

fn equal_state(k: usize) -> State {
    if k < 9 {
        State::F(k)
    } else {
        State::SigmaF(k - 9)
    }
}

/// Reduced companion matrix for the equal-distortion pencil, together with
/// the retained state indices.
fn equal_reduced_companion(sys: &EqualDistortionSystem) -> Result<(Vec<State>, DenseMatrix)> {
    let nz1 = nonzero_columns(&sys.a1);
    let nz2 = nonzero_columns(&sys.a2);
    debug_assert!(nz2[..8].iter().all(|v| !v), "A2 must vanish outside column 9");
    debug_assert!(
        [0, 1, 3, 4].iter().all(|&j| !nz1[j]),
        "A1 must vanish in columns 1, 2, 4, 5"
    );

    // (A₂ + σA₁ + σ²A₀) f = 0  ⇔  σ [f; g] = [[0, I], [M₂, M₁]] [f; g],
    // g = σf, M₂ = −A₀⁻¹A₂, M₁ = −A₀⁻¹A₁.
    let structure: Vec<Vec<bool>> = (0..18)
        .map(|row| {
            (0..18)
                .map(|col| match (equal_state(row), equal_state(col)) {
                    (State::F(i), State::SigmaF(j)) => i == j,
                    (State::F(_), State::F(_)) => false,
                    (State::SigmaF(_), State::F(j)) => nz2[j],
                    (State::SigmaF(_), State::SigmaF(j)) => nz1[j],
                })
                .collect()
        })
        .collect();
    let retained: Vec<State> = eliminate_zero_columns(&structure)
        .into_iter()
        .map(equal_state)
        .collect();

    let n = sys.a0.nrows();
    let mut rhs = DenseMatrix::zeros(n, retained.len());
    for (k, s) in retained.iter().enumerate() {
        let col = match s {
            State::F(j) => sys.a2.column(*j),
            State::SigmaF(j) => sys.a1.column(*j),
        };
        rhs.set_column(k, &(-col));
    }
    // Column k of `m` is the column of [M₂ | M₁] belonging to retained state k.
    let m = solve_least_squares(&sys.a0, &rhs).map_err(map_degenerate)?;

    let size = retained.len();
    let reduced = DenseMatrix::from_fn(size, size, |r, c| match (retained[r], retained[c]) {
        (State::F(i), State::SigmaF(j)) => f64::from(u8::from(i == j)),
        (State::F(_), State::F(_)) => 0.0,
        (State::SigmaF(i), _) => m[(i, c)],
    });
    Ok((retained, reduced))
}

/// Refined 9-point solver for equal unknown distortion; accepts `N ≥ 9`
/// correspondences (least squares beyond nine).
///
/// Returns at most six `(F, λ)` pairs with `λ` inside the plausible range.
/// `λ = 0` cannot be produced (`σ = 1/λ` is singular there); noiseless
/// pinhole data make `A₀` rank deficient and yield `DegenerateSample`.
pub fn solve_equal_9pt(corrs: &[Correspondence]) -> Result<Vec<(FundamentalMatrix, f64)>> {
    let sys = EqualDistortionSystem::build(corrs)?;
    solve_equal_system(&sys)
}

pub fn solve_equal_system(sys: &EqualDistortionSystem) -> Result<Vec<(FundamentalMatrix, f64)>> {
    let (_, reduced) = equal_reduced_companion(sys)?;
    let mut out = Vec::new();
    for sigma in real_eigenvalues(&reduced)? {
        if sigma.abs() <= SIGMA_EPS {
            continue;
        }
        let lambda = 1.0 / sigma;
        if !is_plausible_lambda(lambda) {
            continue;
        }
        // Same null space as A₂ + σA₁ + σ²A₀, better scaled for |λ| ≤ 2.
        let f = null_vector(&sys.pencil(lambda))?;
        out.push((FundamentalMatrix::from_row_major(f.as_slice()), lambda));
    }
    Ok(out)
}

fn two_reduced_matrix(sys: &TwoDistortionSystem) -> Result<(Vec<usize>, DenseMatrix)> {
    let nz1 = nonzero_columns(&sys.c1);
    debug_assert!(
        (0..12).all(|j| !nz1[j] || [6, 7, 8, 11].contains(&j)),
        "C1 must vanish outside columns 7, 8, 9, 12"
    );
    // σ f̃ = D f̃ with D = −C₀⁻¹C₁; D inherits the zero columns of C₁.
    let structure: Vec<Vec<bool>> = (0..12).map(|_| nz1.clone()).collect();
    let retained = eliminate_zero_columns(&structure);

    let n = sys.c0.nrows();
    let mut rhs = DenseMatrix::zeros(n, retained.len());
    for (k, &j) in retained.iter().enumerate() {
        rhs.set_column(k, &(-sys.c1.column(j)));
    }
    let d = solve_least_squares(&sys.c0, &rhs).map_err(map_degenerate)?;
    let size = retained.len();
    let reduced = DenseMatrix::from_fn(size, size, |r, c| d[(retained[r], c)]);
    Ok((retained, reduced))
}

/// Refined 12-point solver for two different unknown distortions; accepts
/// `N ≥ 12` correspondences.
///
/// Returns at most four `(F, λ₁, λ₂)` triples with both coefficients inside
/// the plausible range. The lifted system has more unknowns than the
/// problem has degrees of freedom, so some real roots are spurious: their
/// `f̃` violates `f̃₁₀:f̃₁₁:f̃₁₂ = f̃₃:f̃₆:f̃₉` and the recovered model does not
/// fit the data. They are returned anyway and left to scoring.
pub fn solve_two_12pt(corrs: &[Correspondence]) -> Result<Vec<(FundamentalMatrix, f64, f64)>> {
    let sys = TwoDistortionSystem::build(corrs)?;
    solve_two_system(&sys)
}

pub fn solve_two_system(sys: &TwoDistortionSystem) -> Result<Vec<(FundamentalMatrix, f64, f64)>> {
    Ok(two_lifted_solutions(sys)?
        .into_iter()
        .filter_map(|(lifted, lambda1)| {
            let lambda2 = lifted.lambda();
            is_plausible_lambda(lambda2).then(|| (lifted.fundamental(), lambda1, lambda2))
        })
        .collect())
}

/// Lifted null vectors `f̃` with their `λ₁` for every finite real root with
/// plausible `λ₁`.
pub fn two_lifted_solutions(
    sys: &TwoDistortionSystem,
) -> Result<Vec<(LiftedFundamentalVector, f64)>> {
    let (_, reduced) = two_reduced_matrix(sys)?;
    let mut out = Vec::new();
    for sigma in real_eigenvalues(&reduced)? {
        if sigma.abs() <= SIGMA_EPS {
            continue;
        }
        let lambda1 = 1.0 / sigma;
        if !is_plausible_lambda(lambda1) {
            continue;
        }
        let v = null_vector(&sys.pencil(lambda1))?;
        let mut lifted = [0.0; 12];
        lifted.copy_from_slice(v.as_slice());
        out.push((LiftedFundamentalVector(lifted), lambda1));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{epipolar_residual_algebraic, FundamentalModel};
    use crate::testutil::scene;
    use nalgebra::Vector2;

    fn f_vector(f: &FundamentalMatrix) -> DVector<f64> {
        DVector::from_row_slice(&f.to_row_major())
    }

    #[test]
    fn equal_system_annihilates_true_model() {
        let lambda = -0.7;
        let s = scene(1, 15, lambda, lambda);
        let sys = EqualDistortionSystem::build(&s.corrs).unwrap();
        let residual = sys.pencil(lambda) * f_vector(&s.f);
        assert!(residual.amax() < 1e-12);
    }

    #[test]
    fn equal_system_sparsity() {
        let s = scene(2, 10, -0.4, -0.4);
        let sys = EqualDistortionSystem::build(&s.corrs).unwrap();
        let nz1 = nonzero_columns(&sys.a1);
        let nz2 = nonzero_columns(&sys.a2);
        assert_eq!(nz1, vec![false, false, true, false, false, true, true, true, true]);
        assert_eq!(nz2, vec![false, false, false, false, false, false, false, false, true]);
        let (retained, reduced) = equal_reduced_companion(&sys).unwrap();
        assert_eq!(
            retained,
            vec![
                State::F(8),
                State::SigmaF(2),
                State::SigmaF(5),
                State::SigmaF(6),
                State::SigmaF(7),
                State::SigmaF(8)
            ]
        );
        assert_eq!(reduced.shape(), (6, 6));
        // f₉ → σf₉ coupling row
        assert_eq!(reduced.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn equal_system_center_correspondence_row() {
        let mut corrs = scene(3, 9, -0.5, -0.5).corrs;
        corrs[0] = Correspondence::new(Vector2::zeros(), Vector2::zeros());
        let sys = EqualDistortionSystem::build(&corrs).unwrap();
        assert!(sys.a1.row(0).iter().all(|v| *v == 0.0));
        assert!(sys.a2.row(0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn equal_system_pinhole_scene() {
        let s = scene(4, 12, 0.0, 0.0);
        let sys = EqualDistortionSystem::build(&s.corrs).unwrap();
        assert!((&sys.a0 * f_vector(&s.f)).amax() < 1e-12);
    }

    fn check_equal_solutions(corrs: &[Correspondence], sols: &[(FundamentalMatrix, f64)]) {
        assert!(sols.len() <= 6);
        for (f, lambda) in sols {
            let model = FundamentalModel::new(*f, *lambda, *lambda);
            for c in corrs {
                assert!(epipolar_residual_algebraic(&model, c).unwrap().abs() < 1e-8);
            }
        }
    }

    #[test]
    fn equal_nine_points_recover_lambda() {
        let s = scene(5, 9, -0.6, -0.6);
        let sols = solve_equal_9pt(&s.corrs).unwrap();
        check_equal_solutions(&s.corrs, &sols);
        assert!(sols
            .iter()
            .any(|(f, l)| (l + 0.6).abs() < 1e-6 && f.distance(&s.f) < 1e-6));
    }

    #[test]
    fn equal_least_squares_path() {
        let s = scene(6, 20, -1.2, -1.2);
        let sols = solve_equal_9pt(&s.corrs).unwrap();
        check_equal_solutions(&s.corrs, &sols);
        assert!(sols.iter().any(|(_, l)| (l + 1.2).abs() < 1e-6));
    }

    #[test]
    fn equal_pinhole_scene_is_handled() {
        let s = scene(7, 9, 0.0, 0.0);
        match solve_equal_9pt(&s.corrs) {
            Err(Error::DegenerateSample) => {}
            Ok(sols) => assert!(sols.is_empty() || sols.iter().any(|(_, l)| l.abs() < 1e-6)),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn equal_solutions_are_permutation_invariant() {
        let s = scene(8, 14, -0.9, -0.9);
        let a = solve_equal_9pt(&s.corrs).unwrap();
        let mut shuffled = s.corrs.clone();
        shuffled.reverse();
        shuffled.swap(0, 5);
        let b = solve_equal_9pt(&shuffled).unwrap();
        assert_eq!(a.len(), b.len());
        for (f, l) in &a {
            assert!(b
                .iter()
                .any(|(g, m)| (l - m).abs() < 1e-9 && f.distance(g) < 1e-9));
        }
    }

    #[test]
    fn two_system_annihilates_true_model() {
        let (l1, l2) = (-0.3, -1.1);
        let s = scene(9, 15, l1, l2);
        let sys = TwoDistortionSystem::build(&s.corrs).unwrap();
        let f = s.f.to_row_major();
        let mut lifted = f.to_vec();
        lifted.extend([l2 * f[2], l2 * f[5], l2 * f[8]]);
        let residual = sys.pencil(l1) * DVector::from_vec(lifted);
        assert!(residual.amax() < 1e-12);
        let nz = nonzero_columns(&sys.c1);
        let expected: Vec<bool> = (0..12).map(|j| [6, 7, 8, 11].contains(&j)).collect();
        assert_eq!(nz, expected);
        let (retained, reduced) = two_reduced_matrix(&sys).unwrap();
        assert_eq!(retained, vec![6, 7, 8, 11]);
        assert_eq!(reduced.shape(), (4, 4));
    }

    /// Every root solves the lifted pencil; roots whose lifted vector is
    /// consistent also satisfy the original constraints.
    fn check_two_solutions(corrs: &[Correspondence]) {
        let sys = TwoDistortionSystem::build(corrs).unwrap();
        let lifted = two_lifted_solutions(&sys).unwrap();
        assert!(lifted.len() <= 4);
        for (v, l1) in &lifted {
            let residual = sys.pencil(*l1) * DVector::from_row_slice(&v.0);
            assert!(residual.amax() < 1e-8);
            let l2 = v.lambda();
            if v.consistency_error(l2) <= 1e-6 {
                let model = FundamentalModel::new(v.fundamental(), *l1, l2);
                for c in corrs {
                    assert!(epipolar_residual_algebraic(&model, c).unwrap().abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn two_twelve_points_recover_lambdas() {
        let s = scene(10, 12, -0.2, -1.0);
        let sols = solve_two_12pt(&s.corrs).unwrap();
        check_two_solutions(&s.corrs);
        assert!(sols.iter().any(|(f, l1, l2)| (l1 + 0.2).abs() < 1e-5
            && (l2 + 1.0).abs() < 1e-5
            && f.distance(&s.f) < 1e-6));
    }

    #[test]
    fn two_solver_subsumes_equal_case() {
        let s = scene(11, 12, -0.9, -0.9);
        let sols = solve_two_12pt(&s.corrs).unwrap();
        assert!(sols
            .iter()
            .any(|(_, l1, l2)| (l1 - l2).abs() < 1e-5 && (l1 + 0.9).abs() < 1e-5));
    }

    #[test]
    fn two_least_squares_path_and_consistency() {
        let s = scene(12, 30, -1.4, -0.5);
        let sols = solve_two_12pt(&s.corrs).unwrap();
        check_two_solutions(&s.corrs);
        assert!(sols
            .iter()
            .any(|(_, l1, l2)| (l1 + 1.4).abs() < 1e-5 && (l2 + 0.5).abs() < 1e-5));
        let sys = TwoDistortionSystem::build(&s.corrs).unwrap();
        assert!(two_lifted_solutions(&sys)
            .unwrap()
            .iter()
            .any(|(v, l1)| (l1 + 1.4).abs() < 1e-5 && v.consistency_error(v.lambda()) <= 1e-6));
    }

    #[test]
    fn too_few_points_are_rejected() {
        let s = scene(13, 11, -0.5, -0.5);
        assert!(matches!(
            solve_two_12pt(&s.corrs),
            Err(Error::InsufficientCorrespondences { needed: 12, got: 11 })
        ));
        assert!(matches!(
            solve_equal_9pt(&s.corrs[..8]),
            Err(Error::InsufficientCorrespondences { needed: 9, got: 8 })
        ));
    }
}
