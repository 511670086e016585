//! Two-view relative pose estimation for radially distorted cameras.
//!
//! The crate combines a λ-sampling RANSAC (the pinhole 7-point solver run
//! once per fixed undistortion value) with non-minimal polynomial-eigenvalue
//! solvers for the one-parameter division model, plus the synthetic scene
//! generator, pose metrics and benchmark drivers used to compare them.
//!
//! Module map:
//!
//! - [`geometry`]: image points, division model, epipolar residuals
//! - [`numerics`]: SVD, real eigenvalues, least squares, cubic roots
//! - [`minimal`]: pinhole 7-point and linear 8-point solvers
//! - [`distortion`]: 9-point equal-distortion and 12-point two-distortion solvers
//! - [`refine`]: weighted algebraic refinement of the undistortion coefficients
//! - [`ransac`]: λ-sampling RANSAC with non-minimal local optimization
//! - [`eval`]: pose recovery and error metrics
//! - [`synth`]: synthetic two-view scenes
//! - [`bench`]: dataset I/O and the `synth`/`bench`/`sweep` drivers

pub mod bench;
pub mod distortion;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod minimal;
pub mod numerics;
pub mod ransac;
pub mod refine;
pub mod synth;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use geometry::{
    distort, normalize_point, undistort, Correspondence, FundamentalMatrix, FundamentalModel,
    ImagePoint,
};
pub use ransac::{run_ransac, Estimate, RansacConfig, SampleGrid};
