//! Line-delimited JSON datasets: one generated pair per line.
//!
//! ```text
//! {"pair_id":0,"k1":[[..],[..],[..]],"k2":..,"r":..,"t":[..],
//!  "lambda1":-0.9,"lambda2":-0.9,"corrs":[[x1,y1,x2,y2],..],"inlier_truth":[..]}
//! ```
//!
//! Floats are written in their shortest round-trip decimal form, so parsing
//! a serialized pair reproduces every coordinate bit for bit.

use std::io::{BufRead, Write};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::eval::{CameraIntrinsics, RelativePose};
use crate::geometry::Correspondence;
use crate::synth::GroundTruthPair;

use super::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub pair_id: u64,
    pub k1: CameraIntrinsics,
    pub k2: CameraIntrinsics,
    pub r: [[f64; 3]; 3],
    pub t: [f64; 3],
    pub lambda1: f64,
    pub lambda2: f64,
    pub corrs: Vec<[f64; 4]>,
    pub inlier_truth: Vec<bool>,
}

/// A dataset entry: pair id plus the generated pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetPair {
    pub pair_id: u64,
    pub pair: GroundTruthPair,
}

impl From<&DatasetPair> for DatasetRecord {
    fn from(p: &DatasetPair) -> Self {
        let g = &p.pair;
        Self {
            pair_id: p.pair_id,
            k1: g.k1,
            k2: g.k2,
            r: std::array::from_fn(|i| std::array::from_fn(|j| g.pose.r[(i, j)])),
            t: [g.pose.t.x, g.pose.t.y, g.pose.t.z],
            lambda1: g.lambda1,
            lambda2: g.lambda2,
            corrs: g.corrs.iter().map(Correspondence::to_array).collect(),
            inlier_truth: g.inlier_truth.clone(),
        }
    }
}

impl TryFrom<DatasetRecord> for DatasetPair {
    type Error = String;

    fn try_from(rec: DatasetRecord) -> Result<Self, String> {
        if rec.corrs.len() != rec.inlier_truth.len() {
            return Err(format!(
                "pair {}: {} correspondences but {} inlier flags",
                rec.pair_id,
                rec.corrs.len(),
                rec.inlier_truth.len()
            ));
        }
        let corrs: Vec<Correspondence> = rec.corrs.iter().map(|c| Correspondence::from_array(*c)).collect();
        if !corrs.iter().all(Correspondence::is_finite) {
            return Err(format!("pair {}: non-finite coordinate", rec.pair_id));
        }
        Ok(Self {
            pair_id: rec.pair_id,
            pair: GroundTruthPair {
                corrs,
                pose: RelativePose {
                    r: Matrix3::from_fn(|i, j| rec.r[i][j]),
                    t: Vector3::from(rec.t),
                },
                lambda1: rec.lambda1,
                lambda2: rec.lambda2,
                inlier_truth: rec.inlier_truth,
                k1: rec.k1,
                k2: rec.k2,
            },
        })
    }
}

pub fn write_dataset<W: Write>(mut out: W, pairs: &[DatasetPair]) -> Result<(), CliError> {
    for p in pairs {
        let line = serde_json::to_string(&DatasetRecord::from(p)).map_err(|e| CliError::Numerical(e.to_string()))?;
        writeln!(out, "{line}").map_err(CliError::io)?;
    }
    out.flush().map_err(CliError::io)
}

/// Parses a dataset; blank lines are skipped.
pub fn read_dataset<R: BufRead>(input: R) -> Result<Vec<DatasetPair>, CliError> {
    let mut pairs = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line.map_err(CliError::io)?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DatasetRecord =
            serde_json::from_str(&line).map_err(|e| CliError::Parse(format!("dataset line {}: {e}", lineno + 1)))?;
        pairs.push(DatasetPair::try_from(rec).map_err(|e| CliError::Parse(format!("dataset line {}: {e}", lineno + 1)))?);
    }
    Ok(pairs)
}
