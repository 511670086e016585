//! Robustness sweep over increasing equal distortion.
//!
//! For every level λ the same scene seeds are regenerated with both images
//! distorted by λ, and every method is run on every pair. Each output row
//! holds quartiles and the mean of the estimated λ, the distortion error and
//! the pose error for one (level, method) cell. Failed estimates count as
//! `inf`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eval::mean;
use crate::ransac::SampleGrid;
use crate::synth::{sweep_levels, SceneConfig};

use super::methods::validate_methods;
use super::records::format_number;
use super::{bench_pairs, level_pairs, read_json, BenchOptions, CliError, MethodSpec, SolverTrack};

pub const SWEEP_HEADER: [&str; 16] = [
    "level",
    "method",
    "pairs",
    "failures",
    "lambda_est_q1",
    "lambda_est_med",
    "lambda_est_q3",
    "lambda_est_mean",
    "lambda_err_q1",
    "lambda_err_med",
    "lambda_err_q3",
    "lambda_err_mean",
    "pose_err_q1",
    "pose_err_med",
    "pose_err_q3",
    "pose_err_mean",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub pairs_per_level: usize,
    pub levels: Vec<f64>,
    /// Seed of the scene sequence; the same scenes are reused at every level.
    pub seed: u64,
    /// Scene parameters; the distortion fields are overridden per level.
    pub scene: SceneConfig,
    pub ransac: BenchOptions,
    pub methods: Vec<MethodSpec>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            pairs_per_level: 50,
            levels: sweep_levels(),
            seed: 0,
            scene: SceneConfig::default(),
            ransac: BenchOptions::default(),
            methods: default_sweep_methods(),
        }
    }
}

/// Pinhole baseline against three-value sampling with 9-point refinement.
pub fn default_sweep_methods() -> Vec<MethodSpec> {
    vec![
        MethodSpec {
            name: "7pt{0}".into(),
            track: SolverTrack::Equal9pt,
            grid: SampleGrid::shared(&[0.0]),
            lo: false,
        },
        MethodSpec {
            name: "7pt{0,-0.6,-1.2}+9pt".into(),
            track: SolverTrack::Equal9pt,
            grid: SampleGrid::shared(&[0.0, -0.6, -1.2]),
            lo: true,
        },
    ]
}

/// Quartiles and mean of one quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distribution {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub mean: f64,
}

impl Distribution {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            mean: mean(&v),
        }
    }
}

/// Linearly interpolated quantile of sorted data (`h = (n − 1) p`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || sorted[lo] == sorted[lo + 1] {
        return sorted[lo];
    }
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub level: f64,
    pub method: String,
    pub pairs: usize,
    pub failures: usize,
    /// Estimated λ of image 1.
    pub lambda_est: Distribution,
    pub lambda_err: Distribution,
    pub pose_err: Distribution,
}

impl SweepRow {
    fn fields(&self) -> Vec<String> {
        let mut out = vec![
            format_number(self.level),
            self.method.clone(),
            self.pairs.to_string(),
            self.failures.to_string(),
        ];
        for d in [&self.lambda_est, &self.lambda_err, &self.pose_err] {
            out.extend([d.q1, d.median, d.q3, d.mean].map(format_number));
        }
        out
    }
}

/// Rows in level order, methods in configuration order within each level.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>, CliError> {
    if cfg.pairs_per_level == 0 {
        return Err(CliError::Config("pairs_per_level: must be positive".into()));
    }
    if cfg.levels.is_empty() {
        return Err(CliError::Config("levels: must not be empty".into()));
    }
    validate_methods(&cfg.methods)?;
    let mut rows = Vec::new();
    for &level in &cfg.levels {
        let pairs = level_pairs(&cfg.scene, level, cfg.pairs_per_level, cfg.seed)?;
        let records = bench_pairs(&pairs, &cfg.methods, &cfg.ransac)?;
        for m in &cfg.methods {
            let rs: Vec<_> = records.iter().filter(|r| r.method == m.name).collect();
            let col = |f: fn(&super::BenchRecord) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<_>>();
            rows.push(SweepRow {
                level,
                method: m.name.clone(),
                pairs: rs.len(),
                failures: rs.iter().filter(|r| r.failed()).count(),
                lambda_est: Distribution::of(&col(|r| r.lambda1_est)),
                lambda_err: Distribution::of(&col(|r| r.lambda_err)),
                pose_err: Distribution::of(&col(|r| r.pose_err)),
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep<W: std::io::Write>(out: W, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER).map_err(CliError::csv)?;
    for r in rows {
        w.write_record(r.fields()).map_err(CliError::csv)?;
    }
    w.flush().map_err(CliError::io)
}

/// Reads a [`SweepConfig`] from `config`, runs it with `jobs` threads and
/// writes the CSV to `out`.
pub fn cmd_sweep(config: &Path, out: &Path, jobs: Option<usize>) -> Result<Vec<SweepRow>, CliError> {
    let mut cfg: SweepConfig = read_json(config)?;
    if let Some(jobs) = jobs {
        cfg.ransac.jobs = jobs;
    }
    let rows = run_sweep(&cfg)?;
    let file = std::fs::File::create(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    write_sweep(std::io::BufWriter::new(file), &rows)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 0.75), 3.25);
        assert_eq!(quantile(&[7.0], 0.25), 7.0);
        let with_inf = [1.0, f64::INFINITY, f64::INFINITY];
        assert_eq!(quantile(&with_inf, 0.75), f64::INFINITY);
        assert_eq!(quantile(&with_inf, 0.25), f64::INFINITY);
        assert_eq!(quantile(&[1.0, 2.0, f64::INFINITY], 0.5), 2.0);
    }

    #[test]
    fn small_sweep_shape() {
        let cfg = SweepConfig {
            pairs_per_level: 3,
            levels: vec![0.0, -0.9],
            scene: SceneConfig {
                n_points: 50,
                ..SceneConfig::default()
            },
            ransac: BenchOptions {
                max_iterations: 200,
                ..BenchOptions::default()
            },
            ..SweepConfig::default()
        };
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        // Without LO the grid pins λ.
        let pinned = rows.iter().find(|r| r.level == -0.9 && r.method == "7pt{0}").unwrap();
        assert_eq!(pinned.lambda_est.median, 0.0);
        let mut buf = Vec::new();
        write_sweep(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }

    #[test]
    fn config_defaults() {
        let cfg: SweepConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, SweepConfig::default());
        assert!(serde_json::from_str::<SweepConfig>(r#"{"pairs": 3}"#).is_err());
    }
}
