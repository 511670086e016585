//! Dataset I/O and the `synth`, `bench` and `sweep` drivers.
//!
//! Each driver is a plain function so it can be called from tests and
//! examples as well as from the command-line binary. Errors map to process
//! exit codes through [`CliError::exit_code`].

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::eval::evaluate_model;
use crate::ransac::{run_ransac, RansacConfig};
use crate::synth::{generate_pair, pair_seed, LambdaMode, SceneConfig};

pub mod dataset;
pub mod methods;
pub mod records;
pub mod sweep;

pub use dataset::{read_dataset, write_dataset, DatasetPair, DatasetRecord};
pub use methods::{default_methods, parse_methods, MethodSpec, SolverTrack};
pub use records::{read_records, summarize, write_records, BenchRecord, MethodSummary};
pub use sweep::{cmd_sweep, run_sweep, SweepConfig, SweepRow};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("I/O error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 2,
            CliError::Parse(_) | CliError::Config(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub(crate) fn io(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }

    pub(crate) fn csv(e: csv::Error) -> Self {
        if e.is_io_error() {
            CliError::Io(e.to_string())
        } else {
            CliError::Parse(e.to_string())
        }
    }

    fn at(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
        move |e| CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig { field, reason } => CliError::Config(format!("{field}: {reason}")),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::at(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(CliError::at(path))?))
}

pub(crate) fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    if jobs == 0 {
        return Err(CliError::Config("jobs: must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("jobs: {e}")))
}

/// Configuration file of the `synth` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub pairs: usize,
    #[serde(default)]
    pub scene: SceneConfig,
}

/// Generates the pairs of a dataset; pair `i` uses seed `pair_seed(scene.seed, i)`.
pub fn synth_pairs(cfg: &SynthConfig, jobs: usize) -> Result<Vec<DatasetPair>, CliError> {
    cfg.scene.validate()?;
    let pool = thread_pool(jobs)?;
    let pairs: Result<Vec<_>, Error> = pool.install(|| {
        (0..cfg.pairs as u64)
            .into_par_iter()
            .map(|i| {
                generate_pair(&cfg.scene.for_pair(i)).map(|pair| DatasetPair { pair_id: i, pair })
            })
            .collect()
    });
    Ok(pairs?)
}

/// Writes a line-delimited dataset generated from the config at `config`.
pub fn cmd_synth(config: &Path, out: &Path) -> Result<usize, CliError> {
    let cfg: SynthConfig = read_json(config)?;
    let pairs = synth_pairs(&cfg, 1)?;
    write_dataset(create(out)?, &pairs)?;
    Ok(pairs.len())
}

pub fn load_dataset(path: &Path) -> Result<Vec<DatasetPair>, CliError> {
    read_dataset(BufReader::new(File::open(path).map_err(CliError::at(path))?))
}

/// RANSAC settings shared by all methods of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchOptions {
    pub seed: u64,
    pub threshold_px: f64,
    pub nominal_longer_side: f64,
    pub confidence: f64,
    pub max_iterations: usize,
    pub min_iterations: usize,
    pub lo_rounds: usize,
    pub jobs: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        let r = RansacConfig::default();
        Self {
            seed: 0,
            threshold_px: r.threshold_px,
            nominal_longer_side: r.nominal_longer_side,
            confidence: r.confidence,
            max_iterations: r.max_iterations,
            min_iterations: r.min_iterations,
            lo_rounds: r.lo_rounds,
            jobs: 1,
        }
    }
}

impl BenchOptions {
    /// RANSAC configuration of `method` on pair `pair_id`.
    pub fn ransac_config(&self, method: &MethodSpec, pair_id: u64) -> RansacConfig {
        RansacConfig {
            threshold_px: self.threshold_px,
            nominal_longer_side: self.nominal_longer_side,
            confidence: self.confidence,
            max_iterations: self.max_iterations,
            min_iterations: self.min_iterations.min(self.max_iterations),
            lo_enabled: method.lo,
            lo_rounds: self.lo_rounds,
            seed: pair_seed(self.seed, pair_id),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.jobs == 0 {
            return Err(CliError::Config("jobs: must be at least 1".into()));
        }
        let probe = MethodSpec {
            name: String::new(),
            track: SolverTrack::Pinhole7pt,
            grid: crate::ransac::SampleGrid::shared(&[0.0]),
            lo: false,
        };
        self.ransac_config(&probe, 0).validate()?;
        Ok(())
    }
}

/// Runs one method on one pair. Estimation or pose-recovery failures give a
/// record with infinite errors.
pub fn run_method(pair: &DatasetPair, method: &MethodSpec, opts: &BenchOptions) -> BenchRecord {
    let cfg = opts.ransac_config(method, pair.pair_id);
    let g = &pair.pair;
    let start = Instant::now();
    let estimate = run_ransac(&g.corrs, &method.grid, &cfg);
    let wall_time_s = start.elapsed().as_secs_f64();

    let mut rec = BenchRecord {
        pair_id: pair.pair_id,
        method: method.name.clone(),
        rot_err: f64::INFINITY,
        trans_err: f64::INFINITY,
        pose_err: f64::INFINITY,
        lambda_err: f64::INFINITY,
        lambda1_est: f64::INFINITY,
        lambda2_est: f64::INFINITY,
        inliers: 0,
        inlier_recall: 0.0,
        iterations: 0,
        solver_invocations: 0,
        wall_time_s,
    };
    let Ok(est) = estimate else {
        return rec;
    };
    rec.inliers = est.inlier_count();
    rec.iterations = est.iterations_used;
    rec.solver_invocations = est.solver_invocations;
    let truth = g.inlier_truth.iter().filter(|t| **t).count();
    let found = g
        .inlier_truth
        .iter()
        .zip(&est.inlier_mask)
        .filter(|(t, m)| **t && **m)
        .count();
    rec.inlier_recall = if truth == 0 { 0.0 } else { found as f64 / truth as f64 };
    if let Ok(report) = evaluate_model(&est.model, &g.corrs, &est.inlier_mask, &g.ground_truth()) {
        rec.rot_err = report.rot_err;
        rec.trans_err = report.trans_err;
        rec.pose_err = report.pose_err;
        rec.lambda_err = report.lambda_err;
        rec.lambda1_est = est.model.lambda1;
        rec.lambda2_est = est.model.lambda2;
    }
    rec
}

/// Every method on every pair, sorted by pair id and then by method order.
pub fn bench_pairs(
    pairs: &[DatasetPair],
    methods: &[MethodSpec],
    opts: &BenchOptions,
) -> Result<Vec<BenchRecord>, CliError> {
    methods::validate_methods(methods)?;
    opts.validate()?;
    let pool = thread_pool(opts.jobs)?;
    let tasks: Vec<(usize, usize)> = (0..pairs.len())
        .flat_map(|p| (0..methods.len()).map(move |m| (p, m)))
        .collect();
    let mut out: Vec<((u64, usize), BenchRecord)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(p, m)| ((pairs[p].pair_id, m), run_method(&pairs[p], &methods[m], opts)))
            .collect()
    });
    out.sort_by_key(|(key, _)| *key);
    Ok(out.into_iter().map(|(_, r)| r).collect())
}

/// Path of the aggregate JSON written next to the CSV at `out`.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

/// Runs the methods over the dataset, writes the per-record CSV to `out` and
/// the per-method aggregate to [`summary_path`]`(out)`. Uses the bundled
/// method matrix when `methods` is `None`.
pub fn cmd_bench(
    dataset: &Path,
    methods: Option<&Path>,
    out: &Path,
    opts: &BenchOptions,
) -> Result<Vec<MethodSummary>, CliError> {
    if summary_path(out) == out {
        return Err(CliError::Config("out: CSV path must not end in .json".into()));
    }
    let methods = match methods {
        Some(path) => parse_methods(&std::fs::read_to_string(path).map_err(CliError::at(path))?)?,
        None => default_methods(),
    };
    let pairs = load_dataset(dataset)?;
    let records = bench_pairs(&pairs, &methods, opts)?;
    write_records(create(out)?, &records)?;
    let names: Vec<String> = methods.iter().map(|m| m.name.clone()).collect();
    let summaries = summarize(&records, &names);
    let json = serde_json::to_string_pretty(&records::summaries_json(&summaries))
        .map_err(|e| CliError::Numerical(e.to_string()))?;
    let json_path = summary_path(out);
    std::fs::write(&json_path, json + "\n").map_err(CliError::at(&json_path))?;
    Ok(summaries)
}

/// Dataset of equal-distortion pairs at a fixed λ, used by the sweep.
pub(crate) fn level_pairs(
    scene: &SceneConfig,
    level: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<DatasetPair>, CliError> {
    let scene = SceneConfig {
        lambda_mode: LambdaMode::Fixed {
            lambda1: level,
            lambda2: level,
        },
        equal_lambdas: true,
        ..scene.clone()
    };
    scene.validate()?;
    (0..count as u64)
        .map(|i| {
            let cfg = SceneConfig {
                seed: pair_seed(seed, i),
                ..scene.clone()
            };
            Ok(DatasetPair {
                pair_id: i,
                pair: generate_pair(&cfg)?,
            })
        })
        .collect()
}
