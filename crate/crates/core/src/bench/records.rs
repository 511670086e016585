//! Per-run benchmark records, their CSV form and per-method summaries.
//!
//! CSV columns, in order:
//!
//! `pair_id, method, rot_err_deg, trans_err_deg, pose_err_deg, lambda_err,
//! lambda1_est, lambda2_est, inliers, inlier_recall, iterations,
//! solver_invocations, wall_time_s`
//!
//! A failed estimate has `inf` in every error and λ column. Numbers use the
//! shortest decimal form that parses back to the same `f64`.

use std::io::{Read, Write};

use serde_json::{json, Value};

use crate::eval::{mean, median, pose_auc, AUC_THRESHOLDS};

use super::CliError;

pub const CSV_HEADER: [&str; 13] = [
    "pair_id",
    "method",
    "rot_err_deg",
    "trans_err_deg",
    "pose_err_deg",
    "lambda_err",
    "lambda1_est",
    "lambda2_est",
    "inliers",
    "inlier_recall",
    "iterations",
    "solver_invocations",
    "wall_time_s",
];

/// Index of the wall-time column, the only nondeterministic one.
pub const WALL_TIME_COLUMN: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub pair_id: u64,
    pub method: String,
    pub rot_err: f64,
    pub trans_err: f64,
    pub pose_err: f64,
    pub lambda_err: f64,
    pub lambda1_est: f64,
    pub lambda2_est: f64,
    pub inliers: usize,
    /// Fraction of ground-truth inliers the estimate classifies as inliers.
    pub inlier_recall: f64,
    pub iterations: usize,
    pub solver_invocations: usize,
    pub wall_time_s: f64,
}

impl BenchRecord {
    pub fn failed(&self) -> bool {
        !self.pose_err.is_finite()
    }
}

/// Finite values in shortest round-trip form, anything else as `inf`.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "inf".to_string()
    }
}

fn parse_number(s: &str, column: &str) -> Result<f64, CliError> {
    s.parse::<f64>()
        .map_err(|_| CliError::Parse(format!("column {column}: bad number {s:?}")))
}

fn parse_count(s: &str, column: &str) -> Result<usize, CliError> {
    s.parse::<usize>()
        .map_err(|_| CliError::Parse(format!("column {column}: bad count {s:?}")))
}

pub fn write_records<W: Write>(out: W, records: &[BenchRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(CliError::csv)?;
    for r in records {
        w.write_record([
            r.pair_id.to_string(),
            r.method.clone(),
            format_number(r.rot_err),
            format_number(r.trans_err),
            format_number(r.pose_err),
            format_number(r.lambda_err),
            format_number(r.lambda1_est),
            format_number(r.lambda2_est),
            r.inliers.to_string(),
            format_number(r.inlier_recall),
            r.iterations.to_string(),
            r.solver_invocations.to_string(),
            format_number(r.wall_time_s),
        ])
        .map_err(CliError::csv)?;
    }
    w.flush().map_err(CliError::io)
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<BenchRecord>, CliError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(CliError::csv)?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(CliError::Parse("unexpected CSV header".into()));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(CliError::csv)?;
        let f = |i: usize| parse_number(&row[i], CSV_HEADER[i]);
        let n = |i: usize| parse_count(&row[i], CSV_HEADER[i]);
        out.push(BenchRecord {
            pair_id: row[0]
                .parse()
                .map_err(|_| CliError::Parse(format!("bad pair_id {:?}", &row[0])))?,
            method: row[1].to_string(),
            rot_err: f(2)?,
            trans_err: f(3)?,
            pose_err: f(4)?,
            lambda_err: f(5)?,
            lambda1_est: f(6)?,
            lambda2_est: f(7)?,
            inliers: n(8)?,
            inlier_recall: f(9)?,
            iterations: n(10)?,
            solver_invocations: n(11)?,
            wall_time_s: f(12)?,
        });
    }
    Ok(out)
}

/// Per-method statistics derived from the records.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    pub count: usize,
    pub failures: usize,
    pub pose_err_avg: f64,
    pub pose_err_med: f64,
    pub rot_err_avg: f64,
    pub rot_err_med: f64,
    pub trans_err_avg: f64,
    pub trans_err_med: f64,
    pub lambda_err_avg: f64,
    pub lambda_err_med: f64,
    /// Pose-error AUC at 5°, 10°, 20°.
    pub auc: [f64; 3],
    pub wall_time_avg_s: f64,
}

impl MethodSummary {
    pub fn from_records(method: &str, records: &[&BenchRecord]) -> Option<Self> {
        if records.is_empty() {
            return None;
        }
        let col = |f: fn(&BenchRecord) -> f64| records.iter().map(|r| f(r)).collect::<Vec<_>>();
        let pose = col(|r| r.pose_err);
        let rot = col(|r| r.rot_err);
        let trans = col(|r| r.trans_err);
        let lam = col(|r| r.lambda_err);
        let auc = pose_auc(&pose, &AUC_THRESHOLDS).ok()?;
        Some(Self {
            method: method.to_string(),
            count: records.len(),
            failures: records.iter().filter(|r| r.failed()).count(),
            pose_err_avg: mean(&pose),
            pose_err_med: median(&pose),
            rot_err_avg: mean(&rot),
            rot_err_med: median(&rot),
            trans_err_avg: mean(&trans),
            trans_err_med: median(&trans),
            lambda_err_avg: mean(&lam),
            lambda_err_med: median(&lam),
            auc: [auc[0], auc[1], auc[2]],
            wall_time_avg_s: mean(&col(|r| r.wall_time_s)),
        })
    }

    pub fn to_json(&self) -> Value {
        let n = |v: f64| if v.is_finite() { json!(v) } else { json!("inf") };
        json!({
            "method": self.method,
            "count": self.count,
            "failures": self.failures,
            "pose_err_avg_deg": n(self.pose_err_avg),
            "pose_err_med_deg": n(self.pose_err_med),
            "rot_err_avg_deg": n(self.rot_err_avg),
            "rot_err_med_deg": n(self.rot_err_med),
            "trans_err_avg_deg": n(self.trans_err_avg),
            "trans_err_med_deg": n(self.trans_err_med),
            "lambda_err_avg": n(self.lambda_err_avg),
            "lambda_err_med": n(self.lambda_err_med),
            "auc5": n(self.auc[0]),
            "auc10": n(self.auc[1]),
            "auc20": n(self.auc[2]),
            "wall_time_avg_s": n(self.wall_time_avg_s),
        })
    }
}

/// One summary per method, in first-appearance order of `methods`.
pub fn summarize(records: &[BenchRecord], methods: &[String]) -> Vec<MethodSummary> {
    methods
        .iter()
        .filter_map(|m| {
            let rs: Vec<&BenchRecord> = records.iter().filter(|r| &r.method == m).collect();
            MethodSummary::from_records(m, &rs)
        })
        .collect()
}

pub fn summaries_json(summaries: &[MethodSummary]) -> Value {
    json!({ "methods": summaries.iter().map(MethodSummary::to_json).collect::<Vec<_>>() })
}
