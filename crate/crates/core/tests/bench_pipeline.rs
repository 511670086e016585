use std::fs;
use std::path::Path;

use radpose::bench::{
    cmd_bench, cmd_sweep, cmd_synth, load_dataset, read_records, summarize, BenchOptions, CliError,
};
use radpose::eval::{mean, median, pose_auc, AUC_THRESHOLDS};
use serde_json::Value;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const SCENARIO_B: &str = r#"{"pairs": 100, "scene": {"n_points": 40, "noise_sigma_px": 0.5,
    "outlier_fraction": 0.2, "lambda_mode": {"kind": "scenario_b"}, "equal_lambdas": false, "seed": 17}}"#;

#[test]
fn synth_round_trips_and_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "synth.json", SCENARIO_B);
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    assert_eq!(cmd_synth(&cfg, &a).unwrap(), 100);
    cmd_synth(&cfg, &b).unwrap();
    let text = fs::read(&a).unwrap();
    assert_eq!(text, fs::read(&b).unwrap());
    assert_eq!(String::from_utf8(text).unwrap().lines().count(), 100);

    let pairs = load_dataset(&a).unwrap();
    let again = dir.path().join("c.jsonl");
    let mut buf = Vec::new();
    radpose::bench::write_dataset(&mut buf, &pairs).unwrap();
    fs::write(&again, &buf).unwrap();
    assert_eq!(load_dataset(&again).unwrap(), pairs);
    assert!(pairs.iter().any(|p| p.pair.lambda1 != p.pair.lambda2));
}

#[test]
fn invalid_outlier_fraction_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"pairs": 3, "scene": {"outlier_fraction": 1.5}}"#);
    let err = cmd_synth(&cfg, &dir.path().join("out.jsonl")).unwrap_err();
    assert!(matches!(&err, CliError::Config(m) if m.contains("outlier_fraction")), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn missing_and_malformed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let err = cmd_bench(&dir.path().join("none.jsonl"), None, &out, &BenchOptions::default()).unwrap_err();
    assert_eq!(err.exit_code(), 2);

    let data = write(dir.path(), "d.jsonl", "{\"pair_id\": 0}\n");
    let err = cmd_bench(&data, None, &out, &BenchOptions::default()).unwrap_err();
    assert!(matches!(err, CliError::Parse(_)), "{err}");
}

#[test]
fn empty_methods_list_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", r#"{"pairs": 2, "scene": {"seed": 1}}"#);
    let data = dir.path().join("d.jsonl");
    cmd_synth(&cfg, &data).unwrap();
    let methods = write(dir.path(), "m.json", "[]");
    let err = cmd_bench(&data, Some(&methods), &dir.path().join("r.csv"), &BenchOptions::default()).unwrap_err();
    assert!(matches!(err, CliError::Parse(_)), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn noiseless_pinhole_pipeline_is_exact_and_aggregates_recompute() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", r#"{"pairs": 12, "scene": {"n_points": 60, "seed": 4}}"#);
    let data = dir.path().join("d.jsonl");
    cmd_synth(&cfg, &data).unwrap();
    let methods = write(
        dir.path(),
        "m.json",
        r#"[{"name": "7pt{0}", "track": "pinhole7pt", "grid": {"u1": [0.0], "u2": [0.0], "shared": true}, "lo": false},
            {"name": "7pt{0}+9pt", "track": "equal9pt", "grid": {"u1": [0.0], "u2": [0.0], "shared": true}, "lo": true}]"#,
    );
    let out = dir.path().join("r.csv");
    let opts = BenchOptions {
        max_iterations: 500,
        ..BenchOptions::default()
    };
    let summaries = cmd_bench(&data, Some(&methods), &out, &opts).unwrap();
    assert!(summaries[0].auc[0] > 0.99, "{:?}", summaries[0].auc);

    let text = fs::read_to_string(&out).unwrap();
    assert!(!text.contains(",,"));
    let records = read_records(text.as_bytes()).unwrap();
    assert_eq!(records.len(), 24);
    let json: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    let names = vec!["7pt{0}".to_string(), "7pt{0}+9pt".to_string()];
    for (k, s) in summarize(&records, &names).iter().enumerate() {
        let rs: Vec<_> = records.iter().filter(|r| r.method == s.method).collect();
        let pose: Vec<f64> = rs.iter().map(|r| r.pose_err).collect();
        let lam: Vec<f64> = rs.iter().map(|r| r.lambda_err).collect();
        let j = &json["methods"][k];
        let num = |key: &str| j[key].as_f64().unwrap();
        assert!((num("pose_err_avg_deg") - mean(&pose)).abs() < 1e-9);
        assert!((num("pose_err_med_deg") - median(&pose)).abs() < 1e-9);
        assert!((num("lambda_err_avg") - mean(&lam)).abs() < 1e-9);
        assert!((num("lambda_err_med") - median(&lam)).abs() < 1e-9);
        let auc = pose_auc(&pose, &AUC_THRESHOLDS).unwrap();
        for (key, v) in ["auc5", "auc10", "auc20"].iter().zip(auc) {
            assert!((num(key) - v).abs() < 1e-9);
        }
    }
}

#[test]
fn sweep_rows_and_pinned_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.json",
        r#"{"pairs_per_level": 4, "levels": [0.0, -0.9, -1.8], "seed": 2,
            "scene": {"n_points": 80, "noise_sigma_px": 0.5}, "ransac": {"max_iterations": 300}}"#,
    );
    let out = dir.path().join("sweep.csv");
    let rows = cmd_sweep(&cfg, &out, Some(2)).unwrap();
    assert_eq!(rows.len(), 3 * 2);
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 1 + 6);

    let pinned = rows.iter().find(|r| r.level == -1.8 && r.method == "7pt{0}").unwrap();
    assert_eq!(pinned.lambda_est.median, 0.0);
    for r in rows.iter().filter(|r| r.level == 0.0) {
        assert!(r.lambda_est.median.abs() < 0.02, "{}: {}", r.method, r.lambda_est.median);
    }
}
