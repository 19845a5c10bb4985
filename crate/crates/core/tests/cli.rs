use std::path::Path;
use std::process::{Command, Output};

use cliquewatch::cli::{manifest_path, RunManifest};
use cliquewatch::simulator::{AnomalySpec, SimulationConfig, Visibility};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cliquewatch"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn config(events: usize) -> SimulationConfig {
    SimulationConfig {
        nodes: 10,
        components: 2,
        timestamps: 40,
        train_windows: 25,
        events_per_timestamp: events,
        sigma_g: 0.05,
        sigma_x: Visibility::Constant(0.2),
        dirichlet_mixing: false,
        layout_seed: 1,
        seed: 2,
        anomaly: Some(AnomalySpec {
            node: 4,
            intervals: vec![[30, 34]],
            visibility_multipliers: vec![0.4],
            count_multipliers: vec![1.0],
        }),
    }
}

/// Simulated run directory with a model trained on its training part.
fn prepared(events: usize) -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("sim.toml"), config(events).to_toml()).unwrap();
    ok(tmp.path(), &["simulate", "--config", "sim.toml", "--out", "sim"]);
    ok(
        tmp.path(),
        &["train", "--stream", "sim/train.jsonl", "--forest-size", "5", "--out", "model.cbor"],
    );
    tmp
}

fn manifest(path: &Path) -> RunManifest {
    RunManifest::read(path).unwrap()
}

#[test]
fn unknown_preset_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(tmp.path(), &["simulate", "--preset", "E9", "--out", "x"])), 2);
}

#[test]
fn simulate_is_deterministic_and_complete() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("sim.toml"), config(30).to_toml()).unwrap();
    ok(tmp.path(), &["simulate", "--config", "sim.toml", "--seed", "5", "--out", "a"]);
    ok(tmp.path(), &["simulate", "--config", "sim.toml", "--seed", "5", "--out", "b"]);
    for f in ["stream.jsonl", "train.jsonl", "test.jsonl", "labels.csv", "locations.csv", "oracle.jsonl"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let stream = std::fs::read_to_string(tmp.path().join("a/stream.jsonl")).unwrap();
    assert_eq!(stream.lines().count(), 1 + 40 * 30);
    let m = manifest(&tmp.path().join("a/manifest.json"));
    assert_eq!(m.command, "simulate");
    assert_eq!(m.seeds["seed"], 5);
    assert_eq!(m.outputs.len(), 7);
}

#[test]
fn missing_input_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["train", "--stream", "absent.jsonl", "--out", "m.cbor"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.jsonl"));
}

#[test]
fn empty_stream_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("empty.jsonl"), "{\"N\": 4}\n").unwrap();
    assert_eq!(code(&run(tmp.path(), &["train", "--stream", "empty.jsonl", "--out", "m.cbor"])), 1);
}

#[test]
fn kernel_bandwidth_is_recorded() {
    let tmp = prepared(20);
    ok(
        tmp.path(),
        &["train", "--stream", "sim/train.jsonl", "--method", "kernel", "--bandwidth", "2.0", "--out", "k.cbor"],
    );
    let m = manifest(&manifest_path(&tmp.path().join("k.cbor")));
    assert_eq!(m.config["regressor"]["method"], "kernel");
    assert_eq!(m.config["regressor"]["bandwidth"], 2.0);
    assert_eq!(m.config["windows"]["window_length_source"], "header");
}

#[test]
fn detect_writes_scores_and_bands() {
    let tmp = prepared(100);
    ok(
        tmp.path(),
        &["detect", "--model", "model.cbor", "--stream", "sim/test.jsonl", "--delta", "0.01", "--nodes", "3", "--out", "s.csv"],
    );
    let scores = std::fs::read_to_string(tmp.path().join("s.csv")).unwrap();
    let rows: Vec<&str> = scores.lines().skip(1).collect();
    assert_eq!(rows.len(), 15);
    assert!(rows.iter().all(|r| r.starts_with("3,")));
    let half_width: f64 = rows[0].split(',').nth(5).unwrap().parse().unwrap();
    assert!((half_width - 16.276236307187293).abs() < 1e-9);
    let entries: Vec<_> = std::fs::read_dir(tmp.path().join("s_bands")).unwrap().collect();
    assert_eq!(entries.len(), 1);
    let band = std::fs::read_to_string(tmp.path().join("s_bands/node_3.csv")).unwrap();
    assert!(band.starts_with("window_index,m,lower,upper\n25,"));
}

#[test]
fn detect_rejects_bad_delta_and_mismatched_stream() {
    let tmp = prepared(20);
    let bad = run(
        tmp.path(),
        &["detect", "--model", "model.cbor", "--stream", "sim/test.jsonl", "--delta", "1.5", "--out", "s.csv"],
    );
    assert_eq!(code(&bad), 2);
    std::fs::write(tmp.path().join("other.jsonl"), "{\"N\": 11}\n{\"t\": 0.5, \"nodes\": [1, 2]}\n").unwrap();
    let mismatch = run(
        tmp.path(),
        &["detect", "--model", "model.cbor", "--stream", "other.jsonl", "--out", "s.csv"],
    );
    assert_eq!(code(&mismatch), 1);
    let out_of_range = run(
        tmp.path(),
        &["detect", "--model", "model.cbor", "--stream", "sim/test.jsonl", "--nodes", "10", "--out", "s.csv"],
    );
    assert_eq!(code(&out_of_range), 2);
}

#[test]
fn calibrate_prints_delta() {
    let tmp = prepared(20);
    let out = ok(
        tmp.path(),
        &["calibrate", "--stream", "sim/train.jsonl", "--forest-size", "3", "--target-fpr", "1.0", "--out", "cal.json"],
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "0.2");
    let m = manifest(&manifest_path(&tmp.path().join("cal.json")));
    assert_eq!(m.result.unwrap()["delta"], 0.2);

    std::fs::write(tmp.path().join("two.jsonl"), "{\"N\": 3, \"window\": 1.0}\n{\"t\": 0.5, \"nodes\": [0]}\n{\"t\": 1.5, \"nodes\": [1]}\n").unwrap();
    let few = run(tmp.path(), &["calibrate", "--stream", "two.jsonl", "--folds", "3", "--out", "c.json"]);
    assert_eq!(code(&few), 1);
}

#[test]
fn baseline_defaults_and_requirements() {
    let tmp = prepared(20);
    ok(tmp.path(), &["baseline", "--method", "scan", "--stream", "sim/test.jsonl", "--out", "scan.csv"]);
    let m = manifest(&manifest_path(&tmp.path().join("scan.csv")));
    assert_eq!(m.config["baseline"]["window"], 20);
    let missing = run(
        tmp.path(),
        &["baseline", "--method", "scan-batch", "--stream", "sim/test.jsonl", "--out", "sb.csv"],
    );
    assert_eq!(code(&missing), 2);
}

#[test]
fn heard_node_on_constant_counts_scores_near_minus_one() {
    let tmp = tempfile::tempdir().unwrap();
    let mut text = String::from("{\"N\": 3, \"window\": 1.0}\n");
    for t in 0..12 {
        for i in 0..10 {
            text.push_str(&format!("{{\"t\": {}, \"nodes\": [0, 1]}}\n", t as f64 + (i as f64 + 1.0) / 11.0));
        }
    }
    std::fs::write(tmp.path().join("flat.jsonl"), text).unwrap();
    ok(tmp.path(), &["baseline", "--method", "heard-node", "--stream", "flat.jsonl", "--out", "h.csv"]);
    let mut reader = csv::Reader::from_path(tmp.path().join("h.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    let score = headers.iter().position(|h| h == "score").unwrap();
    let scores: Vec<f64> = reader.records().map(|r| r.unwrap()[score].parse().unwrap()).collect();
    assert_eq!(scores.len(), 36);
    // mid-p at k = lambda = 10 is about 0.94; the silent node scores exactly -1
    assert!(scores.iter().all(|&s| (-1.0..=-0.9).contains(&s)), "{scores:?}");
}

#[test]
fn evaluate_compares_methods_and_reports_missing_keys() {
    let tmp = prepared(20);
    ok(tmp.path(), &["detect", "--model", "model.cbor", "--stream", "sim/test.jsonl", "--out", "proposed.csv"]);
    ok(tmp.path(), &["baseline", "--method", "heard-node", "--stream", "sim/test.jsonl", "--out", "heard.csv"]);
    let out = ok(
        tmp.path(),
        &["evaluate", "--scores", "proposed.csv", "heard.csv", "--labels", "sim/labels.csv", "--out", "eval"],
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 2);
    let auc = std::fs::read_to_string(tmp.path().join("eval/auc.csv")).unwrap();
    assert_eq!(auc.lines().count(), 3);
    assert!(tmp.path().join("eval/roc.csv").exists());

    ok(
        tmp.path(),
        &["detect", "--model", "model.cbor", "--stream", "sim/test.jsonl", "--nodes", "0,1", "--out", "partial.csv"],
    );
    let missing = run(
        tmp.path(),
        &["evaluate", "--scores", "partial.csv", "--labels", "sim/labels.csv", "--out", "eval2"],
    );
    assert_eq!(code(&missing), 1);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("node 2, window 25"));
}
