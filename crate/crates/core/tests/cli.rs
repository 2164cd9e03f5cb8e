//! Runs the `zdt` binary end to end on a small corpus.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SPEC: &str = r#"
seed = 8
flows_per_network = 3000
profiles = ["campus", "enterprise", "datacenter"]

[[attacks]]
class = "scanning"
fraction = 0.03

[[attacks]]
class = "botnet"
fraction = 0.03

[[attacks]]
class = "exfiltration"
fraction = 0.03

[[attacks]]
class = "worm"
fraction = 0.03
"#;

const RUN: &str = r#"
seed = 8
feature_mode = "flow_and_graph"

[paths]
corpus = "corpus"
model_dir = "models"
report_dir = "reports"

[train.ad]
max_epochs = 4

[train.novelty]
batch_size = 64
max_epochs = 4

[calibration]
mode = "quantile"
quantile = 0.99
recall_floor = 0.5

[experiment]
holdout_prevalence = 0.05
"#;

fn zdt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zdt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = zdt(args);
    assert!(
        out.status.success(),
        "zdt {args:?} failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_shape(path: &Path) -> (usize, usize) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let cols = rdr.headers().unwrap().len();
    (rdr.records().count(), cols)
}

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        fs::write(root.join("spec.toml"), SPEC).unwrap();
        Self { _dir: dir, root }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn gen(&self, out: &str) -> PathBuf {
        let dir = self.path(out);
        ok(&["gen", "--spec", s(&self.path("spec.toml")), "--out", s(&dir)]);
        dir
    }
}

#[test]
fn version_reports_formats() {
    let text = ok(&["--version"]);
    assert!(text.starts_with("zdt "));
    assert!(text.contains("model format 1"));
    assert!(text.contains("feature schema 1"));
}

#[test]
fn gen_writes_corpus_and_is_reproducible() {
    let ws = Workspace::new();
    let a = ws.gen("a");
    let b = ws.gen("b");
    for name in ["campus.csv", "enterprise.csv", "datacenter.csv", "manifest.json"] {
        let bytes = fs::read(a.join(name)).unwrap();
        assert!(!bytes.is_empty(), "{name}");
        assert_eq!(bytes, fs::read(b.join(name)).unwrap(), "{name} differs between runs");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["networks"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["networks"][0]["counts"]["scanning"], 90);
    assert_eq!(csv_shape(&a.join("campus.csv")), (3000, 10));

    // the root seed override changes the corpus
    let c = ws.path("c");
    ok(&["--seed", "9", "gen", "--spec", s(&ws.path("spec.toml")), "--out", s(&c)]);
    assert_ne!(fs::read(a.join("campus.csv")).unwrap(), fs::read(c.join("campus.csv")).unwrap());
}

#[test]
fn invalid_spec_names_the_field() {
    let ws = Workspace::new();
    let bad = ws.path("bad.toml");
    fs::write(&bad, SPEC.replace("fraction = 0.03\n\n[[attacks]]\nclass = \"botnet\"", "fraction = 1.5\n\n[[attacks]]\nclass = \"botnet\"")).unwrap();
    let out = zdt(&["gen", "--spec", s(&bad), "--out", s(&ws.path("x"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("attacks[0].fraction"), "{err}");

    let out = zdt(&["gen", "--spec", s(&ws.path("missing.toml")), "--out", s(&ws.path("x"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn pipeline_from_flows_to_verdicts() {
    let ws = Workspace::new();
    let corpus = ws.gen("corpus");
    let flows = corpus.join("campus.csv");
    fs::write(ws.path("run.toml"), RUN).unwrap();
    let config = ws.path("run.toml");

    // featurize
    let full = ws.path("features/full.csv");
    let nodes = ws.path("features/nodes.csv");
    ok(&["featurize", "--input", s(&flows), "--mode", "flow_and_graph", "--out", s(&full), "--nodes", s(&nodes)]);
    assert_eq!(csv_shape(&full), (3000, 28));
    let flow_only = ws.path("features/flow_only.csv");
    ok(&["featurize", "--input", s(&flows), "--mode", "flow_only", "--out", s(&flow_only)]);
    assert_eq!(csv_shape(&flow_only), (3000, 7));
    let benign = ws.path("features/benign.csv");
    let attack = ws.path("features/attack.csv");
    ok(&["featurize", "--input", s(&flows), "--mode", "flow_and_graph", "--out", s(&benign), "--only", "benign"]);
    ok(&["featurize", "--input", s(&flows), "--mode", "flow_and_graph", "--out", s(&attack), "--only", "attack"]);
    assert_eq!(csv_shape(&benign).0 + csv_shape(&attack).0, 3000);

    // train
    let out = zdt(&["train", "--role", "ad", "--features", s(&full), "--config", s(&config)]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let out = zdt(&["train", "--role", "novelty", "--features", s(&benign), "--config", s(&config)]);
    assert_eq!(out.status.code(), Some(4));

    ok(&["train", "--role", "ad", "--features", s(&benign), "--config", s(&config)]);
    ok(&["train", "--role", "novelty", "--features", s(&attack), "--config", s(&config)]);
    let ad = ws.path("models/ad.model.json");
    let nd = ws.path("models/novelty.model.json");
    assert!(ws.path("models/ad.model.json.log.csv").is_file());
    let again = ws.path("models/ad_again.model.json");
    ok(&["train", "--role", "ad", "--features", s(&benign), "--config", s(&config), "--out", s(&again)]);
    assert_eq!(fs::read(&ad).unwrap(), fs::read(&again).unwrap(), "retraining changed the model");

    // calibrate
    let ad_cal = ws.path("models/ad.calibrated.json");
    let nd_cal = ws.path("models/nd.calibrated.json");
    ok(&["calibrate", "--model", s(&ad), "--features", s(&benign), "--config", s(&config), "--out", s(&ad_cal)]);
    ok(&["calibrate", "--model", s(&nd), "--features", s(&attack), "--config", s(&config), "--out", s(&nd_cal)]);
    let model = zdt::neural::AEModel::load(&ad_cal).unwrap();
    assert!(model.meta.threshold.unwrap() > 0.0);

    // detect
    let detect = |out: &Path, with_nodes: bool| -> serde_json::Value {
        let mut args = vec!["detect", "--ad", s(&ad_cal), "--nd", s(&nd_cal), "--input", s(&flows), "--out", s(out)];
        if with_nodes {
            args.extend(["--nodes", s(&nodes)]);
        }
        serde_json::from_str(ok(&args).trim()).unwrap()
    };
    let v1 = ws.path("verdicts/a.jsonl");
    let v2 = ws.path("verdicts/b.jsonl");
    let summary = detect(&v1, true);
    detect(&v2, false);
    let total: u64 = ["benign", "known_attack", "novel_threat"]
        .iter()
        .map(|k| summary[k].as_u64().unwrap())
        .sum();
    assert_eq!(total, 3000, "{summary}");
    let text = fs::read_to_string(&v1).unwrap();
    assert_eq!(text.lines().count(), 3001);
    assert_eq!(text, fs::read_to_string(&v2).unwrap());
    for (i, line) in text.lines().take(3000).enumerate() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["index"], i);
        assert_eq!(v["nd_loss"].is_null(), v["verdict"] == "benign");
    }

    // a flow+graph model cannot be calibrated on flow-only columns
    let out = zdt(&["calibrate", "--model", s(&ad), "--features", s(&flow_only), "--out", s(&ws.path("m.json"))]);
    assert_eq!(out.status.code(), Some(6), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn experiments_write_reports() {
    let ws = Workspace::new();
    ws.gen("corpus");
    fs::write(ws.path("run.toml"), RUN).unwrap();
    let config = ws.path("run.toml");

    ok(&["experiment", "--name", "overall_comparison", "--config", s(&config)]);
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(ws.path("reports/overall_comparison.json")).unwrap()).unwrap();
    let rows: Vec<&str> = report["rows"].as_array().unwrap().iter().map(|r| r["attack"].as_str().unwrap()).collect();
    assert_eq!(rows, ["single", "dual", "dual+graph"]);
    assert_eq!(report["config"]["run"]["seed"], 8);

    let out = ws.path("e2e");
    ok(&["experiment", "--name", "end_to_end", "--config", s(&config), "--out", s(&out)]);
    let (rows, cols) = csv_shape(&out.join("end_to_end.csv"));
    assert_eq!((rows, cols), (5, 4), "four classes plus the average");
    let first = fs::read(out.join("end_to_end.json")).unwrap();
    ok(&["experiment", "--name", "end_to_end", "--config", s(&config), "--out", s(&out)]);
    assert_eq!(first, fs::read(out.join("end_to_end.json")).unwrap());

    let bad = zdt(&["experiment", "--name", "nope", "--config", s(&config)]);
    assert_eq!(bad.status.code(), Some(2));
}
