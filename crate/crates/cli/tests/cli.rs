use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

const CONFIG: &str = r#"{
  "graph": {"blocks": 2, "per_block": 20, "p_in": 0.4, "p_out": 0.02, "feature_dim": 8},
  "train": {"hidden": 16, "epochs": 150, "lr": 0.01},
  "wm": {"alpha": 0.2},
  "attack": {"epochs": 5, "lr": 0.005, "surrogate_hidden": 16, "surrogate_epochs": 30},
  "dwt": {"n": 1000, "gamma": 0.99, "models": 4}
}"#;

struct Work {
    dir: tempfile::TempDir,
}

impl Work {
    fn new() -> Self {
        let w = Work { dir: tempfile::tempdir().unwrap() };
        std::fs::write(w.path("config.json"), CONFIG).unwrap();
        w
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn lpwm(&self, args: &[&str]) -> Output {
        self.seeded("7", args)
    }

    fn seeded(&self, seed: &str, args: &[&str]) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_lpwm"));
        cmd.args(["--config", &self.s("config.json"), "--seed", seed]).args(args);
        cmd.env_remove("GENIE_LPWM_JOBS");
        cmd.output().unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.lpwm(args);
        assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&std::fs::read_to_string(self.path(name)).unwrap()).unwrap()
    }

    /// datagen → split → register, returning the out dir name.
    fn prepare(&self, out: &str) {
        let o = self.s(out);
        self.ok(&["--out", &o, "datagen"]);
        self.ok(&["--out", &o, "split", "--edges", &format!("{o}/graph.edges"), "--features", &format!("{o}/graph.features")]);
        self.ok(&["--out", &o, "register", "--dataset", &format!("{o}/dataset.json"), "--board", &self.s("board.jsonl"), "--who", "owner"]);
    }

    fn train(&self, out: &str, method: &str, extra: &[&str]) {
        let base = self.s("d");
        let mut args = vec!["--out", out, "train", "--dataset"];
        let ds = format!("{base}/dataset.json");
        let wm = format!("{base}/wm.gwm");
        args.extend([ds.as_str(), "--wm", wm.as_str(), "--method", method]);
        args.extend(extra);
        self.ok(&args);
    }
}

fn artifact_hashes(manifest: &Value) -> Value {
    manifest["artifacts"].clone()
}

#[test]
fn every_subcommand_has_help_and_unknown_flags_fail() {
    let w = Work::new();
    for sub in [
        "datagen", "split", "wm-gen", "train", "eval", "threshold-models", "threshold", "attack", "register", "dispute", "serve", "report",
        "reproduce-table1",
    ] {
        let out = w.lpwm(&[sub, "--help"]);
        assert!(out.status.success(), "{sub} --help");
        assert!(!out.stdout.is_empty());
    }
    let out = w.lpwm(&["datagen", "--no-such-flag"]);
    assert!(!out.status.success());
}

#[test]
fn failures_report_json_on_stderr() {
    let w = Work::new();
    let out = w.lpwm(&["--out", &w.s("x"), "split", "--edges", &w.s("missing.edges")]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].as_str().unwrap().contains("missing.edges"));

    std::fs::write(w.path("bad.json"), r#"{"train":{"epochs":0}}"#).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lpwm")).args(["--config", &w.s("bad.json"), "--out", &w.s("y"), "datagen"]).output().unwrap();
    assert!(!out.status.success());
    assert!(serde_json::from_slice::<Value>(&out.stderr).is_ok());
    assert!(!w.path("y/graph.edges").exists());
}

#[test]
fn bad_jobs_env_is_rejected() {
    let w = Work::new();
    let out = Command::new(env!("CARGO_BIN_EXE_lpwm"))
        .args(["--config", &w.s("config.json"), "--out", &w.s("z"), "datagen"])
        .env("GENIE_LPWM_JOBS", "many")
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].as_str().unwrap().contains("GENIE_LPWM_JOBS"));
}

#[test]
fn train_eval_and_main_results_report() {
    let w = Work::new();
    w.prepare("d");
    let (wm, ds) = (w.s("d/wm.gwm"), w.s("d/dataset.json"));
    w.train(&w.s("one"), "genie", &["--epochs", "1"]);
    w.ok(&["--out", &w.s("one"), "eval", "--dataset", &ds, "--model", &w.s("one/model.ckpt"), "--wm", &wm]);
    let e = w.json("one/eval.json");
    assert!(e["auc_test"].is_f64() && e["auc_wm"].is_f64(), "{e}");

    w.train(&w.s("clean"), "clean", &[]);
    w.ok(&["--out", &w.s("clean"), "eval", "--dataset", &ds, "--model", &w.s("clean/model.ckpt"), "--wm", &wm]);
    let csv = w.ok(&["--out", &w.s("rep"), "report", "--table", "mainResults", &w.s("clean/eval.json"), &w.s("one/eval.json")]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "dataset,auc_test_clean,auc_test_wm,auc_wm_wm");
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1].split(',').count(), 4);
    assert!(lines[1].starts_with("dataset,") && lines[1].split(',').skip(1).all(|c| c.contains('±')));
}

#[test]
fn end_to_end_dispute() {
    let w = Work::new();
    w.prepare("d");
    let (wm, ds) = (w.s("d/wm.gwm"), w.s("d/dataset.json"));
    w.train(&w.s("m"), "genie", &[]);
    w.ok(&["--out", &w.s("t"), "threshold-models", "--dataset", &ds, "--wm", &wm]);
    let aucs = ["--clean-aucs", &w.s("t/clean_aucs.csv"), "--wm-aucs", &w.s("t/wm_aucs.csv")];
    let tdir = w.s("t");
    let mut args = vec!["--out", &tdir, "threshold"];
    args.extend(aucs);
    let t: Value = serde_json::from_str(&w.ok(&args)).unwrap();
    assert!(t["t"].is_f64());

    let board_before = std::fs::read(w.path("board.jsonl")).unwrap();
    let b = w.s("board.jsonl");
    let model = w.s("m/model.ckpt");
    let vdir = w.s("v");
    let mut args = vec!["--out", &vdir, "dispute", "--board", &b, "--who", "owner", "--wm", &wm, "--model", &model];
    args.extend(aucs);
    let v: Value = serde_json::from_str(&w.ok(&args)).unwrap();
    assert_eq!(v["winner"], "plaintiff", "{v}");
    assert_eq!(v["reason"], "auc_above_t");
    assert_eq!(v, w.json("v/verdict.json"));

    assert!(w.seeded("99", &["--out", &w.s("u"), "wm-gen", "--dataset", &ds]).status.success());
    let other = w.s("u/wm.gwm");
    let v2dir = w.s("v2");
    let mut args = vec!["--out", &v2dir, "dispute", "--board", &b, "--who", "intruder", "--wm", &other, "--model", &model];
    args.extend(aucs);
    let v: Value = serde_json::from_str(&w.ok(&args)).unwrap();
    assert_eq!((v["winner"].as_str(), v["reason"].as_str()), (Some("defendant"), Some("no_record")));
    assert_eq!(std::fs::read(w.path("board.jsonl")).unwrap(), board_before);
}

#[test]
fn reruns_reproduce_artifact_hashes() {
    let w = Work::new();
    for out in ["a", "b"] {
        let o = w.s(out);
        w.ok(&["--out", &o, "datagen"]);
        w.ok(&["--out", &o, "split", "--edges", &format!("{o}/graph.edges")]);
        w.ok(&["--out", &o, "wm-gen", "--dataset", &format!("{o}/dataset.json")]);
        w.ok(&["--out", &o, "train", "--dataset", &format!("{o}/dataset.json"), "--wm", &format!("{o}/wm.gwm"), "--epochs", "3"]);
    }
    for m in ["datagen", "split", "wm-gen", "train"] {
        let (a, b) = (w.json(&format!("a/{m}.manifest.json")), w.json(&format!("b/{m}.manifest.json")));
        assert_eq!(artifact_hashes(&a), artifact_hashes(&b), "{m}");
        assert_eq!(a["config_hash"], b["config_hash"]);
        assert_eq!(a["seed"], 7);
    }
}

#[test]
fn attack_writes_reports_and_csv() {
    let w = Work::new();
    w.prepare("d");
    w.train(&w.s("m"), "genie", &[]);
    let out = w.ok(&[
        "--out",
        &w.s("atk"),
        "attack",
        "--dataset",
        &w.s("d/dataset.json"),
        "--model",
        &w.s("m/model.ckpt"),
        "--wm",
        &w.s("d/wm.gwm"),
        "--threshold",
        "0.6",
        "--kinds",
        "FTLL,prune:0.4,quantize:3,extract-hard",
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "dataset,metric,FTLL,prune:0.4,quantize:3,extract-hard");
    assert_eq!(lines.len(), 4);
    let r = w.json("atk/attacks/prune_0.4.json");
    assert_eq!(r["kind"], "prune:0.4");
    assert!(["watermark_success", "watermark_failure"].contains(&r["verdict"].as_str().unwrap()));
}

#[test]
fn serve_answers_queries() {
    let w = Work::new();
    w.prepare("d");
    w.train(&w.s("m"), "genie", &[]);
    let mut child = Command::new(env!("CARGO_BIN_EXE_lpwm"))
        .args(["serve", "--dataset", &w.s("d/dataset.json"), "--model", &w.s("m/model.ckpt"), "--defense", &w.s("d/wm.gwm")])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"0 1\n5 3\nnope\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    for l in &lines[..2] {
        let (bit, p) = l.split_once(' ').unwrap();
        assert!(bit == "0" || bit == "1");
        let p: f64 = p.parse().unwrap();
        assert_eq!(bit == "1", p > 0.5);
    }
    assert!(lines[2].starts_with("error"));
}

#[test]
fn table1_layout() {
    let w = Work::new();
    w.prepare("d");
    let out = w.ok(&["--out", &w.s("t1"), "reproduce-table1", "--dataset", &w.s("d/dataset.json"), "--wm", &w.s("d/wm.gwm")]);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("score,i=1,i=2,i=3,i=4,shapiro_w"));
    assert!(lines[1].starts_with("beta,") && lines[2].starts_with("alpha,"));
    assert_eq!(lines[1].split(',').count(), 1 + 4 + 2);
    assert!(out.contains("bootstrap p"));
    let t = w.json("t1/table1.json");
    assert_eq!(t["beta"].as_array().unwrap().len(), 4);
    assert!(Path::new(&w.s("t1/table1.csv")).exists());
}
