use std::path::Path;
use std::process::{Command, Output};

fn brwlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brwlab")).args(args).current_dir(dir).env_remove("BRWLAB_SEED").output().unwrap()
}

const TREE: &str = r#"{"model": {"builder": "tree", "params": {"d": 3, "lambda": 0.5}},
  "tasks": ["classify-local", "simulate"],
  "settings": {"steps": 40, "trials": 50, "horizon": 10, "population_cap": 5000, "seed": 3}}"#;

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_writes_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tree.json"), TREE).unwrap();
    let out = brwlab(&["run", "tree.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("o/report.json"));
    assert_eq!(report["tasks"][0]["result"]["local"]["verdict"], "survives");
    let manifest = json(&dir.path().join("o/manifest.json"));
    assert_eq!(manifest["seed"], 3);
    assert!(dir.path().join("o/trials.csv").exists());
}

#[test]
fn seed_precedence_flag_then_env_then_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tree.json"), TREE).unwrap();
    let env_run = Command::new(env!("CARGO_BIN_EXE_brwlab"))
        .args(["run", "tree.json", "--out", "env"])
        .env("BRWLAB_SEED", "99")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(env_run.status.code(), Some(0));
    assert_eq!(json(&dir.path().join("env/manifest.json"))["seed"], 99);
    let flag_run = Command::new(env!("CARGO_BIN_EXE_brwlab"))
        .args(["run", "tree.json", "--out", "flag", "--seed", "5", "--trials", "20"])
        .env("BRWLAB_SEED", "99")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(flag_run.status.code(), Some(0));
    let m = json(&dir.path().join("flag/manifest.json"));
    assert_eq!(m["seed"], 5);
    assert_eq!(m["config"]["settings"]["trials"], 20);
}

#[test]
fn manifest_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tree.json"), TREE).unwrap();
    assert_eq!(brwlab(&["run", "tree.json", "--out", "a"], dir.path()).status.code(), Some(0));
    assert_eq!(brwlab(&["run", "a/manifest.json", "--out", "b"], dir.path()).status.code(), Some(0));
    for f in ["report.json", "manifest.json", "trials.csv"] {
        assert_eq!(std::fs::read(dir.path().join("a").join(f)).unwrap(), std::fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"model": {"builder": "tree"}, "tasks": ["fly"]}"#).unwrap();
    let out = brwlab(&["run", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema"));
    let out = brwlab(&["validate", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_rejects_unnormalized_inline_law() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"model": {"laws": [{"site": [0], "outcomes": [{"prob": "1/4"}, {"prob": "1/2", "children": [{"site": [0], "count": 2}]}]}]}}"#;
    std::fs::write(dir.path().join("gw.json"), cfg).unwrap();
    let out = brwlab(&["validate", "gw.json"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
    let fixed = cfg.replace("1/2", "3/4");
    std::fs::write(dir.path().join("gw.json"), fixed).unwrap();
    let out = brwlab(&["validate", "gw.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["vertices"], 1);
}

#[test]
fn failing_task_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"model": {"builder": "galton-watson"}, "tasks": ["never-hit"], "settings": {"radius": 1, "target": [[7]]}}"#;
    std::fs::write(dir.path().join("c.json"), cfg).unwrap();
    assert_eq!(brwlab(&["run", "c.json", "--out", "o"], dir.path()).status.code(), Some(3));
}

#[test]
fn reproduce_prints_rows_and_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = brwlab(&["reproduce", "two-type-bp", "--json", "rows.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8_lossy(&out.stdout);
    assert_eq!(table.lines().filter(|l| l.starts_with("two-type-bp")).count(), 3);
    assert!(table.lines().skip(1).all(|l| l.ends_with("PASS")));
    let rows = json(&dir.path().join("rows.json"));
    assert_eq!(rows[0]["rows"].as_array().unwrap().len(), 3);
    assert_eq!(brwlab(&["reproduce", "no-such-example"], dir.path()).status.code(), Some(2));
}

#[test]
fn catalog_lists_every_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = brwlab(&["catalog", "--json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let list: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let ids: Vec<&str> = list.as_array().unwrap().iter().map(|d| d["id"].as_str().unwrap()).collect();
    assert_eq!(ids, brwlab::spaces::CATALOG_IDS);
    assert!(list.as_array().unwrap().iter().all(|d| !d["facts"].as_array().unwrap().is_empty()));
}

#[test]
fn help_documents_csv_columns_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let help = String::from_utf8(brwlab(&["run", "--help"], dir.path()).stdout).unwrap();
    assert!(help.contains("trial,stop_reason,final_gen,max_pop,visits_A"));
    assert!(help.contains("BRWLAB_SEED"));
    let top = String::from_utf8(brwlab(&["--help"], dir.path()).stdout).unwrap();
    assert!(top.contains("Exit codes"));
}
