use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name).to_string_lossy().into_owned()
}

fn warpsplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_warpsplit"))
        .args(args)
        .env_remove("WARPSPLIT_CONFIG")
        .env_remove("WARPSPLIT_SEED")
        .env_remove("WARPSPLIT_TOL")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn nullity_report_has_schema_and_values() {
    let out = warpsplit(&["nullity", &data("diag-split.json")]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["schemaVersion"], 1);
    assert_eq!(doc["summary"]["values"], serde_json::json!([4, 1]));
    assert_eq!(doc["command"]["name"], "nullity");
}

#[test]
fn missing_file_is_a_structured_input_error() {
    let out = warpsplit(&["nullity", "/nonexistent/form.json"]);
    assert_eq!(out.status.code(), Some(2));
    let doc = json(&out);
    assert_eq!(doc["schemaVersion"], 1);
    assert!(doc["error"]["kind"].is_string());
    assert!(doc["error"]["message"].as_str().unwrap().contains("nonexistent"));
}

#[test]
fn usage_errors_exit_2() {
    let out = warpsplit(&["bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "UsageError");
}

#[test]
fn umbilical_violation_exits_3_with_indices() {
    let out = warpsplit(&["rep-verify", &data("rep-violating.json")]);
    assert_eq!(out.status.code(), Some(3));
    let doc = json(&out);
    assert_eq!(doc["error"]["kind"], "UmbilicalConstraintViolated");
    assert_eq!(doc["error"]["details"]["i"], 1);
    assert_eq!(doc["error"]["details"]["j"], 2);
}

#[test]
fn falsify_finds_no_counterexample() {
    let out = warpsplit(&["falsify", "--n", "6", "--p", "1", "--trials", "1000", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["summary"]["violations"], 0);
    assert!(doc["summary"]["tested"].as_u64().unwrap() > 0);
}

#[test]
fn same_seed_same_report() {
    let a = json(&warpsplit(&["falsify", "--n", "7", "--p", "2", "--trials", "30", "--seed", "9"]));
    let b = json(&warpsplit(&["falsify", "--n", "7", "--p", "2", "--trials", "30", "--seed", "9"]));
    assert_eq!(a["items"], b["items"]);
    assert_eq!(a["summary"], b["summary"]);
}

#[test]
fn env_var_overrides_config_file_and_flag_overrides_env() {
    let cfg = std::env::temp_dir().join(format!("warpsplit-cli-{}.toml", std::process::id()));
    std::fs::write(&cfg, "seed = 1\n").unwrap();
    let base = [
        "falsify",
        "--n",
        "5",
        "--p",
        "1",
        "--trials",
        "2",
        "--config",
        cfg.to_str().unwrap(),
    ];
    let seed_of = |out: &Output| json(out)["config"]["seed"].as_u64().unwrap();
    assert_eq!(seed_of(&warpsplit(&base)), 1);
    let with_env = Command::new(env!("CARGO_BIN_EXE_warpsplit")).args(base).env("WARPSPLIT_SEED", "4").output().unwrap();
    assert_eq!(seed_of(&with_env), 4);
    let mut args = base.to_vec();
    args.extend(["--seed", "8"]);
    let with_flag = Command::new(env!("CARGO_BIN_EXE_warpsplit")).args(&args).env("WARPSPLIT_SEED", "4").output().unwrap();
    assert_eq!(seed_of(&with_flag), 8);
}

#[test]
fn bad_config_file_reports_position() {
    let cfg = std::env::temp_dir().join(format!("warpsplit-bad-{}.toml", std::process::id()));
    std::fs::write(&cfg, "seed = 1\nstarts = \"x\"\n").unwrap();
    let out = warpsplit(&["falsify", "--n", "5", "--p", "1", "--trials", "1", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["details"]["line"], 2);
}

#[test]
fn out_flag_writes_the_report() {
    let path = std::env::temp_dir().join(format!("warpsplit-out-{}.json", std::process::id()));
    let out = warpsplit(&["oracle", &data("diag-split.json"), "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["verdict"], "pass");
}

#[test]
fn bundled_documents_give_expected_verdicts() {
    for (cmd, file, verdict) in [
        ("lemma", "lemma-adapted.json", "pass"),
        ("lemma", "lemma-cylinder.json", "info"),
        ("rep-verify", "rep-flat.json", "pass"),
        ("rep-verify", "rep-sphere.json", "pass"),
        ("rep-verify", "rep-hyperbolic.json", "pass"),
        ("curvature", "polar-flat.json", "pass"),
        ("curvature", "horospherical.json", "pass"),
        ("analyze", "revolution-analyze.json", "pass"),
        ("decompose", "revolution-decompose.json", "pass"),
    ] {
        let out = warpsplit(&[cmd, &data(file)]);
        let doc = json(&out);
        assert_eq!(doc["verdict"], verdict, "{cmd} {file}: {doc}");
    }
}
