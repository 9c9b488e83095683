use std::fs;
use std::process::{Command, Output};

use tm_gpac::compile::CompiledDoc;

fn tmgpac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tmgpac"))
        .args(args)
        .env_remove("TMGPAC_TOL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_accepts_corpus_machine() {
    let o = tmgpac(&["validate", "palindrome"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("states m = 8, k = 4"));
}

#[test]
fn validate_rejects_missing_delta_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    fs::write(
        &path,
        r#"{"m":1,"k":3,"q0":0,"delta":[{"q":0,"s":0,"q2":0,"s2":1,"dir":"R"}]}"#,
    )
    .unwrap();
    let o = tmgpac(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid machine"));
}

#[test]
fn validate_rejects_single_symbol_alphabet() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    fs::write(&path, r#"{"m":1,"k":1,"q0":0,"delta":[]}"#).unwrap();
    assert_eq!(tmgpac(&["validate", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn oracle_zero_steps_echoes_input() {
    let o = tmgpac(&["oracle", "unary-adder", "-T", "0"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("   0  q0 [1]011"));
}

#[test]
fn oracle_prints_exact_fractions() {
    let o = tmgpac(&["oracle", "binary-counter", "-T", "3", "--tape", r#"{"head":0}"#]);
    let out = stdout(&o);
    assert!(out.contains("(0, 0, 1/2, 1)"), "{out}");
    assert!(out.contains("(1/4, 0, 0, 0)"), "{out}");
}

#[test]
fn constants_k3_is_four_k1() {
    let o = tmgpac(&["constants", "binary-counter"]);
    let out = stdout(&o);
    let value = |name: &str| -> u128 {
        let line = out.lines().find(|l| l.trim_start().starts_with(name)).unwrap();
        line.split_whitespace().nth(2).unwrap().parse().unwrap()
    };
    assert_eq!(value("K3"), 4 * value("K1"));
}

#[test]
fn simulate_writes_trace_and_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let verdict = dir.path().join("verdict.json");
    let o = tmgpac(&[
        "simulate",
        "binary-counter",
        "-T",
        "3",
        "--trace",
        trace.to_str().unwrap(),
        "--verdict",
        verdict.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stdout(&o));
    let csv = fs::read_to_string(&trace).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 16 + 1);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&verdict).unwrap()).unwrap();
    assert_eq!(json["steps"].as_array().unwrap().len(), 4);
    assert_eq!(json["all_match"], true);
}

#[test]
fn simulate_reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("t{i}.csv"))).collect();
    for p in &paths {
        let o = tmgpac(&["simulate", "unary-adder", "-T", "2", "--trace", p.to_str().unwrap()]);
        assert!(o.status.success());
    }
    assert_eq!(fs::read(&paths[0]).unwrap(), fs::read(&paths[1]).unwrap());
}

#[test]
fn simulate_rejects_small_lambda() {
    let o = tmgpac(&["simulate", "binary-counter", "-l", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least 1"));
}

#[test]
fn tolerance_comes_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_tmgpac"))
        .args(["simulate", "binary-counter", "-T", "1"])
        .env("TMGPAC_TOL", "1e-8")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("tol = 1e-8"), "{}", stdout(&o));
}

#[test]
fn compiled_document_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sys.json");
    let o = tmgpac(&["compile", "binary-counter", "-o", path.to_str().unwrap(), "-l", "2", "--mu", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&path).unwrap();
    let doc = CompiledDoc::parse(&text).unwrap();
    assert_eq!(doc.to_json().trim(), text.trim());
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["params"]["A"], 90.0);
    assert_eq!(json["params"]["B"], 12.0);
}

#[test]
fn probe_helpers_stays_within_bounds() {
    let o = tmgpac(&["probe-helpers", "--kind", "xi", "--points", "101"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().next(), Some("x,value,error,bound"));
    assert_eq!(out.lines().count(), 102);
}

#[test]
fn probe_helpers_rejects_unknown_kind() {
    assert_eq!(tmgpac(&["probe-helpers", "--kind", "erf"]).status.code(), Some(1));
}

#[test]
fn probe_step_reports_no_violations() {
    let o = tmgpac(&["probe-step", "palindrome", "-T", "5", "--samples", "20"]);
    assert!(o.status.success());
    for line in stdout(&o).lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[1] <= v[2]);
    }
}

#[test]
fn sweep_covers_every_horizon() {
    let o = tmgpac(&["sweep", "binary-counter", "--horizons", "1,2,3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).matches("PASS").count(), 3);
}
