use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn refeat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refeat"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn discover(out: &Path, extra: &[&str]) -> Output {
    let data = fixture("demo.csv");
    let meta = fixture("demo.json");
    let script = fixture("keyed_script.json");
    let mut args = vec![
        "discover",
        "--data",
        s(&data),
        "--meta",
        s(&meta),
        "--backend",
        "scripted",
        "--script",
        s(&script),
        "--seed",
        "7",
        "--out",
        s(out),
    ];
    args.extend_from_slice(extra);
    refeat(&args)
}

fn ledger_lines(dir: &Path) -> Vec<Value> {
    fs::read_to_string(dir.join("ledger.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn discover_writes_a_reproducible_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let report = stdout_json(&discover(&a, &["--iterations", "8"]));
    stdout_json(&discover(&b, &["--iterations", "8"]));
    for f in [
        "ledger.jsonl",
        "bandit_trace.jsonl",
        "report.json",
        "selected_features.json",
    ] {
        let (x, y) = (fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
        assert!(!x.is_empty(), "{f} is empty");
        assert_eq!(x, y, "{f} differs between identical runs");
    }
    assert_eq!(report["bandit_trace"].as_array().unwrap().len(), 8);
    assert_eq!(report["generator_calls"], 8);
    let stray: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with('.'))
        .collect();
    assert!(stray.is_empty(), "temporary files left behind");
}

#[test]
fn single_type_mode_only_uses_that_arm() {
    let tmp = tempfile::tempdir().unwrap();
    let report = stdout_json(&discover(tmp.path(), &["--mode", "single:causal", "--iterations", "3"]));
    assert_eq!(report["method"], "single:causal");
    for r in ledger_lines(tmp.path()) {
        assert_eq!(r["reasoning_type"], "causal");
    }
}

#[test]
fn missing_data_is_a_usage_error() {
    let meta = fixture("demo.json");
    let o = refeat(&["discover", "--meta", s(&meta), "--out", "unused"]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("--data") && err.contains("Usage:"), "{err}");
}

#[test]
fn bad_mode_and_bad_config_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&discover(tmp.path(), &["--mode", "single:whimsical"])), 2);
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, r#"{"engine": {"iterations": 3}, "no_such_key": 1}"#).unwrap();
    let o = refeat(&["discover", "--config", s(&cfg), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn generator_failure_exits_3_and_keeps_the_partial_ledger() {
    let tmp = tempfile::tempdir().unwrap();
    let script = tmp.path().join("two.json");
    let reply = r#"<Result>[{"feature_name":"p","code":"x1 * x2"}]</Result>"#;
    fs::write(
        &script,
        serde_json::json!({"mode": "replay", "responses": [reply, reply]}).to_string(),
    )
    .unwrap();
    let out = tmp.path().join("run");
    let (data, meta) = (fixture("demo.csv"), fixture("demo.json"));
    let o = refeat(&[
        "discover",
        "--data",
        s(&data),
        "--meta",
        s(&meta),
        "--script",
        s(&script),
        "--out",
        s(&out),
        "--iterations",
        "5",
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let ledger = ledger_lines(&out);
    assert_eq!(ledger.len(), 2);
    assert_eq!(ledger[1]["iteration"], 1);
    assert!(!out.join("report.json").exists());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    for f in ["demo.csv", "demo.json", "keyed_script.json"] {
        fs::copy(fixture(f), tmp.path().join(f)).unwrap();
    }
    let cfg = tmp.path().join("config.json");
    fs::write(
        &cfg,
        r#"{
  "data": "demo.csv",
  "meta": "demo.json",
  "out": "run",
  "seed": 3,
  "engine": {"iterations": 6, "mode": "uniform"},
  "generator": {"backend": "scripted", "script": "keyed_script.json"}
}"#,
    )
    .unwrap();
    let report = stdout_json(&refeat(&["discover", "--config", s(&cfg), "--iterations", "2"]));
    assert_eq!(report["method"], "uniform");
    assert_eq!(report["config"]["iterations"], 2);
    assert_eq!(report["config"]["seed"], 3);
    let arms: Vec<&str> = report["bandit_trace"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["arm"].as_str().unwrap())
        .collect();
    assert_eq!(arms, ["deductive", "inductive"]);
    assert!(
        tmp.path().join("run/report.json").exists(),
        "relative out resolves against the config file"
    );
}

fn evaluate(features: &Path) -> Output {
    let (data, meta) = (fixture("demo.csv"), fixture("demo.json"));
    refeat(&[
        "evaluate",
        "--data",
        s(&data),
        "--meta",
        s(&meta),
        "--seed",
        "7",
        "--features",
        s(features),
    ])
}

#[test]
fn evaluate_gains_and_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.json");
    fs::write(&empty, "[]").unwrap();
    let v = stdout_json(&evaluate(&empty));
    assert_eq!(v["gains"]["val"], 0.0);
    assert_eq!(v["gains"]["test"], 0.0);
    assert_eq!(v["baseline"], v["augmented"]);

    let good = tmp.path().join("good.json");
    fs::write(
        &good,
        r#"[{"feature_name": "prod", "expression": "x1 * x2"}, "df['noise'] ** 2"]"#,
    )
    .unwrap();
    let first = evaluate(&good);
    let second = evaluate(&good);
    assert_eq!(first.stdout, second.stdout, "evaluate is deterministic");
    let v = stdout_json(&first);
    assert!(v["gains"]["val"].as_f64().unwrap() > 0.5);
    assert_eq!(v["features"][1]["expression"], "square(noise)");

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"[{"feature_name": "ghost", "expression": "x1 + nowhere"}]"#).unwrap();
    let o = evaluate(&bad);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("ghost"));

    fs::write(&bad, r#"[{"feature_name": "leak", "expression": "y * 2"}]"#).unwrap();
    assert_eq!(code(&evaluate(&bad)), 4);
    assert_eq!(code(&evaluate(&tmp.path().join("absent.json"))), 2);
}

fn identical_rows_table(dir: &Path) -> PathBuf {
    let path = dir.join("same.csv");
    let mut text = String::from("x1,x2,region,noise,y\n");
    for _ in 0..12 {
        text.push_str("1,2,north,3,2\n");
    }
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn probe_echo_and_empty_backends() {
    let tmp = tempfile::tempdir().unwrap();
    let data = identical_rows_table(tmp.path());
    let meta = fixture("demo.json");
    let echo = tmp.path().join("echo.json");
    fs::write(
        &echo,
        r#"{"mode": "keyed", "responses": {"probe:head": "1,2,north,3,2\nmore text", "probe:row": "1,2,north,3,2"}}"#,
    )
    .unwrap();
    let empty = tmp.path().join("empty.json");
    fs::write(&empty, r#"{"mode": "keyed", "responses": {"*": ""}}"#).unwrap();
    let run = |script: &Path| {
        refeat(&[
            "probe",
            "--data",
            s(&data),
            "--meta",
            s(&meta),
            "--script",
            s(script),
            "--seed",
            "5",
        ])
    };
    let o = run(&echo);
    assert!(String::from_utf8_lossy(&o.stdout).contains("\"f\": 1.0"));
    assert_eq!(stdout_json(&o)["d_row"], 0.0);
    let v = stdout_json(&run(&empty));
    assert_eq!(
        (v["d_head"].as_f64(), v["d_row"].as_f64(), v["f"].as_f64()),
        (Some(1.0), Some(1.0), Some(0.0))
    );
    let o = refeat(&[
        "probe",
        "--data",
        s(&data),
        "--meta",
        s(&meta),
        "--script",
        s(&echo),
        "--rows",
        "11",
    ]);
    assert_eq!(code(&o), 2, "table too small for the header probe");
}

#[test]
fn diagnose_a_single_feature_ledger() {
    let tmp = tempfile::tempdir().unwrap();
    let ledger = tmp.path().join("ledger.jsonl");
    fs::write(
        &ledger,
        r#"{"iteration":0,"reasoning_type":"causal","feature_name":"s","expression":"x1 + x2","code":"x1 + x2","status":"VALID","gain":0.1}
{"iteration":0,"reasoning_type":"deductive","feature_name":"t","expression":"","code":"x1 +","status":"PARSE_ERROR","error_detail":"eof"}
"#,
    )
    .unwrap();
    let v = stdout_json(&refeat(&["diagnose", s(&ledger)]));
    assert_eq!(v["structural"]["mean_num_ops"], 1.0);
    assert_eq!(v["structural"]["mean_depth"], 1.0);
    assert_eq!(v["reasoning_distribution"]["causal"], 1.0);
    assert!(v["semantic"].is_null());

    let (data, meta) = (fixture("demo.csv"), fixture("demo.json"));
    let v = stdout_json(&refeat(&[
        "diagnose",
        s(&ledger),
        "--data",
        s(&data),
        "--meta",
        s(&meta),
        "--seed",
        "7",
    ]));
    assert!(
        v["semantic"]["functional_diversity"].is_null(),
        "one feature has no pairs"
    );
    assert!(v["semantic"]["mean_mi"].as_f64().unwrap() > 0.0);

    let v = stdout_json(&refeat(&["diagnose", s(&ledger), "--scope", "all"]));
    assert_eq!(v["reasoning_distribution"]["deductive"], 0.5);

    fs::write(&ledger, "not json\n").unwrap();
    assert_eq!(code(&refeat(&["diagnose", s(&ledger)])), 2);
}

#[test]
fn winmatrix_over_two_report_sets_is_antisymmetric() {
    let tmp = tempfile::tempdir().unwrap();
    let runs = tmp.path().join("runs");
    stdout_json(&discover(&runs.join("full"), &["--iterations", "6"]));
    stdout_json(&discover(
        &runs.join("noguide"),
        &["--iterations", "3", "--mode", "no_guide"],
    ));
    let other = tmp.path().join("other");
    stdout_json(&discover(
        &other,
        &["--iterations", "3", "--mode", "uniform", "--dataset-name", "demo_copy"],
    ));
    let csv = tmp.path().join("w.csv");
    let v = stdout_json(&refeat(&["winmatrix", s(&runs), s(&other), "--csv", s(&csv)]));
    let w = &v["win_matrix"]["w"];
    let k = v["win_matrix"]["methods"].as_array().unwrap().len();
    assert_eq!(k, 4);
    for i in 0..k {
        assert!(w[i][i].is_null());
        for j in 0..k {
            if let (Some(a), Some(b)) = (w[i][j].as_f64(), w[j][i].as_f64()) {
                assert!((a + b - 1.0).abs() < 1e-12);
            }
        }
    }
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), k + 1);
    assert_eq!(code(&refeat(&["winmatrix", s(&tmp.path().join("nothing"))])), 2);
}
