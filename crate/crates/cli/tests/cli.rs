use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn qgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgame"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn docs(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs").join(name)
}

fn json_report(args: &[&str]) -> (i32, Value) {
    let mut full = args.to_vec();
    full.extend(["--output", "json"]);
    let out = qgame(&full);
    let v = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: stdout={} stderr={}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    });
    (out.status.code().unwrap(), v)
}

fn table<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["tables"]
        .as_array()
        .unwrap()
        .iter()
        .find(|t| t["name"] == name)
        .unwrap_or_else(|| panic!("no table {name}"))
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

fn validator() -> jsonschema::JSONSchema {
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(docs("report.schema.json")).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&schema).unwrap()
}

#[test]
fn verify_passes_and_exits_zero() {
    let (code, r) = json_report(&["verify"]);
    assert_eq!(code, 0);
    assert!(r["checks"].as_array().unwrap().len() >= 15);
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["status"] == "pass"));
}

#[test]
fn verify_only_filters() {
    let (code, r) = json_report(&["verify", "--only", "hnh"]);
    assert_eq!(code, 0);
    let checks = r["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 1);
    assert_eq!(checks[0]["name"], "hnh");
}

#[test]
fn unknown_check_is_usage_error() {
    let out = qgame(&["verify", "--only", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hnh"));
}

#[test]
fn reports_validate_against_schema() {
    let schema = validator();
    let gaussian = docs("gaussian.json");
    let runs: Vec<Vec<&str>> = vec![
        vec!["verify"],
        vec!["newcomb", "--breaker", "qutrojan"],
        vec!["newcomb", "--breaker", "random", "--trials", "500"],
        vec!["gamble", "--trials", "2000"],
        vec!["walk", "--trials", "2000", "--timing"],
        vec!["market", gaussian.to_str().unwrap()],
        vec!["qfa", "--preset", "flip"],
    ];
    for args in runs {
        let (_, r) = json_report(&args);
        let msgs: Vec<String> = match schema.validate(&r) {
            Ok(()) => Vec::new(),
            Err(errors) => errors.map(|e| e.to_string()).collect(),
        };
        assert!(msgs.is_empty(), "{args:?}: {msgs:?}");
    }
}

#[test]
fn honest_gamble_without_verification_has_zero_payoff() {
    let (code, r) = json_report(&["gamble", "--p-verify", "0", "--trials", "5000"]);
    assert_eq!(code, 0);
    let row = &table(&r, "payoff")["rows"][0];
    assert!(row[3].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(check(&r, "zero_sum")["max_deviation"], 0.0);
}

#[test]
fn sweep_emits_101_rows() {
    let out = qgame(&["gamble", "--sweep", "--trials", "500", "--output", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let block = text.split("# table: sweep\n").nth(1).expect("sweep block");
    let block = block.split("\n\n").next().unwrap();
    let mut lines = block.lines();
    assert_eq!(lines.next(), Some("theta,e_bob_exact,e_bob_empirical,half_width"));
    assert_eq!(lines.count(), 101);
}

#[test]
fn invalid_gamble_parameters_exit_two() {
    assert_eq!(qgame(&["gamble", "--p-verify", "1.5"]).status.code(), Some(2));
    assert_eq!(qgame(&["gamble", "--reward", "-1"]).status.code(), Some(2));
}

#[test]
fn walk_single_step_model_is_three_quarters() {
    let (code, r) = json_report(&["walk", "--n-max", "1", "--trials", "20000"]);
    assert_eq!(code, 0);
    let rows = table(&r, "survival")["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][2].as_f64().unwrap(), 0.75);
}

#[test]
fn walk_default_is_within_band() {
    let (code, r) = json_report(&["walk", "--seed", "3"]);
    assert_eq!(code, 0);
    assert!(check(&r, "survival_within_4sigma")["max_deviation"].as_f64().unwrap() <= 4.0);
    assert_eq!(table(&r, "survival")["rows"].as_array().unwrap().len(), 20);
}

#[test]
fn zero_trials_is_usage_error() {
    assert_eq!(qgame(&["walk", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(qgame(&["gamble", "--trials", "0"]).status.code(), Some(2));
}

#[test]
fn market_gaussian_example() {
    let (code, r) = json_report(&["market", docs("gaussian.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    let norm = check(&r, "wigner_normalization");
    assert_eq!(norm["status"], "pass");
    assert!(norm["max_deviation"].as_f64().unwrap() <= 1e-8);
    let row = table(&r, "cdf")["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|row| row[1] == 1.0)
        .unwrap();
    assert!((row[3].as_f64().unwrap() - 0.5).abs() < 1e-8);
    assert!((row[4].as_f64().unwrap() - 0.5).abs() < 1e-8);
    let w = table(&r, "wigner");
    assert_eq!(w["columns"].as_array().unwrap().len(), 257);
    assert_eq!(w["rows"].as_array().unwrap().len(), 256);
}

#[test]
fn market_grid_override() {
    let (code, r) = json_report(&["market", docs("gaussian.json").to_str().unwrap(), "--grid", "128"]);
    assert_eq!(code, 0);
    assert_eq!(table(&r, "wigner")["rows"].as_array().unwrap().len(), 128);
    assert_eq!(qgame(&["market", docs("gaussian.json").to_str().unwrap(), "--grid", "100"]).status.code(), Some(2));
}

#[test]
fn malformed_market_file_exits_two_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"grid\": {\"q_min\": -8, \"q_max\": 8, \"n_points\": 128},\n  \"strategies\": [ oops ]\n}\n").unwrap();
    let out = qgame(&["market", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");

    std::fs::write(&path, r#"{"grid": {"q_min": -8, "q_max": 8, "n_points": 128}, "strategies": [], "extra": 1}"#).unwrap();
    assert_eq!(qgame(&["market", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(qgame(&["market", "/nonexistent/file.json"]).status.code(), Some(2));
}

#[test]
fn newcomb_exact_rows() {
    for (control, breaker, bit) in [("1", "none", 1), ("1", "not", 0), ("0", "qutrojan", 0), ("1", "qutrojan", 0)] {
        let (code, r) = json_report(&["newcomb", "--control", control, "--breaker", breaker]);
        assert_eq!(code, 0);
        let row = &table(&r, "newcomb")["rows"][0];
        assert!((row[2 + bit].as_f64().unwrap() - 1.0).abs() < 1e-12, "{control} {breaker}");
    }
    assert_eq!(qgame(&["newcomb", "--control", "2"]).status.code(), Some(2));
}

#[test]
fn qfa_preset_and_file_agree() {
    let (code, preset) = json_report(&["qfa", "--preset", "flip", "n", "nn", "nnn"]);
    assert_eq!(code, 0);
    let (code, file) = json_report(&["qfa", "--file", docs("flip_qfa.json").to_str().unwrap(), "n", "nn", "nnn"]);
    assert_eq!(code, 0);
    let probs = |r: &Value| -> Vec<f64> {
        table(r, "acceptance")["rows"].as_array().unwrap().iter().map(|row| row[1].as_f64().unwrap()).collect()
    };
    assert_eq!(probs(&preset), vec![1.0, 0.0, 1.0]);
    assert_eq!(probs(&file), probs(&preset));
    let (_, all) = json_report(&["qfa", "--preset", "flip"]);
    // 1 + 2 + 4 + 8 words over {h, n}
    assert_eq!(table(&all, "acceptance")["rows"].as_array().unwrap().len(), 15);
}

#[test]
fn sampled_output_is_deterministic() {
    let cases: [&[&str]; 3] = [
        &["gamble", "--trials", "20000", "--seed", "9", "--theta", "0.5"],
        &["walk", "--trials", "20000", "--seed", "9"],
        &["newcomb", "--breaker", "random", "--trials", "20000", "--seed", "9"],
    ];
    for args in cases {
        for format in ["json", "csv", "text"] {
            let mut a = args.to_vec();
            a.extend(["--output", format]);
            let first = qgame(&a).stdout;
            assert_eq!(first, qgame(&a).stdout, "{args:?} {format}");
            a.push("--sequential");
            assert_eq!(first, qgame(&a).stdout, "{args:?} {format} sequential");
        }
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = qgame(&["verify", "--only", "h_squared", "--output", "json", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["command"], "verify");
}

#[test]
fn failing_check_exits_one() {
    // a single trial has zero sample variance, so the band collapses to a point
    let (code, r) = json_report(&["gamble", "--trials", "1", "--theta", "0.5"]);
    assert_eq!(code, 1);
    let c = check(&r, "empirical_within_half_width");
    assert_eq!(c["status"], "fail");
    assert!(c["max_deviation"].as_f64().unwrap() > c["tolerance"].as_f64().unwrap());
    assert_eq!(check(&r, "zero_sum")["status"], "pass");
}
