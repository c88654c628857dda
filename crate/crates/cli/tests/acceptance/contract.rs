//! Exit codes, examples and output format of the `annuli` binary.

use std::process::{Command, Output};

use serde_json::Value;

pub fn annuli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_annuli"))
        .args(args)
        .env_remove("ANNULI_ENUM_BUDGET")
        .output()
        .expect("binary runs")
}

pub fn summary(args: &[&str]) -> Value {
    let out = annuli(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    assert_eq!(v["schema"], "annuli/1");
    v
}

fn code(args: &[&str]) -> i32 {
    annuli(args).status.code().expect("exited")
}

#[test]
fn exit_code_matrix() {
    let cases: &[(&[&str], i32)] = &[
        (&[], 2),
        (&["frobnicate"], 2),
        (&["--help"], 0),
        (&["--version"], 0),
        (&["--threads", "0", "count", "--alpha", "0", "--beta", "1", "--t", "1"], 2),
        (&["count", "--alpha", "0", "--t", "1"], 2),
        (&["count", "--alpha", "0", "--beta", "1", "--t", "abc"], 2),
        (&["count", "--alpha", "0", "--beta", "1", "--t", "-1"], 1),
        (&["count", "--alpha", "0", "--beta", "0", "--t", "1"], 1),
        (&["count", "--alpha", "0", "--beta", "1", "--t", "1", "--rho", "0"], 1),
        (&["distribution", "--T", "1000", "--samples", "1", "--seed", "7"], 1),
        (&["distribution", "--T", "1000", "--samples", "10"], 2),
        (&["distribution", "--T", "1000", "--samples", "10", "--seed", "1", "--rho", "0.1", "--rho-exponent", "0.1"], 2),
        (&["distribution", "--T", "-5", "--samples", "10", "--seed", "1"], 1),
        (&["distribution", "--T", "1000", "--samples", "10", "--seed", "1", "--weight", "gaussian"], 2),
        (&["close-pairs", "--delta", "1"], 2),
        (&["close-pairs", "--R", "1000", "--delta", "-1"], 1),
        (&["close-pairs", "--R", "5,1000", "--delta", "1"], 1),
        (&["close-pairs", "--R", "100", "--delta", "1", "--shell-t", "100"], 3),
        (&["close-pairs", "--R", "100", "--delta", "1", "--shell-t", "5", "--window", "-0.5"], 2),
        (&["close-pairs", "--R", "100", "--delta", "1", "--shell-t", "5", "--window", "0.5,-0.5"], 1),
        (&["dioph"], 2),
        (&["dioph", "--tuple", "sqrt("], 1),
        (&["dioph", "--tuple", "sqrt(2)", "--qmax", "5000"], 3),
        (&["dioph", "--tuple", "sqrt(2),sqrt(3),pi", "--degree", "2", "--qmax", "4"], 2),
        (&["dioph", "--tuple", "0", "--qmax", "4"], 1),
        (&["dioph", "--sqrt-sum", "--m", "7"], 1),
        (&["dioph", "--sqrt-sum", "--tuple", "1"], 2),
        (&["smooth", "--M", "100", "--L", "10"], 2),
        (&["smooth", "--M", "100", "--L", "10", "--t", "5", "--T", "100"], 2),
        (&["smooth", "--M", "-5", "--L", "10", "--t", "100"], 1),
        (&["geometry"], 2),
        (&["geometry", "stretch", "--t", "0"], 1),
        (&["geometry", "stretch", "--basis", "1,x", "--t", "1"], 2),
        (&["geometry", "minima", "--count", "5"], 1),
        (&["geometry", "box", "--basis", "1,0;0,1", "--tau", "1", "--delta", "1"], 1),
        (&["geometry", "box", "--tau", "1e9", "--delta", "1"], 3),
    ];
    for (args, expect) in cases {
        assert_eq!(code(args), *expect, "{args:?}");
    }
}

#[test]
fn budget_variable_is_honored_and_validated() {
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_annuli"))
            .args(["close-pairs", "--R", "1000", "--delta", "1"])
            .env("ANNULI_ENUM_BUDGET", v)
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(run("10"), Some(3));
    assert_eq!(run("abc"), Some(2));
    assert_eq!(run("100000000"), Some(0));
}

#[test]
fn count_examples() {
    let v = summary(&["count", "--alpha", "0", "--beta", "1", "--t", "1"]);
    assert_eq!(v["count"], 5);
    let first = String::from_utf8(annuli(&["count", "--alpha", "0", "--beta", "1", "--t", "1"]).stdout).unwrap();
    assert!(first.starts_with("{\"count\":5,"));
    let v = summary(&["count", "--alpha", "0", "--beta", "1", "--t", "1", "--rho", "1"]);
    assert_eq!(v["count"], 8);
    let v = summary(&["count", "--alpha", "0", "--beta", "1", "--t", "2", "--rho", "1"]);
    assert_eq!(v["count"], 29 - 13);
    let s = v["statistic"].as_f64().unwrap();
    assert!((s - (16.0 - 5.0 * std::f64::consts::PI) / 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn subcommand_examples() {
    let v = summary(&["close-pairs", "--R", "1000", "--delta", "1"]);
    assert_eq!(v["rows"][0]["count"].as_u64().unwrap(), crate::brute_close_pairs(1000.0, 1.0));

    let v = summary(&["close-pairs", "--R", "100", "--delta", "1", "--shell-t", "10", "--window", "-0.5,0.5"]);
    assert_eq!(v["shell"]["a"], -0.5);
    assert_eq!(v["shell"]["b"], 0.5);

    let v = summary(&["dioph", "--tuple", "1.4142135623730951", "--qmax", "1000"]);
    let e = v["fitted_exponent"].as_f64().unwrap();
    assert!((0.8..=1.2).contains(&e), "{e}");

    let v = summary(&["dioph", "--tuple", "sqrt(2),sqrt(3)", "--degree", "2", "--qmax", "8"]);
    assert!(v["relation"].is_object());

    let v = summary(&["geometry", "stretch", "--t", "1"]);
    assert_eq!(v["equality"], true);
    let v = summary(&["geometry", "stretch", "--basis", "1,0,0;0,1,1", "--t", "3"]);
    assert!((v["after"].as_f64().unwrap() - 10f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["holds"], true);

    let v = summary(&["geometry", "box", "--tau", "1", "--delta", "2", "--height", "1"]);
    assert_eq!(v["count"], 12);

    let v = summary(&["geometry", "minima", "--basis", "2,0;0,0.5"]);
    assert_eq!(v["minima"][0]["length"], 0.5);
    assert_eq!(v["minima"][1]["length"], 2.0);

    let v = summary(&["smooth", "--alpha", "0", "--beta", "1", "--M", "400", "--L", "10", "--t", "100"]);
    let row = &v["rows"][0];
    let d = row["smooth_count"].as_f64().unwrap() - row["sharp_count"].as_f64().unwrap();
    assert!(d.abs() < 30.0, "{d}");
}

#[test]
fn csv_files_carry_config_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("series.csv");
    let p = path.to_str().unwrap();
    summary(&["distribution", "--T", "2000", "--samples", "50", "--seed", "3", "--rho", "0.1", "--out", p]);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], format!("# annuli {}", env!("CARGO_PKG_VERSION")));
    let cfg: Value = serde_json::from_str(lines[1].strip_prefix("# config: ").unwrap()).unwrap();
    assert_eq!(cfg["distribution"]["seed"], 3);
    assert_eq!(cfg["distribution"]["T"], 2000.0);
    assert_eq!(lines[2], "t,value,weight");
    assert_eq!(lines.len(), 3 + 50);
    for line in &lines[3..] {
        for cell in line.split(',') {
            let x: f64 = cell.parse().unwrap();
            // 17 significant digits survive a round trip.
            assert_eq!(format!("{x:.16e}"), cell);
        }
    }
}

#[test]
fn json_files_carry_schema_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pairs.json");
    let p = path.to_str().unwrap();
    summary(&["close-pairs", "--R", "100,1000", "--delta", "1", "--out", p, "--format", "json"]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["schema"], "annuli/1");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["config"]["close-pairs"]["delta"], 1.0);
    assert_eq!(v["columns"][0], "R");
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn replay_reproduces_recorded_runs() {
    let dir = tempfile::tempdir().unwrap();
    for (name, args) in [
        ("series.csv", &["distribution", "--T", "2000", "--samples", "40", "--seed", "5", "--rho", "0.1", "--format", "csv"][..]),
        ("pairs.json", &["close-pairs", "--R", "100,300", "--delta", "0.5", "--format", "json"][..]),
    ] {
        let path = dir.path().join(name);
        let p = path.to_str().unwrap();
        let mut full = args.to_vec();
        full.extend(["--out", p]);
        let first = annuli(&full);
        assert!(first.status.success());
        let bytes = std::fs::read(&path).unwrap();
        let saved = dir.path().join(format!("saved-{name}"));
        std::fs::copy(&path, &saved).unwrap();
        std::fs::remove_file(&path).unwrap();
        let again = annuli(&["replay", "--config", saved.to_str().unwrap()]);
        assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
        assert_eq!(again.stdout, first.stdout);
        assert_eq!(std::fs::read(&path).unwrap(), bytes);
    }

    let bare = dir.path().join("bare.json");
    std::fs::write(&bare, r#"{"geometry":{"box":{"basis":[[1,0,0],[0,1,0],[0,0,1]],"tau":1.0,"delta":2.0,"height":1.0}}}"#).unwrap();
    let v: Value = serde_json::from_slice(&annuli(&["replay", "--config", bare.to_str().unwrap()]).stdout).unwrap();
    assert_eq!(v["count"], 12);

    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, r#"{"frobnicate":{}}"#).unwrap();
    assert_eq!(code(&["replay", "--config", junk.to_str().unwrap()]), 1);
    assert_eq!(code(&["replay", "--config", dir.path().join("missing").to_str().unwrap()]), 1);
    assert_eq!(code(&["replay"]), 2);
}
