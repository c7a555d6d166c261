use std::process::{Command, Output};

use serde_json::Value;

fn twoweight(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twoweight")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// (e^R - 1) / R^(2 - 2 alpha) by a midpoint rule on the integral of e^t over [0, R].
fn a2_oracle(r: f64, alpha: f64) -> f64 {
    let n = 200_000;
    let h = r / n as f64;
    let integral: f64 = (0..n).map(|i| ((i as f64 + 0.5) * h).exp() * h).sum();
    integral / r.powf(2.0 - 2.0 * alpha)
}

#[test]
fn counterexample_maximal_matches_goldens() {
    let out = twoweight(&["counterexample", "maximal"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["pass"], true);
    let golden = [(2.0, 1.597), (5.0, 5.897), (10.0, 220.3)];
    for (row, (r, g)) in v["report"]["a2"].as_array().unwrap().iter().zip(golden) {
        let computed = row["computed"].as_f64().unwrap();
        assert!((computed - a2_oracle(r, 0.0)).abs() <= 1e-6 * computed);
        assert!((computed - g).abs() <= 0.01 * g);
    }
    let sweep = &v["report"]["sweep"];
    assert_eq!(sweep["intervals"], 14216);
    assert!(sweep["max_ratio"].as_f64().unwrap() < 6f64.exp() / 3.0);
}

#[test]
fn counterexample_fractional_reports_a2_alpha() {
    let out = twoweight(&["counterexample", "fractional", "--alpha", "0.5"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    for row in v["report"]["a2"].as_array().unwrap() {
        let r: f64 = row["r"].as_str().unwrap().parse().unwrap();
        let computed = row["computed"].as_f64().unwrap();
        assert!((computed - a2_oracle(r, 0.5)).abs() <= 1e-6 * computed);
    }
}

#[test]
fn swapped_ratio_grows() {
    let out = twoweight(&["counterexample", "swapped", "--values", "5,10"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert!(v["report"]["growth_10_over_5"].as_f64().unwrap() >= 10.0);
}

#[test]
fn lebesgue_constants_are_one() {
    let out = twoweight(&["constants", "--pair", "lebesgue", "--window", "[0,4)", "--constants", "a2,testing"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    let reports = v["report"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        assert!((r["value"].as_f64().unwrap() - 1.0).abs() < 1e-9, "{r}");
    }
}

#[test]
fn outputs_are_deterministic_and_carry_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let json = dir.path().join(format!("{tag}.json"));
        let csv = dir.path().join(format!("{tag}.csv"));
        let out = twoweight(&[
            "constants",
            "--pair",
            "counterexample",
            "--window",
            "[-2,2)",
            "--json",
            json.to_str().unwrap(),
            "--csv",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        (std::fs::read(json).unwrap(), std::fs::read_to_string(csv).unwrap())
    };
    let (j1, c1) = run("a");
    let (j2, c2) = run("b");
    assert_eq!(j1, j2);
    assert_eq!(c1, c2);
    let v: Value = serde_json::from_slice(&j1).unwrap();
    let hash = v["meta"]["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(c1.lines().next().unwrap().contains(&format!("config_hash={hash}")));
    assert!(c1.lines().next().unwrap().contains("seed=0"));
}

#[test]
fn missing_measure_file_is_a_usage_error() {
    let out = twoweight(&["constants", "--sigma", "/nonexistent/sigma.json", "--omega", "/nonexistent/o.json"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma.json"));
}

#[test]
fn malformed_config_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"window\": 3,\n}").unwrap();
    let out = twoweight(&["constants", "--pair", "lebesgue", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn unknown_field_in_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"windw": {"lo": [0], "hi": [1]}}"#).unwrap();
    let out = twoweight(&["constants", "--pair", "lebesgue", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"window": {"lo": ["0"], "hi": ["8"]}, "constants": ["a2"]}"#).unwrap();
    let with_file =
        stdout_json(&twoweight(&["constants", "--pair", "lebesgue", "--window", "[0,4)", "--config", path.to_str().unwrap()]));
    let plain = stdout_json(&twoweight(&["constants", "--pair", "lebesgue", "--window", "[0,8)", "--constants", "a2"]));
    assert_eq!(with_file["report"], plain["report"]);
    assert_eq!(with_file["report"][0]["witness"]["cube"], "[0,1/2)");
}

#[test]
fn verify_bundled_instances() {
    for (name, expected) in [("lebesgue-smoke", 0), ("lacunary-sigma", 0), ("m1-negative", 1)] {
        let out = twoweight(&["verify", name]);
        assert_eq!(code(&out), expected, "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(stdout_json(&out)["pass"], expected == 0);
    }
    assert_eq!(code(&twoweight(&["verify", "no-such-instance"])), 2);
}

#[test]
fn verify_fractional_random() {
    let out = twoweight(&["verify", "random", "--fractional", "--seed", "1"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["meta"]["seed"], 1);
    assert_eq!(v["report"]["good_lambda"]["rows"].as_array().unwrap().len(), 16);
}

#[test]
fn whitney_on_two_boxes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("w.csv");
    let out = twoweight(&[
        "whitney",
        "--box",
        "[0,1)x[0,1)",
        "--box",
        "[1/2,2)x[1/4,3/4)",
        "--window",
        "[-2,4)x[-2,4)",
        "--h",
        "1/16",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["pass"], true);
    let cubes = v["report"]["cubes"].as_array().unwrap().len();
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("# command=whitney"));
    assert_eq!(text.lines().count(), cubes + 2);
}

#[test]
fn whitney_without_boxes_is_a_usage_error() {
    assert_eq!(code(&twoweight(&["whitney", "--window", "[0,1)", "--h", "1/8"])), 2);
}

#[test]
fn sweep_lambda_writes_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let out = twoweight(&[
        "sweep",
        "--pair",
        "counterexample",
        "--window",
        "[-2,2)",
        "--param",
        "lambda",
        "--values",
        "2,3,4",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(csv).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.starts_with("lambda,")));
}

#[test]
fn sweep_rejects_unknown_parameter() {
    let out = twoweight(&["sweep", "--pair", "lebesgue", "--window", "[0,4)", "--param", "beta", "--values", "1"]);
    assert_eq!(code(&out), 2);
}
