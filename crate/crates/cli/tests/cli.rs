use std::process::{Command, Output};

use catenoid_cli::run_with_args;
use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_catenoid"));
    cmd.env_clear();
    cmd
}

fn run(args: &[&str]) -> catenoid_cli::Outcome {
    let mut argv = vec!["catenoid"];
    argv.extend_from_slice(args);
    run_with_args(argv).expect("command runs")
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&run(args).text).expect("valid json")
}

fn stdout(out: &Output) -> &str {
    std::str::from_utf8(&out.stdout).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

#[test]
fn constants_json_fields() {
    let v = json(&["constants"]);
    let l = v["L"].as_f64().unwrap();
    assert!((l - 1.199_678_640_257_734).abs() < 1e-14);
    assert!((v["R"].as_f64().unwrap() - l * l.cosh()).abs() < 1e-14);
    assert!(v["residual"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn constants_loose_root_tolerance_agrees() {
    let loose = json(&["--root-tol", "1e-6", "constants"])["L"].as_f64().unwrap();
    let tight = json(&["--root-tol", "1e-12", "constants"])["L"].as_f64().unwrap();
    assert!((loose - tight).abs() <= 1e-6);
}

#[test]
fn csv_headers() {
    let first_line = |args: &[&str]| run(args).text.lines().next().unwrap().to_owned();
    assert_eq!(first_line(&["--format", "csv", "constants"]), "quantity,value");
    assert_eq!(first_line(&["scan", "-m", "0", "-p", "even", "-n", "8"]), "lambda,mismatch,gammaL");
    assert_eq!(first_line(&["eigenfunction", "-m", "0", "-p", "even"]), "x,f");
    assert_eq!(first_line(&["--format", "csv", "verify"]), "name,pass,detail");
}

#[test]
fn csv_uses_lf_only() {
    let text = run(&["scan", "-m", "1", "-p", "even", "-n", "8"]).text;
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
}

#[test]
fn index_defaults() {
    let out = run(&["index"]);
    assert_eq!(out.exit_code, 0);
    let v: Value = serde_json::from_str(&out.text).unwrap();
    assert_eq!(v["index"], 4);
    assert_eq!(v["nullity"], 2);
    assert_eq!(v["oracle"]["counts_agree"], true);
}

#[test]
fn index_higher_modes_add_nothing() {
    let v = json(&["--modes", "0..5", "index"]);
    assert_eq!(v["index"], 4);
    assert_eq!(v["nullity"], 2);
    for r in v["records"].as_array().unwrap() {
        assert!(r["m"].as_u64().unwrap() <= 1, "unexpected record {r}");
    }
    for pm in v["per_mode"].as_array().unwrap() {
        if pm["mode"].as_i64().unwrap().abs() >= 2 {
            assert_eq!(pm["negative"], 0);
            assert_eq!(pm["null"], 0);
        }
    }
}

#[test]
fn skip_oracle_omits_block() {
    let v = json(&["--skip-oracle", "index"]);
    assert!(v.get("oracle").is_none());
    assert_eq!(v["index"], 4);
}

#[test]
fn index_exit_status_only_targets_full_modes() {
    // mode 0 alone gives index 2, which is not a regression
    let out = run(&["--modes", "0", "--skip-oracle", "index"]);
    assert_eq!(out.exit_code, 0);
    let v: Value = serde_json::from_str(&out.text).unwrap();
    assert_eq!(v["index"], 2);
}

#[test]
fn scan_even_mode_zero_has_one_sign_change() {
    let text = run(&["scan", "-m", "0", "-p", "even", "--lambda-min", "0.01", "--lambda-max", "3", "-n", "100"]).text;
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 101);
    let b: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    let changes = b.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
    assert_eq!(changes, 1);
}

#[test]
fn scan_rotation_mode_has_no_positive_root() {
    let text = run(&["scan", "-m", "1", "-p", "odd", "--lambda-min", "0", "--lambda-max", "2", "-n", "100"]).text;
    let b: Vec<f64> = csv_rows(&text)[2..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(b.iter().all(|v| *v < 0.0) || b.iter().all(|v| *v > 0.0));
}

#[test]
fn scan_marks_poles() {
    // at lambda = 0 the even m = 0 shot is 1 - x tanh x, which vanishes at L
    let text = run(&["scan", "-m", "0", "-p", "even", "-n", "4"]).text;
    assert_eq!(csv_rows(&text)[1][2], "pole");
}

#[test]
fn scan_rejects_bad_range() {
    let mut argv = vec!["catenoid", "scan", "-m", "0", "-p", "even", "--lambda-min", "2", "--lambda-max", "1"];
    assert!(run_with_args(argv.clone()).is_err());
    argv[7] = "-1";
    assert!(run_with_args(argv).is_err());
}

#[test]
fn eigenfunction_rotation_matches_closed_form() {
    let text = run(&["eigenfunction", "-m", "1", "-p", "odd", "--which", "0"]).text;
    let rows = csv_rows(&text);
    let last = rows.last().unwrap();
    assert_eq!(last[0], "lambda_star");
    assert_eq!(last[1].parse::<f64>().unwrap(), 0.0);
    let points: Vec<(f64, f64)> = rows[1..rows.len() - 1]
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    let g = |x: f64| x.sinh() + x / x.cosh();
    let (xl, fl) = *points.last().unwrap();
    let scale = fl / g(xl);
    let worst = points.iter().map(|(x, f)| (f - scale * g(*x)).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-7, "max deviation {worst:e}");
}

#[test]
fn eigenfunction_even_profile_satisfies_robin() {
    let v = json(&["--format", "json", "eigenfunction", "-m", "0", "-p", "even"]);
    assert!(v["boundary_residual"].as_f64().unwrap().abs() <= 10.0 * 1e-12);
    let f: Vec<f64> = v["f"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    for (a, b) in f.iter().zip(f.iter().rev()) {
        assert_eq!(a, b);
    }
}

#[test]
fn eigenfunction_unknown_record_is_an_error() {
    assert!(run_with_args(["catenoid", "eigenfunction", "-m", "0", "-p", "even", "--which", "3"]).is_err());
    let out = bin().args(["eigenfunction", "-m", "2", "-p", "odd"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no record"));
}

#[test]
fn verify_json_shape() {
    let out = run(&["verify"]);
    assert_eq!(out.exit_code, 0);
    let v: Value = serde_json::from_str(&out.text).unwrap();
    let checks = v["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    for ch in checks {
        let obj = ch.as_object().unwrap();
        assert_eq!(obj.keys().collect::<Vec<_>>(), ["detail", "name", "pass"]);
        assert_eq!(ch["pass"], true, "{ch}");
    }
}

#[test]
fn sign_flip_breaks_lemma_checks() {
    let out = bin().args(["--potential-sign-flip", "verify"]).output().unwrap();
    assert!(!out.status.success());
    let v: Value = serde_json::from_str(stdout(&out)).unwrap();
    let failed: Vec<&str> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"lemma_even_riccati"));
    assert!(failed.contains(&"lemma_odd_mismatch"));
    assert_eq!(v["pass"], false);
}

#[test]
fn environment_is_overridden_by_flags() {
    let from_env = bin().env("CATENOID_FORMAT", "csv").arg("constants").output().unwrap();
    assert!(stdout(&from_env).starts_with("quantity,value\n"));
    let flag_wins = bin()
        .env("CATENOID_FORMAT", "csv")
        .args(["--format", "json", "constants"])
        .output()
        .unwrap();
    assert!(stdout(&flag_wins).starts_with('{'));

    let modes = bin().env("CATENOID_MODES", "0").args(["--skip-oracle", "index"]).output().unwrap();
    let v: Value = serde_json::from_str(stdout(&modes)).unwrap();
    assert_eq!(v["index"], 2);
}

#[test]
fn environment_values_are_validated() {
    let out = bin().env("CATENOID_N_SCAN", "8").arg("index").output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("constants.json");
    let out = bin().args(["--out", path.to_str().unwrap(), "constants"]).output().unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(written, run(&["constants"]).text);
}

#[test]
fn output_is_deterministic_across_execution_modes() {
    let parallel = run(&["scan", "-m", "1", "-p", "even", "-n", "40"]).text;
    let sequential = run(&["--sequential", "scan", "-m", "1", "-p", "even", "-n", "40"]).text;
    assert_eq!(parallel, sequential);
    assert_eq!(run(&["--skip-oracle", "index"]).text, run(&["--skip-oracle", "--sequential", "index"]).text);
}

#[test]
fn floats_round_trip() {
    let v = json(&["constants"]);
    let text = run(&["constants"]).text;
    let l = v["L"].as_f64().unwrap();
    assert!(text.contains(&format!("{l:.16e}")));
}
