use std::process::{Command, Output};

use ptess::processes::TessellationSample;

fn ptess(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptess")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn analytic_prints_value_and_log() {
    let o = ptess(&["analytic", "zero_cell_volume", "--n", "2", "--gamma", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let value = v["value"].as_f64().unwrap();
    assert!((value - std::f64::consts::PI.powi(3) / 2.0).abs() < 1e-12);
    assert!((v["log_value"].as_f64().unwrap() - value.ln()).abs() < 1e-12);
}

#[test]
fn sample_emits_a_loadable_tessellation() {
    let o = ptess(&["sample", "--n", "3", "--gamma", "2", "--seed", "4"]);
    assert!(o.status.success());
    let ts = TessellationSample::from_json(&stdout(&o)).unwrap();
    assert_eq!(ts.dim, 3);
    assert_eq!(ts.seed, 4);
    assert!(!ts.is_empty());
}

#[test]
fn estimate_csv_has_oracle_columns() {
    let o = ptess(&["estimate", "--metric", "point_in_Z0:1", "--n", "3", "--gamma", "1", "--reps", "2000"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    for col in ["mean", "std_err", "oracle", "within_3se", "excluded_fraction"] {
        assert!(headers.iter().any(|h| h == col), "missing {col}");
    }
    assert_eq!(rdr.records().count(), 1);
}

#[test]
fn flags_override_the_config_file() {
    let dir = std::env::temp_dir().join(format!("ptess-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.json");
    std::fs::write(&cfg, r#"{"n": 3, "gamma": 2.0, "metric": "zero_volume", "reps": 50, "seed": 9}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = stdout(&ptess(&["estimate", "--config", cfg]));
    let overridden = stdout(&ptess(&["estimate", "--config", cfg, "--n", "2"]));
    let row = |t: &str| t.lines().nth(1).unwrap().to_string();
    assert!(row(&from_file).starts_with("zero_volume,isotropic,3,2,9,"), "{from_file}");
    assert!(row(&overridden).starts_with("zero_volume,isotropic,2,2,9,"), "{overridden}");
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"dimension": 3}"#).unwrap();
    assert_eq!(ptess(&["estimate", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn bad_input_exits_with_code_two() {
    assert_eq!(ptess(&["estimate", "--metric", "nope"]).status.code(), Some(2));
    assert_eq!(ptess(&["facet-check", "--n", "5", "--m", "6"]).status.code(), Some(2));
}

#[test]
fn rho_alpha_sets_gamma() {
    let o = ptess(&["analytic", "zero_cell_volume", "--n", "4", "--rho", "0.5", "--alpha", "1"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["params"]["gamma"].as_f64(), Some(2.0));
}

#[test]
fn codec_json_lines_one_per_trial() {
    let o = ptess(&["codec", "--n", "2", "--gamma", "1", "--trials", "25", "--seed", "3"]);
    assert!(o.status.success());
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 25);
    assert!(lines.iter().all(|l| l["code_hash"].as_str().is_some_and(|h| h.len() == 64)));
}
