use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lsrefit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"{"n": 40, "p": 80, "s": 4, "sigma": 0.5, "kappa": 0.6, "seed": 99, "repetitions": 6}"#;

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
    assert_eq!(code(&run(&["simulate", "--help"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["simulate", "--out", "x"])), 1);
}

#[test]
fn invalid_inputs_exit_one() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&run(&["simulate", "--scenario", missing.to_str().unwrap(), "--out", out])), 1);

    let extra = write(dir.path(), "extra.json", r#"{"n": 4, "p": 2, "s": 1, "sigma": 1, "kappa": 0, "seed": 1, "repetitions": 1, "rho": 3}"#);
    assert_eq!(code(&run(&["simulate", "--scenario", extra.to_str().unwrap(), "--out", out])), 1);

    let bad_s = write(dir.path(), "bad.json", r#"{"n": 4, "p": 2, "s": 3, "sigma": 1, "kappa": 0, "seed": 1, "repetitions": 1}"#);
    assert_eq!(code(&run(&["simulate", "--scenario", bad_s.to_str().unwrap(), "--out", out])), 1);

    let ok = write(dir.path(), "ok.json", SMALL);
    let ok = ok.to_str().unwrap();
    assert_eq!(code(&run(&["simulate", "--scenario", ok, "--c-pred", "1.5", "--out", out])), 1);
    assert_eq!(code(&run(&["simulate", "--scenario", ok, "--lambda", "-2", "--out", out])), 1);
    assert_eq!(code(&run(&["simulate", "--scenario", ok, "--reps", "0", "--out", out])), 1);
}

#[test]
fn empty_settings_list_is_rejected() {
    let dir = TempDir::new().unwrap();
    let settings = write(dir.path(), "settings.json", "[]");
    let out = run(&["table", "--settings", settings.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn simulate_writes_csv_sidecar_and_manifest() {
    let dir = TempDir::new().unwrap();
    let scenario = write(dir.path(), "small.json", SMALL);
    let out_dir = dir.path().join("out");
    let out = run(&["simulate", "--scenario", scenario.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(out_dir.join("small.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "setting,estimator,metric,mean,se,repetitions,ls_pred_fraction,ls_est_fraction");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r.starts_with("small,")));
    let fields = |estimator: &str, metric: &str| -> Vec<String> {
        let prefix = format!("small,{estimator},{metric},");
        rows.iter().find(|r| r.starts_with(&prefix)).unwrap().split(',').map(str::to_string).collect()
    };
    let ls = fields("ls_lasso", "pred_error");
    assert_eq!(ls[5], "6");
    assert_eq!((ls[6].parse::<f64>().unwrap(), ls[7].parse::<f64>().unwrap()), (1.0, 1.0));
    let zero = fields("zero", "est_error");
    assert_eq!(zero[4].parse::<f64>().unwrap(), 0.0);
    assert_eq!((zero[6].parse::<f64>().unwrap(), zero[7].parse::<f64>().unwrap()), (0.0, 0.0));

    let sidecar: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("small.json")).unwrap()).unwrap();
    assert_eq!(sidecar["scenario"]["n"], 40);
    assert!(sidecar["prng"].as_str().unwrap().contains("ChaCha20"));
    assert_eq!(sidecar["c_pred"], 0.4);
    assert_eq!(sidecar["c_est"], 0.2);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    let artifacts: Vec<String> =
        manifest["artifacts"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    assert_eq!(artifacts.len(), 3);
    assert!(artifacts.iter().all(|a| Path::new(a).exists()));
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let dir = TempDir::new().unwrap();
    let scenario = write(dir.path(), "det.json", &SMALL.replace("\"repetitions\": 6", "\"repetitions\": 1"));
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "4", "1"].iter().enumerate() {
        let out_dir = dir.path().join(format!("run{i}"));
        let out = bin()
            .env("RAYON_NUM_THREADS", threads)
            .args(["simulate", "--scenario", scenario.to_str().unwrap(), "--reps", "5", "--out", out_dir.to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        outputs.push(fs::read(out_dir.join("det.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);

    let other = dir.path().join("other");
    run(&["simulate", "--scenario", scenario.to_str().unwrap(), "--reps", "5", "--seed", "100", "--out", other.to_str().unwrap()]);
    assert_ne!(outputs[0], fs::read(other.join("det.csv")).unwrap());
}

#[test]
fn verify_handles_empty_supports() {
    let dir = TempDir::new().unwrap();
    let scenario = write(
        dir.path(),
        "null.json",
        r#"{"n": 30, "p": 50, "s": 0, "sigma": 20, "kappa": 0.3, "seed": 5, "repetitions": 20}"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&["verify", "--scenario", scenario.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("null.verify.json")).unwrap()).unwrap();
    assert!(report["summary"]["empty_supports"].as_u64().unwrap() > 0);

    let sim = run(&["simulate", "--scenario", scenario.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&sim), 0);
}

#[test]
fn table_combines_settings() {
    let dir = TempDir::new().unwrap();
    let settings = write(
        dir.path(),
        "settings.json",
        r#"[
            {"name": "a", "scenario": {"n": 30, "p": 60, "s": 3, "sigma": 0.3, "kappa": 0.0, "seed": 1, "repetitions": 3}},
            {"name": "b", "scenario": {"n": 30, "p": 60, "s": 3, "sigma": 0.3, "kappa": 0.9, "seed": 1, "repetitions": 3}}
        ]"#,
    );
    let out_dir = dir.path().join("out");
    let out = run(&["table", "--settings", settings.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("table.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 16);
    assert!(csv.lines().skip(1).take(16).all(|l| l.starts_with("a,")));
    assert!(out_dir.join("table.txt").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("c_ls_lasso"));
}
