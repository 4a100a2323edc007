//! End-to-end smoke tests of the command-line interface: each subcommand
//! runs against a small generated dataset, and the error paths map to
//! their documented exit codes (2 config, 3 data).

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thermobench"))
}

fn run_ok(args: &[&str], dir: &Path) -> String {
    let out = bin().args(args).current_dir(dir).output().unwrap();
    assert!(
        out.status.success(),
        "command {:?} failed: {}\n{}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process terminated by signal")
}

#[test]
fn synth_ingest_features_fit_evaluate_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("generated.csv");
    let data_arg = data.to_str().unwrap();

    let out = run_ok(
        &["synth", "--rows", "220", "--missing-rows", "10", "--out", data_arg],
        dir.path(),
    );
    assert!(out.contains("wrote 220 rows"));
    assert!(data.is_file());

    let out = run_ok(&["ingest", "--data", data_arg], dir.path());
    assert!(out.starts_with("clean rows: 210"), "unexpected summary: {out}");

    let out = run_ok(
        &["features", "--recipe", "a", "--data", data_arg],
        dir.path(),
    );
    assert!(out.contains("recipe a: 7 features"), "unexpected: {out}");

    let model = dir.path().join("model.json");
    let model_arg = model.to_str().unwrap();
    let out = run_ok(
        &[
            "fit", "--recipe", "a", "--model", "linear", "--data", data_arg, "--out", model_arg,
        ],
        dir.path(),
    );
    assert!(out.contains("test MAE"), "unexpected: {out}");
    assert!(model.is_file());

    let out = run_ok(
        &[
            "evaluate", "--recipe", "a", "--model", model_arg, "--data", data_arg,
        ],
        dir.path(),
    );
    assert!(out.contains("test MAE") && out.contains("rows"), "unexpected: {out}");
}

#[test]
fn report_commands_write_their_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let reports = dir.path().join("reports");
    let reports_arg = reports.to_str().unwrap();

    let out = run_ok(
        &["table-iv", "--seeds", "0,1", "--out", reports_arg],
        dir.path(),
    );
    assert!(out.starts_with("label,count,"));
    assert_eq!(out.lines().count(), 7, "six recipes plus header");
    assert!(reports.join("table_iv.csv").is_file());
    assert!(reports.join("table_iv.json").is_file());

    let out = run_ok(
        &[
            "fig2", "--max-reps", "2", "--seeds", "0", "--out", reports_arg, "--format", "csv",
        ],
        dir.path(),
    );
    assert_eq!(out.lines().count(), 7, "three replica counts, two rows each, plus header");
    assert!(reports.join("fig_2.csv").is_file());
    assert!(!reports.join("fig_2.json").exists(), "csv format must skip json");

    let out = run_ok(&["select", "--seeds", "0", "--out", reports_arg], dir.path());
    assert!(out.starts_with("feature,score_mean,"));
    assert_eq!(out.lines().count(), 8, "seven facial features plus header");
    assert!(reports.join("feature_ranking.csv").is_file());
}

#[test]
fn sbs_audit_reports_both_rows() {
    let dir = tempfile::tempdir().unwrap();
    let reports = dir.path().join("reports");
    let out = run_ok(
        &[
            "sbs-audit", "--seeds", "0", "--out", reports.to_str().unwrap(), "--format", "csv",
        ],
        dir.path(),
    );
    assert!(out.contains("sbs,11,"), "unexpected: {out}");
    assert!(out.contains("recipe_f,,"), "unexpected: {out}");
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();

    let out = bin()
        .args(["table-iv", "--format", "xml"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("format"));

    let out = bin()
        .args(["fit", "--model", "oracle"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);

    let out = bin()
        .args(["table-vi", "--arch", "99"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("out of range"));
}

#[test]
fn data_errors_exit_with_code_3() {
    let dir = tempfile::tempdir().unwrap();

    let out = bin()
        .args(["ingest", "--data", "/nonexistent/missing.csv"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 3);

    let out = bin()
        .args(["evaluate", "--model", "/nonexistent/model.json"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    // The config file points at a dataset that does not exist, so ingest
    // must fail with a data error instead of falling back to the
    // generator.
    let body = serde_json::json!({
        "data": dir.path().join("missing-from-config.csv"),
        "schema": null,
        "synth": { "n_rows": 1020, "missing_rows": 61, "seed": 17 },
        "test_fraction": 290.0 / 959.0,
        "seeds": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
        "cv_folds": 5,
        "cnn_epochs": 400
    });
    std::fs::write(&config, serde_json::to_string_pretty(&body).unwrap()).unwrap();

    // Without the config the generator takes over and ingest succeeds.
    let out = bin()
        .args(["ingest"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0);

    let out = bin()
        .args(["ingest", "--config", config.to_str().unwrap()])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 3, "config file data path must win");

    // An invalid field in the config file is a config error.
    let bad = dir.path().join("bad.json");
    let mut body = body;
    body["cv_folds"] = serde_json::json!(1);
    body["data"] = serde_json::Value::Null;
    std::fs::write(&bad, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    let out = bin()
        .args(["ingest", "--config", bad.to_str().unwrap()])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn data_dir_environment_is_weakest() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("envdata");
    std::fs::create_dir_all(&env_dir).unwrap();

    // Generate a small dataset into the env directory under the expected
    // file name.
    run_ok(
        &[
            "synth", "--rows", "150", "--missing-rows", "5", "--out",
            env_dir.join("thermography.csv").to_str().unwrap(),
        ],
        dir.path(),
    );

    // The env-provided dataset is picked up when no flag is given.
    let out = bin()
        .args(["ingest"])
        .env("THERMOBENCH_DATA_DIR", env_dir.to_str().unwrap())
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("clean rows: 145"), "unexpected: {stdout}");

    // An explicit flag overrides the environment.
    let flag_data = dir.path().join("flag.csv");
    run_ok(
        &[
            "synth", "--rows", "120", "--missing-rows", "0", "--out",
            flag_data.to_str().unwrap(),
        ],
        dir.path(),
    );
    let out = bin()
        .args(["ingest", "--data", flag_data.to_str().unwrap()])
        .env("THERMOBENCH_DATA_DIR", env_dir.to_str().unwrap())
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("clean rows: 120"), "unexpected: {stdout}");
}
