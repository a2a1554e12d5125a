//! End-to-end tests of the `lamperti` binary: subcommand output, manifest
//! policy, rerun determinism and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lamperti"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("lamperti_cli_tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn simulate_zero_model_prints_start_value() {
    let dir = tmp_dir("simulate_zero");
    let out = run(&[
        "simulate",
        "--model",
        "zero",
        "--x",
        "3",
        "--alpha",
        "2",
        "--times",
        "1",
        "--n",
        "100",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(
        stdout(&out).contains("X^(100)_1 = 3"),
        "stdout: {}",
        stdout(&out)
    );
    assert!(dir.join("manifest.txt").exists());
    assert!(dir.join("sample.csv").exists());
}

#[test]
fn error_experiment_writes_expected_files_and_is_deterministic() {
    let dir_a = tmp_dir("exp_a");
    let dir_b = tmp_dir("exp_b");
    let args = |dir: &Path| -> Vec<String> {
        [
            "error-experiment",
            "--model",
            "bessel3",
            "--n-list",
            "5,10",
            "--fine-n",
            "500",
            "--reps",
            "60",
            "--seed",
            "42",
            "--out",
            dir.to_str().unwrap(),
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    };
    let out_a = bin().args(args(&dir_a)).output().unwrap();
    assert_eq!(
        out_a.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out_a.stderr)
    );
    let out_b = bin()
        .args(args(&dir_b))
        .args(["--workers", "2"])
        .output()
        .unwrap();
    assert_eq!(out_b.status.code(), Some(0));

    for name in [
        "records_n5.csv",
        "records_n10.csv",
        "hist_inverse_n5.csv",
        "hist_relative_n10.csv",
        "hist_timeshift_n10.csv",
        "summary.csv",
        "manifest.txt",
    ] {
        assert!(dir_a.join(name).exists(), "missing {name}");
    }
    // identical seeds give byte-identical outputs regardless of workers
    for name in [
        "records_n5.csv",
        "records_n10.csv",
        "summary.csv",
        "hist_inverse_n10.csv",
    ] {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
    // manifest echoes the resolved configuration
    let manifest = std::fs::read_to_string(dir_a.join("manifest.txt")).unwrap();
    assert!(manifest.contains("subcommand = error-experiment"));
    assert!(manifest.contains("seed = 42"));
    assert!(manifest.contains("experiment.fine_n = 500"));
    assert!(manifest.contains("model.mu = 0.5"));
}

#[test]
fn config_file_and_overrides_resolve_in_order() {
    let dir = tmp_dir("config_file");
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        "[model]\nkind = brownian_drift\nmu = 0.25\nsigma = 1\n\n[experiment]\nalpha = 2\nn = 10\ntimes = 0.5\n",
    )
    .unwrap();
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "model.mu=0.75",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest = std::fs::read_to_string(dir.join("manifest.txt")).unwrap();
    assert!(
        manifest.contains("model.mu = 0.75"),
        "override should win: {manifest}"
    );
    assert!(manifest.contains("experiment.n = 10"));
}

#[test]
fn zoom_and_frac_and_oracle_run_small() {
    let dir = tmp_dir("zoom");
    let out = run(&[
        "zoom-experiment",
        "--model",
        "bessel3",
        "--n",
        "200",
        "--reps",
        "150",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("KS vs normal"));
    assert!(dir.join("zoom.csv").exists());

    let dir = tmp_dir("frac");
    let out = run(&[
        "frac-uniformity",
        "--model",
        "bessel3",
        "--fine-n",
        "2000",
        "--reps",
        "200",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.join("fracs.csv").exists());

    let dir = tmp_dir("oracle");
    let out = run(&[
        "oracle-compare",
        "--n",
        "500",
        "--reps",
        "300",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("KS ="));
    assert!(dir.join("samples.csv").exists());
}

#[test]
fn validation_errors_exit_one() {
    // unknown flag
    let out = run(&["simulate", "--definitely-not-a-flag"]);
    assert_eq!(out.status.code(), Some(1));
    // inadmissible stable parameters, named field in the message
    let dir = tmp_dir("bad_model");
    let out = run(&[
        "simulate",
        "--model",
        "stable",
        "--set",
        "model.stability=1.5",
        "--set",
        "model.positivity=0.9",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("positivity"));
    // malformed config file
    let cfg = dir.join("broken.cfg");
    std::fs::write(&cfg, "this is not key value\n").unwrap();
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    // unknown config key
    let out = run(&[
        "simulate",
        "--model",
        "zero",
        "--set",
        "experiment.typo=1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    // uncreatable output directory
    let out = run(&["simulate", "--model", "zero", "--out", "/dev/null/nested"]);
    assert_eq!(out.status.code(), Some(1));
    // non-numeric value for a numeric key
    let out = run(&[
        "simulate",
        "--model",
        "zero",
        "--set",
        "experiment.alpha=abc",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_two_with_manifest_already_written() {
    // downward drift never drives the clock to r; the horizon cap trips
    let dir = tmp_dir("cap");
    let out = run(&[
        "simulate",
        "--model",
        "brownian_drift",
        "--set",
        "model.mu=-5",
        "--set",
        "model.sigma=0",
        "--set",
        "experiment.horizon_cap=8",
        "--alpha",
        "1",
        "--times",
        "10",
        "--n",
        "4",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizon cap"));
    // manifest-first policy: the failed run is still diagnosable
    assert!(dir.join("manifest.txt").exists());
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    for sub in [
        "simulate",
        "error-experiment",
        "zoom-experiment",
        "oracle-compare",
        "frac-uniformity",
    ] {
        assert!(stdout(&out).contains(sub), "help misses {sub}");
    }
    let out = run(&["error-experiment", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("--fine-n"));
}

#[test]
fn env_var_sets_default_out_dir() {
    let dir = tmp_dir("env_out");
    let out = bin()
        .args([
            "simulate", "--model", "zero", "--x", "2", "--alpha", "1", "--times", "1", "--n", "10",
        ])
        .env("LAMPERTI_OUT", &dir)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.join("manifest.txt").exists());
}
