//! End-to-end checks of the command-line binary: exit codes, config
//! resolution precedence, and artifact determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn permrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_permrl"))
        .args(args)
        .output()
        .expect("binary should launch")
}

fn tiny_overrides() -> Vec<&'static str> {
    vec![
        "--set", "episodes=2",
        "--set", "free_steps_per_episode=2",
        "--set", "policy_batches_per_episode=3",
        "--set", "batch_size=4",
        "--set", "n_groups=3",
        "--set", "part_extent=2",
        "--set", "n_pattern_classes=3",
        "--set", "n_train=24",
        "--set", "n_val=6",
        "--set", "n_test=4",
        "--set", "spatial_perms=8",
        "--set", "temporal_perms=6",
        "--set", "frames=3",
        "--set", "encoder_dim=6",
        "--set", "head_dim=6",
        "--set", "spatial_hidden_dim=8",
        "--set", "lstm_dim=5",
        "--set", "policy_hidden_dim=4",
    ]
}

#[test]
fn gen_perms_succeeds_and_reports_the_pool() {
    let out = permrl(&["gen-perms", "--n", "4", "--size", "24", "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["n"], 4);
    assert_eq!(summary["size"], 24);
    assert!(summary["min_pairwise_hamming"].as_u64().unwrap() >= 2);
}

#[test]
fn unknown_config_keys_exit_with_code_two() {
    let out = permrl(&["--set", "not_a_field=1", "make-data"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not_a_field"), "{err}");
}

#[test]
fn invalid_config_values_exit_with_code_two() {
    let out = permrl(&["--set", "episodes=0", "--out", "/tmp/never_written", "train"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        !Path::new("/tmp/never_written").exists(),
        "a rejected config must not leave artifacts"
    );
}

#[test]
fn train_without_an_output_directory_is_a_usage_error() {
    let out = permrl(&["train"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_run_directory_is_a_runtime_failure() {
    let out = permrl(&["selection-report", "--run", "/tmp/no_such_run_dir_anywhere"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_applies_and_set_overrides_it() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    fs::write(
        &config_path,
        r#"{"n_train": 40, "n_val": 5, "n_test": 3, "part_extent": 2, "n_pattern_classes": 2}"#,
    )
    .unwrap();

    let out = permrl(&[
        "--config",
        config_path.to_str().unwrap(),
        "--set",
        "n_train=16",
        "make-data",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["n_train"], 16, "--set must win over the file");
    assert_eq!(summary["n_val"], 5, "file values apply when not overridden");
}

#[test]
fn identically_seeded_runs_produce_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out_dir in [&a, &b] {
        let mut args = vec!["train", "--seed", "29", "--out", out_dir.to_str().unwrap()];
        args.extend(tiny_overrides());
        let out = permrl(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in [
        "config.json",
        "metrics.jsonl",
        "episodes.jsonl",
        "model.ckpt",
        "policy_spatial.ckpt",
        "policy_temporal.ckpt",
        "perms_spatial.txt",
        "perms_temporal.txt",
    ] {
        let bytes_a = fs::read(a.join(name)).unwrap();
        let bytes_b = fs::read(b.join(name)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{name} differs between identical runs");
    }
}

#[test]
fn reports_run_from_training_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let mut args = vec!["train", "--seed", "31", "--out", run.to_str().unwrap()];
    args.extend(tiny_overrides());
    assert!(permrl(&args).status.success());

    let report = permrl(&["selection-report", "--run", run.to_str().unwrap()]);
    assert!(report.status.success());
    for task in ["spatial", "temporal"] {
        let csv =
            fs::read_to_string(run.join(format!("selection_quartiles_{task}.csv"))).unwrap();
        assert!(csv.starts_with("episode,quartile,frequency\n"), "{csv}");
        // 2 episodes × 4 quartiles + header
        assert_eq!(csv.lines().count(), 9, "{csv}");
    }

    let heatmap = permrl(&["error-heatmap", "--run", run.to_str().unwrap(), "--task", "spatial"]);
    assert!(heatmap.status.success());
    let text = String::from_utf8_lossy(&heatmap.stdout);
    // 8 spatial permutations + header; pre+post validations over 2 episodes.
    assert_eq!(text.lines().count(), 9, "{text}");
    assert!(text.starts_with("perm,mean,v0,v1,v2,v3\n"), "{text}");

    let cost = permrl(&["cost-report", "--run", run.to_str().unwrap()]);
    assert!(cost.status.success());
    let text = String::from_utf8_lossy(&cost.stdout);
    assert!(text.contains("measured overhead"), "{text}");
    assert!(text.contains("predicted overhead"), "{text}");
}
