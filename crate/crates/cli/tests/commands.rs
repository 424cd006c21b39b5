use std::fs;
use std::path::Path;
use std::process::Command;

use salamander_cli::commands::{cmd_eval, cmd_rollout, cmd_train, cmd_transition};
use salamander_cli::manifest::{sha256_hex, MANIFEST_FILE};
use salamander_cli::{CliError, CommandSpec, CommonArgs, EvalArgs, RolloutArgs, RunManifest, TrainArgs, TransitionArgs};
use salamander_core::transition::TransitionReport;

/// A few-iteration trainer: 4 envs × 20 steps per iteration.
fn tiny(preset: &str, seed: u64, out: &Path) -> CommonArgs {
    CommonArgs {
        preset: Some(preset.into()),
        config: None,
        overrides: [
            "train.total_steps=240",
            "train.num_envs=4",
            "train.batch_size=1",
            "train.num_minibatches=4",
            "train.hidden=[16, 16]",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
        seed: Some(seed),
        out: Some(out.to_path_buf()),
    }
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

fn read_manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE)).unwrap()).unwrap()
}

#[test]
fn train_writes_one_metrics_row_per_iteration_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        cmd_train(&TrainArgs {
            common: tiny("desk-flat", 7, &tmp.path().join(name)),
            checkpoint_every: 2,
        })
        .unwrap()
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a.metrics.len(), 3);
    assert_eq!(data_rows(&a.out_dir.join("metrics.csv")), 3);
    for f in ["metrics.csv", "policy.ckpt", "checkpoints/iter_000002.ckpt"] {
        assert_eq!(fs::read(a.out_dir.join(f)).unwrap(), fs::read(b.out_dir.join(f)).unwrap(), "{f}");
    }
    let m = read_manifest(&a.out_dir);
    assert_eq!(m.command, "train");
    assert_eq!(m.seed, 7);
    for (name, hash) in &m.output_hashes {
        assert_eq!(&sha256_hex(&fs::read(a.out_dir.join(name)).unwrap()), hash, "{name}");
    }
    assert_eq!(m.output_schemas["metrics.csv"], "train-metrics-v1");
    let entries: Vec<_> = fs::read_dir(&a.out_dir).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries.iter().filter(|n| n.to_string_lossy() == MANIFEST_FILE).count(), 1);
    assert!(!a.out_dir.join(".lock").exists());
}

#[test]
fn zero_policy_eval_reports_near_zero_velocity() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cmd_eval(&EvalArgs {
        common: CommonArgs {
            out: Some(tmp.path().join("eval")),
            ..Default::default()
        },
        checkpoint: None,
        command: CommandSpec::Fixed([0.1, 0.0, 0.0]),
        episodes: 3,
        duration: 4.0,
    })
    .unwrap();
    assert_eq!(out.episodes.len(), 3);
    assert!(out.summary.v_mean.abs() < 0.01, "{:?}", out.summary);
    assert_eq!(out.summary.fall_rate, 0.0);
    assert_eq!(out.summary.v_bx, format!("{:.2} ± {:.2}", out.summary.v_mean, out.summary.v_std));
    let text = fs::read_to_string(out.out_dir.join("eval.csv")).unwrap();
    assert!(text.starts_with("terrain,ruggedness_cm,clearance_pct,slope_deg,command_type,episodes,v_mean,v_std,v_bx"));
    assert_eq!(data_rows(&out.out_dir.join("eval_episodes.csv")), 3);
}

#[test]
fn eval_rejects_fewer_than_three_episodes() {
    let e = cmd_eval(&EvalArgs {
        episodes: 2,
        ..Default::default()
    })
    .unwrap_err();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn rollout_lengths_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, duration: f64| {
        cmd_rollout(&RolloutArgs {
            common: CommonArgs {
                seed: Some(3),
                out: Some(tmp.path().join(name)),
                ..Default::default()
            },
            checkpoint: None,
            command: None,
            duration,
        })
        .unwrap()
    };
    let a = run("a", 20.0);
    assert_eq!(a.summary.rows, 1000);
    assert_eq!(data_rows(&a.out_dir.join("rollout.csv")), 1000);
    let b = run("b", 20.0);
    assert_eq!(
        fs::read(a.out_dir.join("rollout.csv")).unwrap(),
        fs::read(b.out_dir.join("rollout.csv")).unwrap()
    );

    let z = run("zero", 0.0);
    assert!(z.summary.zero_length);
    let text = fs::read_to_string(z.out_dir.join("rollout.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("time,"));
}

#[test]
fn transition_rejects_terrestrial_checkpoint_and_accepts_sigma_policy() {
    let tmp = tempfile::tempdir().unwrap();
    let land = cmd_train(&TrainArgs {
        common: tiny("desk-flat", 1, &tmp.path().join("land")),
        checkpoint_every: 0,
    })
    .unwrap();
    let e = cmd_transition(&TransitionArgs {
        common: CommonArgs {
            out: Some(tmp.path().join("t-land")),
            ..Default::default()
        },
        checkpoint: land.checkpoint.clone(),
        v_cmd: 0.2,
        duration: 1.0,
    })
    .unwrap_err();
    assert!(matches!(e, CliError::IncompatibleCheckpoint(_)));
    assert_eq!(e.exit_code(), 4);
    let msg = e.to_string();
    assert!(msg.contains("dimension mismatch") && msg.contains("desk-transition"), "{msg}");

    let amphibious = cmd_train(&TrainArgs {
        common: tiny("desk-transition", 1, &tmp.path().join("amph")),
        checkpoint_every: 0,
    })
    .unwrap();
    let t = cmd_transition(&TransitionArgs {
        common: CommonArgs {
            out: Some(tmp.path().join("t-amph")),
            ..Default::default()
        },
        checkpoint: amphibious.checkpoint,
        v_cmd: 0.2,
        duration: 2.0,
    })
    .unwrap();
    assert_eq!(t.report.steps, 100);
    let parsed: TransitionReport =
        serde_json::from_str(&fs::read_to_string(t.out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(parsed, t.report);
    assert_eq!(parsed.schema, "transition-trace-v1");
    assert_eq!(data_rows(&t.out_dir.join("trace.csv")), 100);
}

#[test]
fn locked_output_directory_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("busy");
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join(".lock"), "1\n").unwrap();
    let e = cmd_rollout(&RolloutArgs {
        common: CommonArgs {
            out: Some(dir),
            ..Default::default()
        },
        duration: 0.1,
        ..Default::default()
    })
    .unwrap_err();
    assert!(matches!(e, CliError::Locked(_)));
}

fn salamander(args: &[&str], out_root: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_salamander"))
        .args(args)
        .env("SALAMANDER_OUT", out_root)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

#[test]
fn binary_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nowhere.toml");
    let o = salamander(&["train", "--config", missing.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.toml"));

    let o = salamander(&["eval", "--override", "train.total_steps=zero"], tmp.path());
    assert_eq!(o.status.code(), Some(2));

    let garbage = tmp.path().join("garbage.ckpt");
    fs::write(&garbage, b"not a checkpoint").unwrap();
    let o = salamander(&["transition", "--checkpoint", garbage.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(4));

    let o = salamander(&["rollout", "--duration", "0.2", "--seed", "5"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("rollout-desk-flat-seed5");
    assert_eq!(data_rows(&dir.join("rollout.csv")), 10);
    assert!(dir.join(MANIFEST_FILE).exists());
}

#[test]
fn config_file_runs_match_presets() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = salamander_cli::RunConfig::preset("desk-flat").unwrap();
    let path = tmp.path().join("flat.toml");
    fs::write(&path, cfg.to_toml_string()).unwrap();
    let before = fs::read(&path).unwrap();
    let run = |common: CommonArgs| {
        cmd_rollout(&RolloutArgs {
            common,
            duration: 1.0,
            ..Default::default()
        })
        .unwrap()
    };
    let a = run(CommonArgs {
        config: Some(path.clone()),
        out: Some(tmp.path().join("from-file")),
        ..Default::default()
    });
    let b = run(CommonArgs {
        preset: Some("desk-flat".into()),
        out: Some(tmp.path().join("from-preset")),
        ..Default::default()
    });
    assert_eq!(
        fs::read(a.out_dir.join("rollout.csv")).unwrap(),
        fs::read(b.out_dir.join("rollout.csv")).unwrap()
    );
    assert_eq!(fs::read(&path).unwrap(), before, "inputs are never modified");
    let m = read_manifest(&a.out_dir);
    assert_eq!(m.input_hashes[&path.display().to_string()], sha256_hex(&before));
}
