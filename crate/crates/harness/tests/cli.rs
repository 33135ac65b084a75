//! End-to-end subcommand behavior through the compiled binary: artifact
//! layout, determinism of re-runs, config rejection, and checkpoint flow.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Output;

fn masklab(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_masklab"))
        .args(args)
        .output()
        .expect("spawn masklab")
}

fn sandbox(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("masklab-cli-{}-{name}", std::process::id()));
    fs::remove_dir_all(&dir).ok();
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// Small enough to train in seconds, large enough to exercise every stage.
const TINY_CONFIG: &str = r#"
[corpus]
train_count = 4
val_count = 2
test_count = 3
duration_s = 0.12
noise_duration_s = 0.2
pool_clips = 8
observation_snr_db = [5.0]
test_snr_db = [0.0, 5.0]

[train]
epochs = 2
batch_size = 2
hidden_sizes = [8]
context_frames = 1

[experiment]
train_pool_families = ["pink", "white"]
mismatch_family = "band_6000_8000"
sweep_train_count = 4
sweep_val_count = 2
sweep_test_count = 3
sweep_epochs = 2
sweep_batch_size = 2
sweep_hidden_sizes = [8]
sweep_context_frames = 1
sweep_duration_s = 0.12
"#;

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("lab.toml");
    fs::write(&path, TINY_CONFIG).unwrap();
    path
}

fn assert_success(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn synth_corpus_writes_a_deterministic_manifest_with_audio() {
    let dir = sandbox("synth");
    let cfg = write_config(&dir);
    let cfg = cfg.to_str().unwrap();
    let out_a = dir.join("a");
    let out_b = dir.join("b");

    for out in [&out_a, &out_b] {
        let run = masklab(&[
            "synth-corpus",
            "--config",
            cfg,
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_success(&run, "synth-corpus");
    }

    let manifest_a = fs::read(out_a.join("manifest.json")).unwrap();
    let manifest_b = fs::read(out_b.join("manifest.json")).unwrap();
    assert_eq!(manifest_a, manifest_b, "manifest depends on more than (config, seed)");

    let manifest: serde_json::Value = serde_json::from_slice(&manifest_a).unwrap();
    let entries = manifest["entries"].as_array().unwrap();
    assert!(!entries.is_empty());
    for entry in entries {
        let rel = entry["path"].as_str().expect("rendered entries carry paths");
        assert!(out_a.join(rel).exists(), "missing wav {rel}");
    }

    fs::remove_dir_all(&dir).ok();
}

#[test]
fn train_produces_a_checkpoint_that_evaluate_consumes() {
    let dir = sandbox("train-eval");
    let cfg = write_config(&dir);
    let cfg = cfg.to_str().unwrap();
    let train_out = dir.join("train");
    let eval_out = dir.join("eval");

    let run = masklab(&[
        "train",
        "--strategy",
        "noisy_target",
        "--config",
        cfg,
        "--seed",
        "3",
        "--out",
        train_out.to_str().unwrap(),
    ]);
    assert_success(&run, "train");
    for artifact in ["checkpoint.json", "history.csv", "train_summary.json"] {
        assert!(train_out.join(artifact).exists(), "missing {artifact}");
    }
    let history = fs::read_to_string(train_out.join("history.csv")).unwrap();
    assert!(history.starts_with("epoch,mean_loss,val_si_sdr,is_best"));
    // header + one row per epoch
    assert_eq!(history.trim_end().lines().count(), 3);

    let run = masklab(&[
        "evaluate",
        "--checkpoint",
        train_out.join("checkpoint.json").to_str().unwrap(),
        "--config",
        cfg,
        "--seed",
        "3",
        "--out",
        eval_out.to_str().unwrap(),
    ]);
    assert_success(&run, "evaluate");
    let metrics = fs::read_to_string(eval_out.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("utt_id,method,si_sdr_in,si_sdr_out,si_sdri,lsd"));
    // one row per matched test item (each speech clip at each input SNR)
    assert_eq!(metrics.trim_end().lines().count(), 1 + 3 * 2);

    fs::remove_dir_all(&dir).ok();
}

#[test]
fn training_strategies_reject_corpora_missing_their_sources() {
    let dir = sandbox("missing-sources");
    let cfg = write_config(&dir);

    // strip the training speech, keeping validation/test material intact
    let run = masklab(&[
        "synth-corpus",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "5",
        "--out",
        dir.join("corpus").to_str().unwrap(),
    ]);
    assert_success(&run, "synth-corpus");
    let manifest_path = dir.join("corpus").join("manifest.json");
    let mut manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(&manifest_path).unwrap()).unwrap();
    let entries = manifest["entries"].as_array().unwrap().clone();
    let without_train_speech: Vec<serde_json::Value> = entries
        .into_iter()
        .filter(|e| e["group"] != "train")
        .collect();
    manifest["entries"] = serde_json::Value::Array(without_train_speech);
    fs::write(&manifest_path, serde_json::to_vec(&manifest).unwrap()).unwrap();

    let run = masklab(&[
        "train",
        "--strategy",
        "clean_target",
        "--corpus",
        manifest_path.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "5",
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert!(!run.status.success(), "clean-target training accepted a corpus with no speech");
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(
        stderr.contains("clean training utterances"),
        "unhelpful error: {stderr}"
    );

    fs::remove_dir_all(&dir).ok();
}

#[test]
fn bad_configs_are_rejected_by_name() {
    let dir = sandbox("bad-config");

    let unknown = dir.join("unknown.toml");
    fs::write(&unknown, "[train]\nepochz = 3\n").unwrap();
    let run = masklab(&[
        "poc",
        "--config",
        unknown.to_str().unwrap(),
        "--out",
        dir.join("o1").to_str().unwrap(),
    ]);
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("epochz"));

    let invalid = dir.join("invalid.toml");
    fs::write(&invalid, "[corpus]\npool_clips = 2\n").unwrap();
    let run = masklab(&[
        "poc",
        "--config",
        invalid.to_str().unwrap(),
        "--out",
        dir.join("o2").to_str().unwrap(),
    ]);
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("pool_clips"));

    fs::remove_dir_all(&dir).ok();
}

#[test]
fn comparison_rerun_reproduces_every_artifact_byte_for_byte() {
    let dir = sandbox("poc-determinism");
    let cfg = write_config(&dir);
    let cfg = cfg.to_str().unwrap();
    let out_a = dir.join("a");
    let out_b = dir.join("b");

    for out in [&out_a, &out_b] {
        let run = masklab(&["poc", "--config", cfg, "--seed", "11", "--out", out.to_str().unwrap()]);
        assert_success(&run, "poc");
    }

    let mut names: Vec<String> = fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.iter().any(|n| n.ends_with(".csv")));
    for name in &names {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }

    fs::remove_dir_all(&dir).ok();
}

#[test]
fn overlap_subcommand_scores_pools_from_labels() {
    let dir = sandbox("overlap");
    let cfg = write_config(&dir);
    let out = dir.join("out");

    let run = masklab(&[
        "overlap",
        "--pool-a",
        "pink",
        "--pool-b",
        "band_6000_8000",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_success(&run, "overlap");

    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("overlap.json")).unwrap()).unwrap();
    let score = summary["overlap_score"].as_f64().unwrap();
    assert!(score > 0.0 && score <= 1.0, "score {score} out of range");

    let embeddings = fs::read_to_string(out.join("overlap_embeddings.csv")).unwrap();
    assert!(embeddings.starts_with("pool,clip_id,b0"));

    fs::remove_dir_all(&dir).ok();
}
