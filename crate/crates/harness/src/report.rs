//! Report emission. Every experiment ends in CSV tables plus a JSON
//! mirror carrying the config echo and master seed. Output is a pure
//! function of the results: no timestamps, no absolute paths, map keys
//! sorted; re-running a command overwrites byte-identically.

use std::path::{Path, PathBuf};

use masklab_core::metrics::MetricsReport;
use masklab_core::mixer::Strategy;
use serde_json::json;
use thiserror::Error;

use crate::config::LabConfig;
use crate::experiments::{NoiseSweepResults, PocResults, SnrSweepResults};
use crate::overlap::{OverlapReport, NUM_BANDS};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("serializing report: {0}")]
    Serde(#[from] serde_json::Error),
}

fn write_file(path: &Path, text: &str) -> Result<PathBuf, ReportError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| ReportError::Io {
            path: parent.display().to_string(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path.to_path_buf())
}

fn json_text(value: &serde_json::Value) -> Result<String, ReportError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Merges per-method metric tables into one CSV, header first.
pub fn combined_metrics_csv(tables: &[(&str, &MetricsReport)]) -> String {
    let mut out = String::new();
    for (i, (method, report)) in tables.iter().enumerate() {
        let csv = report.to_csv(method);
        if i == 0 {
            out.push_str(&csv);
        } else {
            // drop the duplicate header line
            if let Some(idx) = csv.find('\n') {
                out.push_str(&csv[idx + 1..]);
            }
        }
    }
    out
}

/// Sweep table under the fixed schema.
pub fn sweep_csv(rows: &[(String, f64, f64, f64)]) -> String {
    let mut out = String::from("point_label,si_sdri_mean,si_sdri_median,si_sdri_var\n");
    for (label, mean, median, var) in rows {
        out.push_str(&format!("{label},{mean},{median},{var}\n"));
    }
    out
}

/// Per-clip band-energy embeddings, keyed by clip id.
type EmbeddingRows = [(String, Vec<f64>)];

fn embeddings_csv(pools: &[(&str, &EmbeddingRows)]) -> String {
    let mut out = String::from("pool,clip_id");
    for b in 0..NUM_BANDS {
        out.push_str(&format!(",b{b}"));
    }
    out.push('\n');
    for (pool, rows) in pools {
        for (id, embedding) in rows.iter() {
            out.push_str(&format!("{pool},{id}"));
            for v in embedding {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_poc_report(
    out_dir: &Path,
    cfg: &LabConfig,
    master_seed: u64,
    results: &PocResults,
) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = Vec::new();

    let matched: Vec<(&str, &MetricsReport)> = results
        .methods
        .iter()
        .map(|m| (m.strategy.label(), &m.matched))
        .collect();
    written.push(write_file(
        &out_dir.join("metrics_matched.csv"),
        &combined_metrics_csv(&matched),
    )?);

    let mismatched: Vec<(&str, &MetricsReport)> = results
        .methods
        .iter()
        .map(|m| (m.strategy.label(), &m.mismatched))
        .collect();
    written.push(write_file(
        &out_dir.join("metrics_mismatched.csv"),
        &combined_metrics_csv(&mismatched),
    )?);

    for m in &results.methods {
        written.push(write_file(
            &out_dir.join(format!("history_{}.csv", m.strategy.label())),
            &m.history.to_csv(),
        )?);
    }

    let methods_json: Vec<serde_json::Value> = results
        .methods
        .iter()
        .map(|m| {
            json!({
                "strategy": m.strategy.label(),
                "best_epoch": m.history.best_epoch,
                "initial_val_score": m.history.initial_val_score,
                "matched": m.matched,
                "mismatched": m.mismatched,
                "history": m.history,
            })
        })
        .collect();
    let summary = json!({
        "master_seed": master_seed,
        "config": cfg,
        "methods": methods_json,
    });
    written.push(write_file(
        &out_dir.join("summary.json"),
        &json_text(&summary)?,
    )?);
    Ok(written)
}

pub fn write_snr_sweep_report(
    out_dir: &Path,
    cfg: &LabConfig,
    master_seed: u64,
    results: &SnrSweepResults,
) -> Result<Vec<PathBuf>, ReportError> {
    let rows: Vec<(String, f64, f64, f64)> = results
        .points
        .iter()
        .map(|p| {
            (
                p.label.clone(),
                p.si_sdri.mean,
                p.si_sdri.median,
                p.si_sdri.variance,
            )
        })
        .collect();
    let mut written = vec![write_file(
        &out_dir.join("snr_sweep.csv"),
        &sweep_csv(&rows),
    )?];

    let points_json: Vec<serde_json::Value> = results
        .points
        .iter()
        .map(|p| {
            json!({
                "point_label": p.label,
                "snr_db": p.snr,
                "si_sdri": p.si_sdri,
                "history": p.history,
            })
        })
        .collect();
    let summary = json!({
        "master_seed": master_seed,
        "config": cfg,
        "points": points_json,
    });
    written.push(write_file(
        &out_dir.join("snr_sweep.json"),
        &json_text(&summary)?,
    )?);
    Ok(written)
}

pub fn write_noise_sweep_report(
    out_dir: &Path,
    cfg: &LabConfig,
    master_seed: u64,
    results: &NoiseSweepResults,
) -> Result<Vec<PathBuf>, ReportError> {
    let rows: Vec<(String, f64, f64, f64)> = results
        .families
        .iter()
        .map(|f| {
            (
                f.family.clone(),
                f.si_sdri.mean,
                f.si_sdri.median,
                f.si_sdri.variance,
            )
        })
        .collect();
    let mut written = vec![write_file(
        &out_dir.join("noise_sweep.csv"),
        &sweep_csv(&rows),
    )?];

    let mut overlap_csv = String::from("family,overlap_score\n");
    for f in &results.families {
        overlap_csv.push_str(&format!("{},{}\n", f.family, f.overlap_score));
    }
    written.push(write_file(
        &out_dir.join("noise_overlap.csv"),
        &overlap_csv,
    )?);

    let embed_tables: Vec<(String, &EmbeddingRows)> = results
        .families
        .iter()
        .map(|f| (f.family.clone(), f.overlap.embeddings_a.as_slice()))
        .collect();
    let mut pools: Vec<(&str, &EmbeddingRows)> = embed_tables
        .iter()
        .map(|(name, rows)| (name.as_str(), *rows))
        .collect();
    // the shared observation pool once, from the first family's report
    if let Some(first) = results.families.first() {
        pools.push(("observation", first.overlap.embeddings_b.as_slice()));
    }
    written.push(write_file(
        &out_dir.join("overlap_embeddings.csv"),
        &embeddings_csv(&pools),
    )?);

    let families_json: Vec<serde_json::Value> = results
        .families
        .iter()
        .map(|f| {
            json!({
                "family": f.family,
                "si_sdri": f.si_sdri,
                "overlap_score": f.overlap_score,
                "history": f.history,
            })
        })
        .collect();
    let summary = json!({
        "master_seed": master_seed,
        "config": cfg,
        "families": families_json,
    });
    written.push(write_file(
        &out_dir.join("noise_sweep.json"),
        &json_text(&summary)?,
    )?);
    Ok(written)
}

pub fn write_overlap_report(
    out_dir: &Path,
    cfg: &LabConfig,
    master_seed: u64,
    label_a: &str,
    label_b: &str,
    report: &OverlapReport,
) -> Result<Vec<PathBuf>, ReportError> {
    let pools: Vec<(&str, &EmbeddingRows)> = vec![
        (label_a, report.embeddings_a.as_slice()),
        (label_b, report.embeddings_b.as_slice()),
    ];
    let mut written = vec![write_file(
        &out_dir.join("overlap_embeddings.csv"),
        &embeddings_csv(&pools),
    )?];

    let summary = json!({
        "master_seed": master_seed,
        "config": cfg,
        "pool_a": label_a,
        "pool_b": label_b,
        "overlap_score": report.score,
    });
    written.push(write_file(
        &out_dir.join("overlap.json"),
        &json_text(&summary)?,
    )?);
    Ok(written)
}

pub fn write_train_report(
    out_dir: &Path,
    cfg: &LabConfig,
    master_seed: u64,
    strategy: Strategy,
    history: &masklab_core::trainer::TrainHistory,
) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = vec![write_file(
        &out_dir.join("history.csv"),
        &history.to_csv(),
    )?];
    let summary = json!({
        "master_seed": master_seed,
        "config": cfg,
        "strategy": strategy.label(),
        "best_epoch": history.best_epoch,
        "initial_val_score": history.initial_val_score,
        "history": history,
    });
    written.push(write_file(
        &out_dir.join("train_summary.json"),
        &json_text(&summary)?,
    )?);
    Ok(written)
}

pub fn write_eval_report(
    out_dir: &Path,
    cfg: &LabConfig,
    master_seed: u64,
    method: &str,
    report: &MetricsReport,
) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = vec![write_file(
        &out_dir.join("metrics.csv"),
        &report.to_csv(method),
    )?];
    let summary = json!({
        "master_seed": master_seed,
        "config": cfg,
        "method": method,
        "report": report,
    });
    written.push(write_file(
        &out_dir.join("metrics.json"),
        &json_text(&summary)?,
    )?);
    Ok(written)
}
