//! Evaluation metrics: scale-invariant SDR, log-spectral distance, and
//! per-corpus reports with mean/median/variance aggregates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{SignalError, Waveform, SILENCE_POWER};
use crate::stft::{stft, StftError, StftParams};

/// SI-SDR values are clamped into [floor, cap] so degenerate cases
/// (perfect reconstruction, silent estimates) stay finite.
pub const SI_SDR_CAP_DB: f64 = 60.0;
pub const SI_SDR_FLOOR_DB: f64 = -60.0;

/// Offset added to magnitudes inside the log-spectral distance.
pub const LSD_EPS: f64 = 1e-8;

#[derive(Error, Debug)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1} samples")]
    LengthMismatch(usize, usize),
    #[error("reference is silent, si-sdr is undefined")]
    SilentReference,
    #[error("no values to aggregate")]
    EmptyInput,
    #[error("non-finite value in input")]
    NonFinite,
    #[error(transparent)]
    Stft(#[from] StftError),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Scale-invariant signal-to-distortion ratio in dB.
///
/// The reference is rescaled by `alpha = <est, ref> / ||ref||^2`; the
/// ratio of projected-target power to residual power is reported in dB,
/// clamped to [`SI_SDR_FLOOR_DB`], [`SI_SDR_CAP_DB`]. A silent estimate
/// hits the floor; a silent reference is an error.
pub fn si_sdr(est: &Waveform, reference: &Waveform) -> Result<f64, MetricsError> {
    if est.len() != reference.len() {
        return Err(MetricsError::LengthMismatch(est.len(), reference.len()));
    }
    if est.sample_rate() != reference.sample_rate() {
        return Err(MetricsError::Signal(SignalError::RateMismatch(
            est.sample_rate(),
            reference.sample_rate(),
        )));
    }
    if reference.mean_power() <= SILENCE_POWER {
        return Err(MetricsError::SilentReference);
    }
    if est.mean_power() <= SILENCE_POWER {
        return Ok(SI_SDR_FLOOR_DB);
    }

    let r = reference.samples();
    let e = est.samples();
    let energy_ref: f64 = r.iter().map(|v| v * v).sum();
    let dot: f64 = e.iter().zip(r).map(|(a, b)| a * b).sum();
    let alpha = dot / energy_ref;

    let num = alpha * alpha * energy_ref;
    let den: f64 = e.iter().zip(r).map(|(a, b)| (a - alpha * b).powi(2)).sum();
    Ok((10.0 * (num / den).log10()).clamp(SI_SDR_FLOOR_DB, SI_SDR_CAP_DB))
}

/// SI-SDR gain of `processed` over `noisy_input`, both against the same
/// reference.
pub fn si_sdr_improvement(
    processed: &Waveform,
    noisy_input: &Waveform,
    reference: &Waveform,
) -> Result<f64, MetricsError> {
    Ok(si_sdr(processed, reference)? - si_sdr(noisy_input, reference)?)
}

/// Log-spectral distance in dB: per frame, the rms over bins of
/// `20 log10((|est| + eps) / (|ref| + eps))`, averaged over frames.
pub fn log_spectral_distance(
    est: &Waveform,
    reference: &Waveform,
    params: &StftParams,
) -> Result<f64, MetricsError> {
    if est.len() != reference.len() {
        return Err(MetricsError::LengthMismatch(est.len(), reference.len()));
    }
    let spec_e = stft(est, params)?;
    let spec_r = stft(reference, params)?;
    let (f_bins, frames) = spec_e.bins.dim();

    let mut total = 0.0;
    for k in 0..frames {
        let mut sq = 0.0;
        for f in 0..f_bins {
            let ratio =
                (spec_e.bins[(f, k)].norm() + LSD_EPS) / (spec_r.bins[(f, k)].norm() + LSD_EPS);
            let d = 20.0 * ratio.log10();
            sq += d * d;
        }
        total += (sq / f_bins as f64).sqrt();
    }
    Ok(total / frames as f64)
}

/// Mean, lower-middle median, and population variance of a column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub median: f64,
    pub variance: f64,
}

/// Aggregates a non-empty slice of finite values.
pub fn aggregate(values: &[f64]) -> Result<ColumnStats, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;

    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("values are finite"));
    let median = sorted[(sorted.len() - 1) / 2];

    Ok(ColumnStats {
        mean,
        median,
        variance,
    })
}

/// Per-utterance evaluation row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub utt_id: String,
    pub si_sdr_in: f64,
    pub si_sdr_out: f64,
    pub si_sdri: f64,
    pub lsd: f64,
}

/// Aggregates for each metric column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportAggregates {
    pub si_sdr_in: ColumnStats,
    pub si_sdr_out: ColumnStats,
    pub si_sdri: ColumnStats,
    pub lsd: ColumnStats,
}

/// Full evaluation over one test corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub records: Vec<UtteranceRecord>,
    pub aggregates: ReportAggregates,
}

impl MetricsReport {
    pub fn from_records(records: Vec<UtteranceRecord>) -> Result<Self, MetricsError> {
        let col = |f: fn(&UtteranceRecord) -> f64| -> Result<ColumnStats, MetricsError> {
            aggregate(&records.iter().map(f).collect::<Vec<_>>())
        };
        let aggregates = ReportAggregates {
            si_sdr_in: col(|r| r.si_sdr_in)?,
            si_sdr_out: col(|r| r.si_sdr_out)?,
            si_sdri: col(|r| r.si_sdri)?,
            lsd: col(|r| r.lsd)?,
        };
        Ok(Self {
            records,
            aggregates,
        })
    }

    /// One row per utterance plus mean/median/variance footer rows, all
    /// tagged with the method label.
    pub fn to_csv(&self, method: &str) -> String {
        let mut out = String::from("utt_id,method,si_sdr_in,si_sdr_out,si_sdri,lsd\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.utt_id, method, r.si_sdr_in, r.si_sdr_out, r.si_sdri, r.lsd
            ));
        }
        let a = &self.aggregates;
        let picks: [(&str, fn(&ColumnStats) -> f64); 3] = [
            ("mean", |c| c.mean),
            ("median", |c| c.median),
            ("variance", |c| c.variance),
        ];
        for (label, pick) in picks {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                label,
                method,
                pick(&a.si_sdr_in),
                pick(&a.si_sdr_out),
                pick(&a.si_sdri),
                pick(&a.lsd)
            ));
        }
        out
    }
}

/// Scores one utterance: input and output SI-SDR against the clean
/// reference, their difference, and the output's spectral distance.
pub fn score_utterance(
    utt_id: impl Into<String>,
    processed: &Waveform,
    noisy_input: &Waveform,
    clean_ref: &Waveform,
    params: &StftParams,
) -> Result<UtteranceRecord, MetricsError> {
    let si_sdr_in = si_sdr(noisy_input, clean_ref)?;
    let si_sdr_out = si_sdr(processed, clean_ref)?;
    Ok(UtteranceRecord {
        utt_id: utt_id.into(),
        si_sdr_in,
        si_sdr_out,
        si_sdri: si_sdr_out - si_sdr_in,
        lsd: log_spectral_distance(processed, clean_ref, params)?,
    })
}
