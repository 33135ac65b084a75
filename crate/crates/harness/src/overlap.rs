//! Noise overlap diagnostic: how much two noise pools' spectral
//! distributions overlap, as a scalar in (0, 1].
//!
//! Each clip is embedded as its per-band mean log energy over a 16-band
//! mel-spaced triangular filterbank. The distance between two pools is
//! the symmetrized mean nearest-neighbor distance between their
//! embeddings, normalized by the pooled median pairwise distance; the
//! score is exp(-distance), so identical pools score 1 and disjoint
//! spectral supports score near 0.

use masklab_core::signal::Waveform;
use masklab_core::stft::{stft, StftError, StftParams};
use masklab_core::trainer::Utterance;
use thiserror::Error;

pub const NUM_BANDS: usize = 16;
pub const BAND_ENERGY_EPS: f64 = 1e-10;
/// Below this many clips, nearest-neighbor statistics are too noisy to
/// report.
pub const MIN_POOL: usize = 8;

#[derive(Debug, Error)]
pub enum OverlapError {
    #[error("pool {name} has {got} clips; the diagnostic needs at least {min}", min = MIN_POOL)]
    PoolTooSmall { name: &'static str, got: usize },
    #[error(transparent)]
    Stft(#[from] StftError),
}

/// Mel scale: narrow bands at low frequencies, wide at high.
fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filterbank over the one-sided spectrum: `NUM_BANDS` rows of
/// per-bin weights. Band edges are mel-uniform from 0 Hz to Nyquist.
pub fn mel_filterbank(freq_bins: usize, sample_rate: u32, win_len: usize) -> Vec<Vec<f64>> {
    let nyquist = f64::from(sample_rate) / 2.0;
    let mel_max = hz_to_mel(nyquist);
    // NUM_BANDS triangles need NUM_BANDS + 2 edge points.
    let edges: Vec<f64> = (0..NUM_BANDS + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (NUM_BANDS + 1) as f64))
        .collect();
    let bin_hz = f64::from(sample_rate) / win_len as f64;

    let mut bank = vec![vec![0.0; freq_bins]; NUM_BANDS];
    for (b, row) in bank.iter_mut().enumerate() {
        let (lo, mid, hi) = (edges[b], edges[b + 1], edges[b + 2]);
        for (f, w) in row.iter_mut().enumerate() {
            let hz = f as f64 * bin_hz;
            *w = if hz <= lo || hz >= hi {
                0.0
            } else if hz <= mid {
                (hz - lo) / (mid - lo)
            } else {
                (hi - hz) / (hi - mid)
            };
        }
    }
    bank
}

/// Per-clip embedding: mean over frames of ln(band energy + eps) for each
/// filterbank band.
pub fn embed_clip(wave: &Waveform, params: &StftParams) -> Result<Vec<f64>, OverlapError> {
    let spec = stft(wave, params)?;
    let bank = mel_filterbank(params.freq_bins(), wave.sample_rate(), params.win_len);
    let frames = spec.bins.ncols();
    let mut acc = vec![0.0; NUM_BANDS];
    for k in 0..frames {
        for (b, row) in bank.iter().enumerate() {
            let mut energy = 0.0;
            for (f, w) in row.iter().enumerate() {
                if *w > 0.0 {
                    energy += w * spec.bins[(f, k)].norm_sqr();
                }
            }
            acc[b] += (energy + BAND_ENERGY_EPS).ln();
        }
    }
    for v in &mut acc {
        *v /= frames as f64;
    }
    Ok(acc)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Mean over `from` of the distance to its nearest neighbor in `to`.
fn mean_nn_distance(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
    let sum: f64 = from
        .iter()
        .map(|a| {
            to.iter()
                .map(|b| euclid(a, b))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    sum / from.len() as f64
}

/// Lower-middle median of the two pools' internal pairwise distances,
/// pooled. Cross-pool pairs are excluded: the scale must reflect
/// within-pool spread, or any pair of well-separated pools would
/// normalize itself to the same score regardless of how far apart the
/// pools sit.
fn pooled_median_pairwise(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let n = |p: &[Vec<f64>]| p.len() * (p.len() - 1) / 2;
    let mut dists = Vec::with_capacity(n(a) + n(b));
    for pool in [a, b] {
        for i in 0..pool.len() {
            for j in i + 1..pool.len() {
                dists.push(euclid(&pool[i], &pool[j]));
            }
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    dists[(dists.len() - 1) / 2]
}

#[derive(Debug, Clone)]
pub struct OverlapReport {
    pub score: f64,
    pub embeddings_a: Vec<(String, Vec<f64>)>,
    pub embeddings_b: Vec<(String, Vec<f64>)>,
}

/// Overlap score between two pools. Symmetric; 1.0 for a pool against
/// itself. When every clip sits on top of the pooled cloud (zero median
/// distance), the pools are indistinguishable and the score is 1.
pub fn noise_overlap_diagnostic(
    pool_a: &[Utterance],
    pool_b: &[Utterance],
    params: &StftParams,
) -> Result<OverlapReport, OverlapError> {
    if pool_a.len() < MIN_POOL {
        return Err(OverlapError::PoolTooSmall {
            name: "a",
            got: pool_a.len(),
        });
    }
    if pool_b.len() < MIN_POOL {
        return Err(OverlapError::PoolTooSmall {
            name: "b",
            got: pool_b.len(),
        });
    }

    let embed_pool = |pool: &[Utterance]| -> Result<Vec<(String, Vec<f64>)>, OverlapError> {
        pool.iter()
            .map(|u| Ok((u.id.clone(), embed_clip(&u.wave, params)?)))
            .collect()
    };
    let embeddings_a = embed_pool(pool_a)?;
    let embeddings_b = embed_pool(pool_b)?;

    let a: Vec<Vec<f64>> = embeddings_a.iter().map(|(_, e)| e.clone()).collect();
    let b: Vec<Vec<f64>> = embeddings_b.iter().map(|(_, e)| e.clone()).collect();

    let cross = 0.5 * (mean_nn_distance(&a, &b) + mean_nn_distance(&b, &a));
    let scale = pooled_median_pairwise(&a, &b);

    let score = if scale > 0.0 {
        // Cap keeps fully disjoint pools strictly above 0 (and apart from
        // each other) instead of underflowing exp to an exact-zero tie.
        (-(cross / scale).min(500.0)).exp()
    } else {
        1.0
    };
    Ok(OverlapReport {
        score,
        embeddings_a,
        embeddings_b,
    })
}
