//! Deterministic synthetic audio: a speech-like harmonic source and four
//! noise families. Same spec and seed always produce identical samples.

use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds;
use crate::signal::{SignalError, Waveform};

/// Every generated clip is scaled so its largest absolute sample is this.
pub const TARGET_PEAK: f64 = 0.5;

/// Fraction of a speech-like clip occupied by silence gaps.
const GAP_FRACTION: f64 = 0.2;

/// Half-cosine fade length at gap edges, in samples.
const GAP_RAMP: usize = 64;

/// Voices summed to form a babble clip.
const BABBLE_VOICES: usize = 6;

#[derive(Error, Debug)]
pub enum SynthError {
    #[error("duration must be positive and at least one sample, got {0} s")]
    BadDuration(f64),
    #[error("band edges must satisfy 0 <= lo < hi <= nyquist; got lo {lo} Hz, hi {hi} Hz, nyquist {nyquist} Hz")]
    BadBand { lo: f64, hi: f64, nyquist: f64 },
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Generator family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthKind {
    /// Harmonic stack with drifting fundamental, syllabic amplitude
    /// modulation, and inserted silence gaps.
    SpeechLike,
    /// Independent uniform samples (flat spectrum).
    White,
    /// White base reshaped in the frequency domain by 1/sqrt(f).
    Pink,
    /// White base with all energy outside [lo_hz, hi_hz] removed.
    Band { lo_hz: f64, hi_hz: f64 },
    /// Sum of several independent speech-like voices.
    Babble,
}

impl SynthKind {
    /// Stable short name used in manifests and file names.
    pub fn label(&self) -> String {
        match self {
            SynthKind::SpeechLike => "speech_like".into(),
            SynthKind::White => "white".into(),
            SynthKind::Pink => "pink".into(),
            SynthKind::Band { lo_hz, hi_hz } => {
                format!("band_{}_{}", *lo_hz as i64, *hi_hz as i64)
            }
            SynthKind::Babble => "babble".into(),
        }
    }
}

/// Full recipe for one clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    #[serde(flatten)]
    pub kind: SynthKind,
    pub duration_s: f64,
    pub seed: u64,
}

/// Renders a clip. Pure function of the spec and sample rate.
pub fn synth(spec: &SynthSpec, sample_rate: u32) -> Result<Waveform, SynthError> {
    if sample_rate == 0 {
        return Err(SynthError::Signal(SignalError::ZeroSampleRate));
    }
    let len = (spec.duration_s * sample_rate as f64).round() as i64;
    if !spec.duration_s.is_finite() || spec.duration_s <= 0.0 || len < 1 {
        return Err(SynthError::BadDuration(spec.duration_s));
    }
    let len = len as usize;

    let mut samples = match spec.kind {
        SynthKind::SpeechLike => speech_like(len, sample_rate, spec.seed),
        SynthKind::White => white(len, spec.seed),
        SynthKind::Pink => pink(len, sample_rate, spec.seed),
        SynthKind::Band { lo_hz, hi_hz } => {
            let nyquist = sample_rate as f64 / 2.0;
            if !(lo_hz >= 0.0 && lo_hz < hi_hz && hi_hz <= nyquist) {
                return Err(SynthError::BadBand {
                    lo: lo_hz,
                    hi: hi_hz,
                    nyquist,
                });
            }
            band(len, sample_rate, lo_hz, hi_hz, spec.seed)
        }
        SynthKind::Babble => babble(len, sample_rate, spec.seed),
    };

    peak_normalize(&mut samples, TARGET_PEAK);
    Ok(Waveform::new(samples, sample_rate)?)
}

/// Scales in place so the largest |sample| equals `target`.
/// All-zero input is left untouched.
pub fn peak_normalize(samples: &mut [f64], target: f64) {
    let peak = samples.iter().fold(0.0f64, |acc, s| acc.max(s.abs()));
    if peak > 0.0 {
        let g = target / peak;
        for s in samples.iter_mut() {
            *s *= g;
        }
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Harmonic stack under a two-rate amplitude envelope, with 2 to 4
/// silence gaps totalling `GAP_FRACTION` of the clip.
fn speech_like(len: usize, sample_rate: u32, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed);
    let sr = sample_rate as f64;

    // Fundamental drifts sinusoidally inside a per-clip range within 90..250 Hz.
    let f0_lo = rng.random_range(90.0..140.0);
    let f0_hi = rng.random_range(170.0..250.0);
    let drift_hz = rng.random_range(0.1..0.5);
    let drift_phase = rng.random_range(0.0..std::f64::consts::TAU);

    let n_harm = 18usize;
    let rolloff = rng.random_range(0.7..1.1);
    let harm_phases: Vec<f64> = (0..n_harm)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();

    // Syllabic (fast) and phrase (slow) amplitude modulation, both kept
    // strictly positive so speech regions never vanish on their own.
    let am_fast_hz = rng.random_range(1.5..4.0);
    let am_fast_phase = rng.random_range(0.0..std::f64::consts::TAU);
    let am_slow_hz = rng.random_range(0.3..1.0);
    let am_slow_phase = rng.random_range(0.0..std::f64::consts::TAU);

    let mut out = vec![0.0; len];
    let mut phase = 0.0f64;
    for (t, slot) in out.iter_mut().enumerate() {
        let tt = t as f64 / sr;
        let drift = 0.5 + 0.5 * (std::f64::consts::TAU * drift_hz * tt + drift_phase).sin();
        let f0 = f0_lo + (f0_hi - f0_lo) * drift;
        phase += std::f64::consts::TAU * f0 / sr;

        let mut s = 0.0;
        for (h, psi) in harm_phases.iter().enumerate() {
            let k = (h + 1) as f64;
            s += (k * phase + psi).sin() / k.powf(rolloff);
        }

        let env_fast = 0.55 + 0.45 * (std::f64::consts::TAU * am_fast_hz * tt + am_fast_phase).sin();
        let env_slow = 0.7 + 0.3 * (std::f64::consts::TAU * am_slow_hz * tt + am_slow_phase).sin();
        *slot = s * env_fast * env_slow;
    }

    apply_gaps(&mut out, &mut rng);
    out
}

/// Zeroes 2..=4 spans totalling about `GAP_FRACTION` of the clip, with
/// half-cosine fades inside each span edge.
fn apply_gaps(samples: &mut [f64], rng: &mut ChaCha8Rng) {
    let len = samples.len();
    let total_gap = (len as f64 * GAP_FRACTION).round() as usize;
    if total_gap < 4 {
        return;
    }
    let n_gaps = rng.random_range(2..=4usize).min(total_gap / 2);

    let weights: Vec<f64> = (0..n_gaps).map(|_| rng.random_range(0.5..1.5)).collect();
    let wsum: f64 = weights.iter().sum();

    let segment = len / n_gaps;
    for (i, w) in weights.iter().enumerate() {
        let gap_len = ((total_gap as f64 * w / wsum).round() as usize)
            .min(segment.saturating_sub(1))
            .max(2);
        let seg_start = i * segment;
        let max_off = segment - gap_len;
        let off = if max_off > 0 {
            rng.random_range(0..max_off)
        } else {
            0
        };
        let start = seg_start + off;
        let end = (start + gap_len).min(len);

        let ramp = GAP_RAMP.min(gap_len / 2);
        for t in start..end {
            let g = if t < start + ramp {
                // fade out into the gap
                let x = (t - start) as f64 / ramp as f64;
                0.5 * (1.0 + (std::f64::consts::PI * x).cos())
            } else if t >= end - ramp {
                // fade back in
                let x = (end - 1 - t) as f64 / ramp as f64;
                0.5 * (1.0 + (std::f64::consts::PI * x).cos())
            } else {
                0.0
            };
            samples[t] *= g;
        }
    }
}

fn white(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Rescales the spectrum of a white base by `shape(f)` and zeroes DC.
/// `shape` receives the symmetric frequency in Hz, always > 0.
fn spectral_shape(
    len: usize,
    sample_rate: u32,
    seed: u64,
    shape: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let base = white(len, seed);
    let mut buf: Vec<Complex<f64>> = base.iter().map(|&s| Complex::new(s, 0.0)).collect();

    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(len).process(&mut buf);

    let df = sample_rate as f64 / len as f64;
    buf[0] = Complex::new(0.0, 0.0);
    for (k, v) in buf.iter_mut().enumerate().skip(1) {
        let k_sym = k.min(len - k);
        *v *= shape(k_sym as f64 * df);
    }

    planner.plan_fft_inverse(len).process(&mut buf);
    // Inverse is unnormalized; real part only, the symmetric scaling keeps
    // the imaginary part at rounding level.
    buf.iter().map(|v| v.re / len as f64).collect()
}

fn pink(len: usize, sample_rate: u32, seed: u64) -> Vec<f64> {
    spectral_shape(len, sample_rate, seed, |f| 1.0 / f.sqrt())
}

fn band(len: usize, sample_rate: u32, lo_hz: f64, hi_hz: f64, seed: u64) -> Vec<f64> {
    spectral_shape(len, sample_rate, seed, |f| {
        if f >= lo_hz && f <= hi_hz {
            1.0
        } else {
            0.0
        }
    })
}

fn babble(len: usize, sample_rate: u32, seed: u64) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for voice in 0..BABBLE_VOICES {
        let sub = speech_like(len, sample_rate, seeds::mix(seed, voice as u64 + 1));
        for (o, s) in out.iter_mut().zip(sub) {
            *o += s;
        }
    }
    out
}
