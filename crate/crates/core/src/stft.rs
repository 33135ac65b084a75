//! Short-time Fourier analysis and synthesis with one-sided storage,
//! complex mask application, log-amplitude features, and the exact
//! adjoint of synthesis used for gradient propagation.
//!
//! Conventions, fixed across the crate:
//! - the signal is reflect-padded by `win_len / 2` on each side before
//!   framing, so frame centers align with signal positions;
//! - frame count is `orig_len / hop + 1` (integer division);
//! - the window is a periodic Hamming, `0.54 - 0.46 cos(2 pi n / N)`;
//! - `fft_len == win_len`; only bins `0..=N/2` are stored (F = N/2 + 1);
//! - synthesis overlap-adds windowed inverse frames and divides by the
//!   summed squared window, floored at `NORM_FLOOR`;
//! - inner products over one-sided arrays weight middle bins by 2
//!   (see [`bin_multiplicity`] and [`spectral_dot`]).

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{SignalError, Waveform};

/// Floor for the overlap-add normalizer, guarding positions where the
/// summed squared window underflows.
pub const NORM_FLOOR: f64 = 1e-12;

/// Default offset inside the log in [`log_magnitude`].
pub const DEFAULT_LOG_EPS: f64 = 1e-8;

#[derive(Error, Debug)]
pub enum StftError {
    #[error("window length must be even and positive, got {0}")]
    BadWindowLen(usize),
    #[error("hop must satisfy 0 < hop <= win_len, got hop {hop}, win_len {win_len}")]
    BadHop { hop: usize, win_len: usize },
    #[error("shape mismatch: expected {expected_rows}x{expected_cols}, got {rows}x{cols}")]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },
    #[error("{frames} frames inconsistent with signal length {orig_len} at hop {hop}")]
    InconsistentFrames {
        frames: usize,
        orig_len: usize,
        hop: usize,
    },
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Hamming,
}

/// Analysis/synthesis geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftParams {
    pub win_len: usize,
    pub hop: usize,
    pub window: WindowKind,
}

impl Default for StftParams {
    fn default() -> Self {
        Self {
            win_len: 512,
            hop: 128,
            window: WindowKind::Hamming,
        }
    }
}

impl StftParams {
    pub fn validate(&self) -> Result<(), StftError> {
        if self.win_len == 0 || self.win_len % 2 != 0 {
            return Err(StftError::BadWindowLen(self.win_len));
        }
        if self.hop == 0 || self.hop > self.win_len {
            return Err(StftError::BadHop {
                hop: self.hop,
                win_len: self.win_len,
            });
        }
        Ok(())
    }

    /// One-sided bin count, `win_len / 2 + 1`.
    pub fn freq_bins(&self) -> usize {
        self.win_len / 2 + 1
    }

    /// Frames produced for a signal of `orig_len` samples.
    pub fn num_frames(&self, orig_len: usize) -> usize {
        orig_len / self.hop + 1
    }

    /// Periodic window samples, length `win_len`.
    pub fn window_values(&self) -> Vec<f64> {
        let n = self.win_len as f64;
        match self.window {
            WindowKind::Hamming => (0..self.win_len)
                .map(|i| 0.54 - 0.46 * (std::f64::consts::TAU * i as f64 / n).cos())
                .collect(),
        }
    }
}

/// One-sided complex spectrogram, `freq_bins x frames`, plus the
/// geometry needed to invert it.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub bins: Array2<Complex64>,
    pub params: StftParams,
    pub orig_len: usize,
    pub sample_rate: u32,
}

/// Complex time-frequency mask, same shape as the spectrogram it
/// multiplies.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub values: Array2<Complex64>,
}

/// Reflected index into a signal of length `t` (no edge repetition).
fn mirror(j: isize, t: usize) -> usize {
    debug_assert!(t > 0);
    if t == 1 {
        return 0;
    }
    let t = t as isize;
    let period = 2 * (t - 1);
    let mut m = j.rem_euclid(period);
    if m >= t {
        m = period - m;
    }
    m as usize
}

/// Summed squared window at every padded position.
fn window_power_sum(params: &StftParams, orig_len: usize) -> Vec<f64> {
    let n = params.win_len;
    let win = params.window_values();
    let mut wsum = vec![0.0; orig_len + n];
    for k in 0..params.num_frames(orig_len) {
        let start = k * params.hop;
        for (i, w) in win.iter().enumerate() {
            wsum[start + i] += w * w;
        }
    }
    wsum
}

/// Forward transform.
pub fn stft(wave: &Waveform, params: &StftParams) -> Result<Spectrogram, StftError> {
    params.validate()?;
    let n = params.win_len;
    let pad = n / 2;
    let t = wave.len();
    let frames = params.num_frames(t);
    let f_bins = params.freq_bins();
    let win = params.window_values();
    let samples = wave.samples();

    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut bins = Array2::zeros((f_bins, frames));
    let mut buf = vec![Complex64::default(); n];
    for k in 0..frames {
        let start = k * params.hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            let j = (start + i) as isize - pad as isize;
            *slot = Complex64::new(samples[mirror(j, t)] * win[i], 0.0);
        }
        fft.process(&mut buf);
        for f in 0..f_bins {
            bins[(f, k)] = buf[f];
        }
    }
    Ok(Spectrogram {
        bins,
        params: *params,
        orig_len: t,
        sample_rate: wave.sample_rate(),
    })
}

/// Inverse transform: conjugate-symmetric completion, inverse FFT per
/// frame, windowed overlap-add, normalization, and trim back to
/// `orig_len` samples.
pub fn istft(spec: &Spectrogram) -> Result<Waveform, StftError> {
    let params = &spec.params;
    params.validate()?;
    let n = params.win_len;
    let pad = n / 2;
    let f_bins = params.freq_bins();
    let (rows, frames) = spec.bins.dim();
    if rows != f_bins {
        return Err(StftError::ShapeMismatch {
            expected_rows: f_bins,
            expected_cols: frames,
            rows,
            cols: frames,
        });
    }
    if frames != params.num_frames(spec.orig_len) {
        return Err(StftError::InconsistentFrames {
            frames,
            orig_len: spec.orig_len,
            hop: params.hop,
        });
    }

    let win = params.window_values();
    let wsum = window_power_sum(params, spec.orig_len);
    let mut acc = vec![0.0; spec.orig_len + n];

    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let mut buf = vec![Complex64::default(); n];
    for k in 0..frames {
        buf[0] = spec.bins[(0, k)];
        buf[n / 2] = spec.bins[(n / 2, k)];
        for f in 1..n / 2 {
            buf[f] = spec.bins[(f, k)];
            buf[n - f] = spec.bins[(f, k)].conj();
        }
        ifft.process(&mut buf);
        let start = k * params.hop;
        for (i, v) in buf.iter().enumerate() {
            // rustfft's inverse is unnormalized; real part defines synthesis
            acc[start + i] += v.re / n as f64 * win[i];
        }
    }
    for (a, ws) in acc.iter_mut().zip(&wsum) {
        *a /= ws.max(NORM_FLOOR);
    }
    Ok(Waveform::new(
        acc[pad..pad + spec.orig_len].to_vec(),
        spec.sample_rate,
    )?)
}

/// Adjoint of [`istft`] under the time-domain dot product and the
/// multiplicity-weighted spectral product of [`spectral_dot`]: for any
/// spectrogram `S` and time vector `r` of matching geometry,
/// `dot(istft(S), r) == spectral_dot(&S.bins, &istft_adjoint(r, params))`.
///
/// This is the exact gradient map from a time-domain residual back to
/// one-sided spectrogram coefficients.
pub fn istft_adjoint(residual: &[f64], params: &StftParams) -> Result<Array2<Complex64>, StftError> {
    params.validate()?;
    if residual.is_empty() {
        return Err(StftError::Signal(SignalError::Empty));
    }
    let n = params.win_len;
    let pad = n / 2;
    let t = residual.len();
    let frames = params.num_frames(t);
    let f_bins = params.freq_bins();
    let win = params.window_values();
    let wsum = window_power_sum(params, t);

    // Residual placed in padded coordinates and divided by the same
    // normalizer synthesis divides by; padding positions stay zero.
    let mut spread = vec![0.0; t + n];
    for (i, &r) in residual.iter().enumerate() {
        spread[pad + i] = r / wsum[pad + i].max(NORM_FLOOR);
    }

    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut out = Array2::zeros((f_bins, frames));
    let mut buf = vec![Complex64::default(); n];
    for k in 0..frames {
        let start = k * params.hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = Complex64::new(spread[start + i] * win[i], 0.0);
        }
        fft.process(&mut buf);
        for f in 0..f_bins {
            out[(f, k)] = buf[f] / n as f64;
        }
    }
    Ok(out)
}

/// Weight of a one-sided bin in full-spectrum sums: 1 for DC and
/// Nyquist, 2 for every middle bin (which stands for a conjugate pair).
pub fn bin_multiplicity(f: usize, f_bins: usize) -> f64 {
    if f == 0 || f + 1 == f_bins {
        1.0
    } else {
        2.0
    }
}

/// Real inner product over one-sided arrays with bin multiplicity:
/// `sum over f,k of mult(f) * Re(conj(a) * b)`.
pub fn spectral_dot(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Result<f64, StftError> {
    if a.dim() != b.dim() {
        return Err(StftError::ShapeMismatch {
            expected_rows: a.nrows(),
            expected_cols: a.ncols(),
            rows: b.nrows(),
            cols: b.ncols(),
        });
    }
    let f_bins = a.nrows();
    let mut acc = 0.0;
    for f in 0..f_bins {
        let mult = bin_multiplicity(f, f_bins);
        for k in 0..a.ncols() {
            acc += mult * (a[(f, k)].conj() * b[(f, k)]).re;
        }
    }
    Ok(acc)
}

/// Elementwise complex product of spectrogram and mask.
pub fn apply_mask(spec: &Spectrogram, mask: &Mask) -> Result<Spectrogram, StftError> {
    if mask.values.dim() != spec.bins.dim() {
        return Err(StftError::ShapeMismatch {
            expected_rows: spec.bins.nrows(),
            expected_cols: spec.bins.ncols(),
            rows: mask.values.nrows(),
            cols: mask.values.ncols(),
        });
    }
    Ok(Spectrogram {
        bins: &spec.bins * &mask.values,
        params: spec.params,
        orig_len: spec.orig_len,
        sample_rate: spec.sample_rate,
    })
}

/// Log-amplitude features: `ln(|bin| + eps)` per entry.
pub fn log_magnitude(spec: &Spectrogram, eps: f64) -> Result<Array2<f64>, StftError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(StftError::BadEpsilon(eps));
    }
    Ok(spec.bins.mapv(|z| (z.norm() + eps).ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngExt;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const SR: u32 = 16_000;

    fn random_wave(len: usize, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Waveform::new(
            (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
            SR,
        )
        .unwrap()
    }

    fn random_spec(params: &StftParams, orig_len: usize, seed: u64) -> Spectrogram {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = (params.freq_bins(), params.num_frames(orig_len));
        let bins = Array2::from_shape_fn(shape, |_| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        Spectrogram {
            bins,
            params: *params,
            orig_len,
            sample_rate: SR,
        }
    }

    #[test]
    fn window_is_periodic_hamming() {
        let p = StftParams::default();
        let w = p.window_values();
        assert_eq!(w.len(), 512);
        assert!((w[0] - 0.08).abs() < 1e-15);
        assert!((w[256] - 1.0).abs() < 1e-15);
        // periodic symmetry: w[n] == w[N - n]
        for n in 1..256 {
            assert!((w[n] - w[512 - n]).abs() < 1e-12);
        }
    }

    #[test]
    fn frame_count_follows_framing_rule() {
        let p = StftParams::default();
        for (t, k) in [(1, 1), (127, 1), (128, 2), (12_800, 101), (16_000, 126)] {
            assert_eq!(p.num_frames(t), k, "orig_len {t}");
        }
    }

    #[test]
    fn round_trip_reconstructs_signal() {
        let p = StftParams::default();
        for (len, seed) in [(1usize, 0u64), (100, 1), (511, 2), (512, 3), (513, 4), (12_345, 5), (16_000, 6)] {
            let x = random_wave(len, seed);
            let y = istft(&stft(&x, &p).unwrap()).unwrap();
            assert_eq!(y.len(), x.len());
            let max_err = x
                .samples()
                .iter()
                .zip(y.samples())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(max_err < 1e-6, "len {len}: max err {max_err}");
        }
    }

    #[test]
    fn round_trip_with_other_geometry() {
        let p = StftParams {
            win_len: 256,
            hop: 64,
            window: WindowKind::Hamming,
        };
        let x = random_wave(5_000, 7);
        let y = istft(&stft(&x, &p).unwrap()).unwrap();
        let max_err = x
            .samples()
            .iter()
            .zip(y.samples())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_err < 1e-6, "max err {max_err}");
    }

    #[test]
    fn dc_signal_concentrates_in_bin_zero() {
        let p = StftParams::default();
        let c = 0.3;
        let x = Waveform::new(vec![c; 4_096], SR).unwrap();
        let s = stft(&x, &p).unwrap();
        let wsum: f64 = p.window_values().iter().sum();
        for k in 0..s.bins.ncols() {
            let dc = s.bins[(0, k)];
            assert!((dc.re - c * wsum).abs() < 1e-9, "frame {k}: {dc}");
            assert!(dc.im.abs() < 1e-9);
        }
    }

    #[test]
    fn pure_tone_peaks_at_its_bin() {
        let p = StftParams::default();
        // bin 32 of a 512-point transform at 16 kHz -> exactly 1000 Hz
        let f_bin = 32usize;
        let f_hz = f_bin as f64 * SR as f64 / p.win_len as f64;
        let x = Waveform::new(
            (0..8_192)
                .map(|t| (std::f64::consts::TAU * f_hz * t as f64 / SR as f64).sin())
                .collect(),
            SR,
        )
        .unwrap();
        let s = stft(&x, &p).unwrap();
        // interior frames only; edge frames see reflected structure
        for k in 10..s.bins.ncols() - 10 {
            let mut best = 0usize;
            let mut best_mag = 0.0;
            for f in 0..s.bins.nrows() {
                let m = s.bins[(f, k)].norm();
                if m > best_mag {
                    best_mag = m;
                    best = f;
                }
            }
            assert_eq!(best, f_bin, "frame {k}");
        }
    }

    #[test]
    fn adjoint_matches_inner_products() {
        let cases = [
            (StftParams::default(), 4_000usize),
            (StftParams::default(), 513),
            (
                StftParams {
                    win_len: 256,
                    hop: 64,
                    window: WindowKind::Hamming,
                },
                1_000,
            ),
            (
                StftParams {
                    win_len: 64,
                    hop: 16,
                    window: WindowKind::Hamming,
                },
                65,
            ),
        ];
        for (i, (p, len)) in cases.iter().enumerate() {
            let s = random_spec(p, *len, 100 + i as u64);
            let r = random_wave(*len, 200 + i as u64);

            let lhs: f64 = istft(&s)
                .unwrap()
                .samples()
                .iter()
                .zip(r.samples())
                .map(|(a, b)| a * b)
                .sum();
            let adj = istft_adjoint(r.samples(), p).unwrap();
            let rhs = spectral_dot(&s.bins, &adj).unwrap();

            let scale = lhs.abs().max(1.0);
            assert!(
                (lhs - rhs).abs() / scale < 1e-10,
                "case {i}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn apply_mask_identity_and_shape_check() {
        let p = StftParams::default();
        let x = random_wave(2_000, 3);
        let s = stft(&x, &p).unwrap();
        let ones = Mask {
            values: Array2::from_elem(s.bins.dim(), Complex64::new(1.0, 0.0)),
        };
        let masked = apply_mask(&s, &ones).unwrap();
        assert_eq!(masked.bins, s.bins);

        let bad = Mask {
            values: Array2::from_elem((3, 3), Complex64::new(1.0, 0.0)),
        };
        assert!(matches!(
            apply_mask(&s, &bad),
            Err(StftError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn mask_halving_halves_output() {
        let p = StftParams::default();
        let x = random_wave(3_000, 9);
        let s = stft(&x, &p).unwrap();
        let half = Mask {
            values: Array2::from_elem(s.bins.dim(), Complex64::new(0.5, 0.0)),
        };
        let y = istft(&apply_mask(&s, &half).unwrap()).unwrap();
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert!((a * 0.5 - b).abs() < 1e-9);
        }
    }

    #[test]
    fn log_magnitude_floor_and_monotonicity() {
        let p = StftParams::default();
        let zeros = Waveform::zeros(1_000, SR).unwrap();
        let feats = log_magnitude(&stft(&zeros, &p).unwrap(), DEFAULT_LOG_EPS).unwrap();
        let expected = DEFAULT_LOG_EPS.ln();
        for v in feats.iter() {
            assert!((v - expected).abs() < 1e-12);
        }

        let x = random_wave(1_000, 4);
        let s = stft(&x, &p).unwrap();
        let s10 = stft(&x.scaled(10.0).unwrap(), &p).unwrap();
        let f1 = log_magnitude(&s, DEFAULT_LOG_EPS).unwrap();
        let f10 = log_magnitude(&s10, DEFAULT_LOG_EPS).unwrap();
        let mut raised = 0usize;
        for (a, b) in f1.iter().zip(f10.iter()) {
            if b > a {
                raised += 1;
            }
        }
        assert!(raised as f64 > 0.99 * f1.len() as f64);

        assert!(matches!(
            log_magnitude(&s, 0.0),
            Err(StftError::BadEpsilon(_))
        ));
        assert!(matches!(
            log_magnitude(&s, -1.0),
            Err(StftError::BadEpsilon(_))
        ));
    }

    #[test]
    fn istft_rejects_inconsistent_geometry() {
        let p = StftParams::default();
        let mut s = random_spec(&p, 1_000, 5);
        s.orig_len = 999_999;
        assert!(matches!(
            istft(&s),
            Err(StftError::InconsistentFrames { .. })
        ));
    }

    #[test]
    fn params_validation() {
        let bad_hop = StftParams {
            win_len: 512,
            hop: 0,
            window: WindowKind::Hamming,
        };
        assert!(matches!(bad_hop.validate(), Err(StftError::BadHop { .. })));

        let odd = StftParams {
            win_len: 511,
            hop: 128,
            window: WindowKind::Hamming,
        };
        assert!(matches!(odd.validate(), Err(StftError::BadWindowLen(511))));

        let hop_too_big = StftParams {
            win_len: 128,
            hop: 256,
            window: WindowKind::Hamming,
        };
        assert!(matches!(
            hop_too_big.validate(),
            Err(StftError::BadHop { .. })
        ));
    }

    #[test]
    fn bin_multiplicity_weights() {
        let f_bins = 257;
        assert_eq!(bin_multiplicity(0, f_bins), 1.0);
        assert_eq!(bin_multiplicity(256, f_bins), 1.0);
        for f in 1..256 {
            assert_eq!(bin_multiplicity(f, f_bins), 2.0);
        }
    }
}
