//! Mono time-domain signals and power measurement.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean power at or below this is treated as silence by consumers that
/// need a nonzero power (SNR gains, SI-SDR references).
pub const SILENCE_POWER: f64 = 1e-12;

#[derive(Error, Debug)]
pub enum SignalError {
    #[error("waveform must contain at least one sample")]
    Empty,
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("length mismatch: {0} vs {1} samples")]
    LengthMismatch(usize, usize),
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    RateMismatch(u32, u32),
}

/// Mono signal in double precision. Samples are validated once at
/// construction (non-empty, all finite, positive rate) and immutable after.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, SignalError> {
        if samples.is_empty() {
            return Err(SignalError::Empty);
        }
        if sample_rate == 0 {
            return Err(SignalError::ZeroSampleRate);
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(SignalError::NonFinite(i));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// All-zero signal of the given length.
    pub fn zeros(len: usize, sample_rate: u32) -> Result<Self, SignalError> {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false: emptiness is rejected at construction.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Mean of squared samples.
    pub fn mean_power(&self) -> f64 {
        mean_power(&self.samples).expect("waveform is never empty")
    }

    /// Largest absolute sample value.
    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |acc, s| acc.max(s.abs()))
    }

    /// New waveform with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self, SignalError> {
        Self::new(
            self.samples.iter().map(|s| s * gain).collect(),
            self.sample_rate,
        )
    }

    /// Sample-wise sum. Lengths and rates must match.
    pub fn add(&self, other: &Self) -> Result<Self, SignalError> {
        if self.len() != other.len() {
            return Err(SignalError::LengthMismatch(self.len(), other.len()));
        }
        if self.sample_rate != other.sample_rate {
            return Err(SignalError::RateMismatch(
                self.sample_rate,
                other.sample_rate,
            ));
        }
        Self::new(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
            self.sample_rate,
        )
    }
}

/// Mean of squared samples; errors on an empty slice.
pub fn mean_power(samples: &[f64]) -> Result<f64, SignalError> {
    if samples.is_empty() {
        return Err(SignalError::Empty);
    }
    Ok(samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_of_zeros_is_zero() {
        let w = Waveform::zeros(256, 16_000).unwrap();
        assert_eq!(w.mean_power(), 0.0);
    }

    #[test]
    fn power_of_ones_is_one() {
        let w = Waveform::new(vec![1.0; 100], 16_000).unwrap();
        assert_eq!(w.mean_power(), 1.0);
    }

    #[test]
    fn power_of_mixed_samples() {
        assert_eq!(mean_power(&[3.0, -4.0]).unwrap(), 12.5);
    }

    #[test]
    fn power_scales_quadratically() {
        let w = Waveform::new(vec![0.3, -0.9, 0.5, 0.1], 8_000).unwrap();
        let scaled = w.scaled(2.0).unwrap();
        let ratio = scaled.mean_power() / w.mean_power();
        assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn empty_waveform_rejected() {
        assert!(matches!(
            Waveform::new(vec![], 16_000),
            Err(SignalError::Empty)
        ));
        assert!(matches!(mean_power(&[]), Err(SignalError::Empty)));
    }

    #[test]
    fn non_finite_sample_rejected() {
        let err = Waveform::new(vec![0.0, f64::NAN], 16_000).unwrap_err();
        assert!(matches!(err, SignalError::NonFinite(1)));
        let err = Waveform::new(vec![f64::INFINITY], 16_000).unwrap_err();
        assert!(matches!(err, SignalError::NonFinite(0)));
    }

    #[test]
    fn zero_rate_rejected() {
        assert!(matches!(
            Waveform::new(vec![0.0], 0),
            Err(SignalError::ZeroSampleRate)
        ));
    }

    #[test]
    fn add_requires_matching_shape() {
        let a = Waveform::zeros(10, 16_000).unwrap();
        let b = Waveform::zeros(11, 16_000).unwrap();
        assert!(matches!(a.add(&b), Err(SignalError::LengthMismatch(10, 11))));
        let c = Waveform::zeros(10, 8_000).unwrap();
        assert!(matches!(a.add(&c), Err(SignalError::RateMismatch(..))));
    }

    #[test]
    fn add_sums_samples() {
        let a = Waveform::new(vec![1.0, 2.0], 16_000).unwrap();
        let b = Waveform::new(vec![0.5, -1.0], 16_000).unwrap();
        assert_eq!(a.add(&b).unwrap().samples(), &[1.5, 1.0]);
    }
}
