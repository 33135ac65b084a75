//! Mono WAV import/export in 16-bit PCM or 32-bit IEEE float.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{SignalError, Waveform};

/// PCM16 full-scale value. Used symmetrically for write and read so a
/// full-scale 1.0 round-trips exactly.
const PCM16_SCALE: f64 = 32_767.0;

#[derive(Error, Debug)]
pub enum WavError {
    #[error("unsupported channel count {0}: only mono files are handled")]
    UnsupportedChannels(u16),
    #[error("unsupported encoding: {bits} bits per sample, {format}")]
    UnsupportedEncoding { bits: u16, format: &'static str },
    #[error("malformed wav file: {0}")]
    Malformed(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

impl From<hound::Error> for WavError {
    fn from(e: hound::Error) -> Self {
        match e {
            hound::Error::IoError(io) => WavError::Io(io),
            other => WavError::Malformed(other.to_string()),
        }
    }
}

/// On-disk sample encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

/// Writes a mono WAV file. PCM16 samples are clamped to [-1, 1] before
/// quantization; float32 casts each sample down from f64.
pub fn write_wav(
    path: impl AsRef<Path>,
    wave: &Waveform,
    encoding: WavEncoding,
) -> Result<(), WavError> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: wave.sample_rate(),
        bits_per_sample: match encoding {
            WavEncoding::Pcm16 => 16,
            WavEncoding::Float32 => 32,
        },
        sample_format: match encoding {
            WavEncoding::Pcm16 => SampleFormat::Int,
            WavEncoding::Float32 => SampleFormat::Float,
        },
    };
    let mut writer = WavWriter::create(path, spec)?;
    match encoding {
        WavEncoding::Pcm16 => {
            for &s in wave.samples() {
                let q = (s.clamp(-1.0, 1.0) * PCM16_SCALE).round() as i16;
                writer.write_sample(q)?;
            }
        }
        WavEncoding::Float32 => {
            for &s in wave.samples() {
                writer.write_sample(s as f32)?;
            }
        }
    }
    writer.finalize()?;
    Ok(())
}

/// Reads a mono PCM16 or float32 WAV file.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform, WavError> {
    let mut reader = WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(WavError::UnsupportedChannels(spec.channels));
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / PCM16_SCALE))
            .collect::<Result<_, _>>()?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()?,
        (format, bits) => {
            return Err(WavError::UnsupportedEncoding {
                bits,
                format: match format {
                    SampleFormat::Int => "integer",
                    SampleFormat::Float => "float",
                },
            })
        }
    };
    Ok(Waveform::new(samples, spec.sample_rate)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("masklab-wav-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn pcm16_round_trip_within_quantization() {
        let w = Waveform::new(vec![0.0, 0.25, -0.25, 1.0, -1.0, 0.333], 16_000).unwrap();
        let path = tmp("pcm16.wav");
        write_wav(&path, &w, WavEncoding::Pcm16).unwrap();
        let r = read_wav(&path).unwrap();
        assert_eq!(r.sample_rate(), 16_000);
        assert_eq!(r.len(), w.len());
        for (a, b) in w.samples().iter().zip(r.samples()) {
            assert!((a - b).abs() < 1.0 / 32_768.0, "{a} vs {b}");
        }
    }

    #[test]
    fn pcm16_full_scale_is_exact() {
        let w = Waveform::new(vec![1.0, -1.0, 0.0], 8_000).unwrap();
        let path = tmp("fullscale.wav");
        write_wav(&path, &w, WavEncoding::Pcm16).unwrap();
        let r = read_wav(&path).unwrap();
        assert_eq!(r.samples()[0], 1.0);
        assert_eq!(r.samples()[2], 0.0);
        assert!((r.samples()[1] - -1.0).abs() < 1.0 / 32_768.0);
    }

    #[test]
    fn pcm16_clamps_out_of_range() {
        let w = Waveform::new(vec![2.0, -3.0], 16_000).unwrap();
        let path = tmp("clamp.wav");
        write_wav(&path, &w, WavEncoding::Pcm16).unwrap();
        let r = read_wav(&path).unwrap();
        assert_eq!(r.samples(), &[1.0, -1.0]);
    }

    #[test]
    fn float32_round_trip_is_exact_for_f32_values() {
        let w = Waveform::new(vec![0.0, 0.5, -0.5, 0.125], 16_000).unwrap();
        let path = tmp("float32.wav");
        write_wav(&path, &w, WavEncoding::Float32).unwrap();
        let r = read_wav(&path).unwrap();
        assert_eq!(r.samples(), w.samples());
    }

    #[test]
    fn stereo_rejected() {
        let path = tmp("stereo.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let mut writer = WavWriter::create(&path, spec).unwrap();
        for _ in 0..4 {
            writer.write_sample(0i16).unwrap();
        }
        writer.finalize().unwrap();
        assert!(matches!(
            read_wav(&path),
            Err(WavError::UnsupportedChannels(2))
        ));
    }

    #[test]
    fn unsupported_bit_depth_rejected() {
        let path = tmp("pcm8.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 16_000,
            bits_per_sample: 8,
            sample_format: SampleFormat::Int,
        };
        let mut writer = WavWriter::create(&path, spec).unwrap();
        for _ in 0..4 {
            writer.write_sample(0i8).unwrap();
        }
        writer.finalize().unwrap();
        assert!(matches!(
            read_wav(&path),
            Err(WavError::UnsupportedEncoding { bits: 8, .. })
        ));
    }

    #[test]
    fn garbage_file_reports_malformed() {
        let path = tmp("garbage.wav");
        std::fs::write(&path, b"not a wav file at all").unwrap();
        let err = read_wav(&path).unwrap_err();
        assert!(matches!(err, WavError::Malformed(_) | WavError::Io(_)));
    }
}
