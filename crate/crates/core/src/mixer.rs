//! SNR-controlled mixing and training-pair construction for the three
//! training strategies.
//!
//! Strategies differ only in what the pair holds:
//! - clean-target: input = clean + noise, target = clean;
//! - noise-target: input and target are two different noisy views of the
//!   same clean source, each with an independently drawn noise and SNR;
//! - noisy-target: input = observed noisy + extra noise, target = the
//!   observed noisy signal itself (no clean audio involved).

use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::seeds;
use crate::signal::{SignalError, Waveform, SILENCE_POWER};

const SALT_DRAW: u64 = 1_001;
const SALT_MIX_A: u64 = 1_002;
const SALT_MIX_B: u64 = 1_003;
const SALT_POOL: u64 = 1_004;

#[derive(Error, Debug)]
pub enum MixError {
    #[error("snr must be finite, got {0}")]
    NonFiniteSnr(f64),
    #[error("snr gain needs a finite snr; the clean sentinel carries no gain")]
    CleanSentinelGain,
    #[error("signal is silent, snr is undefined")]
    SilentSignal,
    #[error("noise is silent, snr is undefined")]
    SilentNoise,
    #[error("snr set must not be empty")]
    EmptySnrSet,
    #[error("snr range must satisfy lo <= hi, got [{lo}, {hi}]")]
    BadSnrRange { lo: f64, hi: f64 },
    #[error("{strategy} pairs require {required}")]
    SourceMismatch {
        strategy: Strategy,
        required: &'static str,
    },
    #[error("noise pool is empty")]
    EmptyPool,
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Training strategy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    CleanTarget,
    NoiseTarget,
    NoisyTarget,
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::CleanTarget => "clean_target",
            Strategy::NoiseTarget => "noise_target",
            Strategy::NoisyTarget => "noisy_target",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "clean_target" => Ok(Strategy::CleanTarget),
            "noise_target" => Ok(Strategy::NoiseTarget),
            "noisy_target" => Ok(Strategy::NoisyTarget),
            other => Err(format!(
                "unknown strategy '{other}'; expected clean_target, noise_target, or noisy_target"
            )),
        }
    }
}

/// Signal-to-noise ratio in decibels. Finite, except for the `clean()`
/// sentinel meaning "no noise added at all".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrDb(f64);

impl SnrDb {
    pub fn new(db: f64) -> Result<Self, MixError> {
        if !db.is_finite() {
            return Err(MixError::NonFiniteSnr(db));
        }
        Ok(Self(db))
    }

    /// Sentinel for "add nothing": mixing at this value returns the
    /// signal unchanged.
    pub const fn clean() -> Self {
        Self(f64::INFINITY)
    }

    pub fn db(&self) -> f64 {
        self.0
    }

    pub fn is_clean(&self) -> bool {
        self.0.is_infinite()
    }
}

// JSON has no literal for infinity, so the sentinel serializes as the
// string "inf" and finite values as plain numbers.
impl Serialize for SnrDb {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str("inf")
        }
    }
}

impl<'de> Deserialize<'de> for SnrDb {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = SnrDb;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number of dB (finite or inf) or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<SnrDb, E> {
                // formats with an infinity literal (TOML) land here
                if v == f64::INFINITY {
                    return Ok(SnrDb::clean());
                }
                SnrDb::new(v).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<SnrDb, E> {
                self.visit_f64(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<SnrDb, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<SnrDb, E> {
                match v {
                    "inf" => Ok(SnrDb::clean()),
                    other => Err(E::custom(format!("expected \"inf\", got \"{other}\""))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// How to draw the SNR for each pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrSpec {
    Fixed(SnrDb),
    /// Uniform choice from a discrete dB set.
    Set(Vec<f64>),
    /// Continuous uniform draw in dB.
    Uniform { lo_db: f64, hi_db: f64 },
}

impl SnrSpec {
    /// Discrete set shared by the clean-target and noise-target defaults.
    pub fn supervised_default() -> Self {
        SnrSpec::Set(vec![-5.0, 0.0, 5.0, 10.0])
    }

    /// Continuous range used by the noisy-target default, where the
    /// already-noisy observation plays the role of the signal.
    pub fn noisy_target_default() -> Self {
        SnrSpec::Uniform {
            lo_db: -5.0,
            hi_db: 5.0,
        }
    }

    pub fn draw(&self, rng: &mut impl RngExt) -> Result<SnrDb, MixError> {
        match self {
            SnrSpec::Fixed(s) => Ok(*s),
            SnrSpec::Set(vals) => {
                if vals.is_empty() {
                    return Err(MixError::EmptySnrSet);
                }
                SnrDb::new(vals[rng.random_range(0..vals.len())])
            }
            SnrSpec::Uniform { lo_db, hi_db } => {
                if !(lo_db.is_finite() && hi_db.is_finite() && lo_db <= hi_db) {
                    return Err(MixError::BadSnrRange {
                        lo: *lo_db,
                        hi: *hi_db,
                    });
                }
                if lo_db == hi_db {
                    SnrDb::new(*lo_db)
                } else {
                    SnrDb::new(rng.random_range(*lo_db..*hi_db))
                }
            }
        }
    }
}

/// Gain to apply to `noise` so that `signal + gain * noise` sits at the
/// requested SNR: `sqrt(P_signal / (P_noise * 10^(snr/10)))`.
pub fn gain_for_snr(signal: &Waveform, noise: &Waveform, snr: SnrDb) -> Result<f64, MixError> {
    if snr.is_clean() {
        return Err(MixError::CleanSentinelGain);
    }
    let p_signal = signal.mean_power();
    let p_noise = noise.mean_power();
    if p_signal <= SILENCE_POWER {
        return Err(MixError::SilentSignal);
    }
    if p_noise <= SILENCE_POWER {
        return Err(MixError::SilentNoise);
    }
    Ok((p_signal / (p_noise * 10f64.powf(snr.db() / 10.0))).sqrt())
}

/// Ratio of signal power to noise power in dB.
pub fn measured_snr_db(signal: &Waveform, noise: &Waveform) -> Result<f64, MixError> {
    let p_signal = signal.mean_power();
    let p_noise = noise.mean_power();
    if p_signal <= SILENCE_POWER {
        return Err(MixError::SilentSignal);
    }
    if p_noise <= SILENCE_POWER {
        return Err(MixError::SilentNoise);
    }
    Ok(10.0 * (p_signal / p_noise).log10())
}

/// Fits `noise` to exactly `target_len` samples: a seeded crop when it
/// is longer, a seeded cyclic tiling when shorter.
pub fn fit_length(noise: &Waveform, target_len: usize, seed: u64) -> Result<Waveform, MixError> {
    if target_len == 0 {
        return Err(MixError::Signal(SignalError::Empty));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = noise.samples();
    let out = if n.len() >= target_len {
        let start = rng.random_range(0..=n.len() - target_len);
        n[start..start + target_len].to_vec()
    } else {
        let phase = rng.random_range(0..n.len());
        (0..target_len).map(|i| n[(phase + i) % n.len()]).collect()
    };
    Ok(Waveform::new(out, noise.sample_rate())?)
}

/// Adds `noise` to `signal` at the requested SNR. Returns the mixture
/// and the fitted, scaled noise that was added. The clean sentinel adds
/// nothing and returns a zero noise track.
pub fn mix_at_snr(
    signal: &Waveform,
    noise: &Waveform,
    snr: SnrDb,
    seed: u64,
) -> Result<(Waveform, Waveform), MixError> {
    if snr.is_clean() {
        let silent = Waveform::zeros(signal.len(), signal.sample_rate())?;
        return Ok((signal.clone(), silent));
    }
    let fitted = fit_length(noise, signal.len(), seed)?;
    let gain = gain_for_snr(signal, &fitted, snr)?;
    let scaled = fitted.scaled(gain)?;
    let mixture = signal.add(&scaled)?;
    Ok((mixture, scaled))
}

/// What a pair was built from; SNRs are in draw order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMeta {
    pub snr_db: Vec<SnrDb>,
    pub source_ids: Vec<String>,
    pub seed: u64,
}

/// One training example: network input and regression target.
#[derive(Debug, Clone)]
pub struct TrainingPair {
    pub input: Waveform,
    pub target: Waveform,
    pub strategy: Strategy,
    pub meta: PairMeta,
}

/// Source material for one pair; the variant must match the strategy.
#[derive(Debug, Clone, Copy)]
pub enum PairSources<'a> {
    CleanNoise {
        clean: &'a Waveform,
        noise: &'a Waveform,
    },
    CleanTwoNoises {
        clean: &'a Waveform,
        noise_input: &'a Waveform,
        noise_target: &'a Waveform,
    },
    NoisyNoise {
        noisy: &'a Waveform,
        noise: &'a Waveform,
    },
}

/// Builds one training pair. All randomness (SNR draws, noise crops)
/// derives from `seed`.
pub fn make_pair(
    strategy: Strategy,
    sources: PairSources,
    snr_spec: &SnrSpec,
    seed: u64,
) -> Result<TrainingPair, MixError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(seed, SALT_DRAW));
    match (strategy, sources) {
        (Strategy::CleanTarget, PairSources::CleanNoise { clean, noise }) => {
            let snr = snr_spec.draw(&mut rng)?;
            let (input, _) = mix_at_snr(clean, noise, snr, seeds::mix(seed, SALT_MIX_A))?;
            Ok(TrainingPair {
                input,
                target: clean.clone(),
                strategy,
                meta: PairMeta {
                    snr_db: vec![snr],
                    source_ids: vec![],
                    seed,
                },
            })
        }
        (
            Strategy::NoiseTarget,
            PairSources::CleanTwoNoises {
                clean,
                noise_input,
                noise_target,
            },
        ) => {
            let snr_in = snr_spec.draw(&mut rng)?;
            let snr_tgt = snr_spec.draw(&mut rng)?;
            let (input, _) = mix_at_snr(clean, noise_input, snr_in, seeds::mix(seed, SALT_MIX_A))?;
            let (target, _) =
                mix_at_snr(clean, noise_target, snr_tgt, seeds::mix(seed, SALT_MIX_B))?;
            Ok(TrainingPair {
                input,
                target,
                strategy,
                meta: PairMeta {
                    snr_db: vec![snr_in, snr_tgt],
                    source_ids: vec![],
                    seed,
                },
            })
        }
        (Strategy::NoisyTarget, PairSources::NoisyNoise { noisy, noise }) => {
            let snr = snr_spec.draw(&mut rng)?;
            let (input, _) = mix_at_snr(noisy, noise, snr, seeds::mix(seed, SALT_MIX_A))?;
            Ok(TrainingPair {
                input,
                target: noisy.clone(),
                strategy,
                meta: PairMeta {
                    snr_db: vec![snr],
                    source_ids: vec![],
                    seed,
                },
            })
        }
        (Strategy::CleanTarget, _) => Err(MixError::SourceMismatch {
            strategy,
            required: "a clean source and one noise",
        }),
        (Strategy::NoiseTarget, _) => Err(MixError::SourceMismatch {
            strategy,
            required: "a clean source and two independent noises",
        }),
        (Strategy::NoisyTarget, _) => Err(MixError::SourceMismatch {
            strategy,
            required: "a noisy observation and one noise",
        }),
    }
}

/// Re-mixes each clean source with a freshly drawn noise from the pool,
/// so every source is heard under the pool's full noise variety.
/// Returns clean-target pairs; `source_ids` records `clean-<i>` and
/// `noise-<j>` indices.
pub fn swap_noise_augment(
    clean: &[Waveform],
    pool: &[Waveform],
    snr_spec: &SnrSpec,
    seed: u64,
) -> Result<Vec<TrainingPair>, MixError> {
    if pool.is_empty() {
        return Err(MixError::EmptyPool);
    }
    let mut out = Vec::with_capacity(clean.len());
    for (i, source) in clean.iter().enumerate() {
        let item_seed = seeds::mix(seed, i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(item_seed, SALT_POOL));
        let j = rng.random_range(0..pool.len());
        let mut pair = make_pair(
            Strategy::CleanTarget,
            PairSources::CleanNoise {
                clean: source,
                noise: &pool[j],
            },
            snr_spec,
            item_seed,
        )?;
        pair.meta.source_ids = vec![format!("clean-{i}"), format!("noise-{j}")];
        out.push(pair);
    }
    Ok(out)
}
