//! Synthetic corpus construction, on-disk corpus manifests, and the
//! assembly of training/evaluation sets from either source.
//!
//! Seed discipline: every set derives its own stream from the master seed
//! and a fixed salt, so adding clips to one set never shifts another.

use std::collections::BTreeSet;
use std::path::Path;

use masklab_core::mixer::{self, MixError, SnrDb, Strategy};
use masklab_core::seeds;
use masklab_core::signal::{SignalError, Waveform};
use masklab_core::synth::{self, SynthError, SynthSpec};
use masklab_core::trainer::{
    EvalItem, EvalSet, NoisePool, NoisyCorpus, SupervisedCorpus, TrainingData, Utterance,
};
use masklab_core::wav::{self, WavEncoding, WavError};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{parse_family, ConfigError, CorpusSection, ExperimentSection};

const SALT_SPEECH_TRAIN: u64 = 101;
const SALT_SPEECH_VAL: u64 = 102;
const SALT_SPEECH_TEST: u64 = 103;
const SALT_SPEECH_TEST_MM: u64 = 104;
const SALT_POOL: u64 = 105;
const SALT_OBS: u64 = 106;
const SALT_HELDOUT: u64 = 107;
const SALT_MISMATCH: u64 = 108;
const SALT_OBS_MIX: u64 = 109;
const SALT_VAL_MIX: u64 = 110;
const SALT_TEST_MIX: u64 = 111;
const SALT_TEST_MM_MIX: u64 = 112;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Mix(#[from] MixError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error("manifest {path}: {source}")]
    ManifestIo {
        path: String,
        source: std::io::Error,
    },
    #[error("manifest {path}: {source}")]
    ManifestFormat {
        path: String,
        source: serde_json::Error,
    },
    #[error("manifest invalid: {0}")]
    ManifestInvalid(String),
    #[error("{strategy} training needs {required}, but the corpus provides none")]
    StrategySources {
        strategy: Strategy,
        required: &'static str,
    },
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Everything the experiments consume. Clean training material and noisy
/// observations are both present; each strategy is handed only its slice.
#[derive(Debug, Clone)]
pub struct LabCorpora {
    pub train_clean: Vec<Utterance>,
    pub noisy_train: Vec<Utterance>,
    pub train_pool: NoisePool,
    /// Observation-noise clips behind `noisy_train`; sweeps remix them at
    /// arm-specific SNRs and the overlap diagnostic compares against them.
    pub obs_pool: Vec<Utterance>,
    pub val: EvalSet,
    pub test_matched: EvalSet,
    pub test_mismatched: EvalSet,
}

impl LabCorpora {
    /// The slice of the corpora a strategy may train on. Supervised
    /// strategies get clean sources, the noisy-target strategy gets only
    /// noisy observations; the noise pool is the same multiset for all.
    pub fn training_data(&self, strategy: Strategy, multiplier: usize) -> TrainingData {
        match strategy {
            Strategy::CleanTarget | Strategy::NoiseTarget => {
                TrainingData::Supervised(SupervisedCorpus {
                    clean: self.train_clean.clone(),
                    noise: self.train_pool.clone(),
                })
            }
            Strategy::NoisyTarget => TrainingData::NoisyOnly(NoisyCorpus {
                noisy: replicate(&self.noisy_train, multiplier),
                noise: self.train_pool.clone(),
            }),
        }
    }
}

/// Emulates a larger noisy corpus by repeating the utterance list; ids stay
/// unique and repeats still receive fresh per-epoch noise draws.
fn replicate(utts: &[Utterance], times: usize) -> Vec<Utterance> {
    let times = times.max(1);
    if times == 1 {
        return utts.to_vec();
    }
    let mut out = Vec::with_capacity(utts.len() * times);
    for rep in 0..times {
        for u in utts {
            let id = if rep == 0 {
                u.id.clone()
            } else {
                format!("{}-rep{rep}", u.id)
            };
            out.push(Utterance {
                id,
                wave: u.wave.clone(),
            });
        }
    }
    out
}

fn label_salt(label: &str) -> u64 {
    // FNV-1a; stable across runs and platforms.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn speech_spec(duration_s: f64, seed: u64) -> SynthSpec {
    SynthSpec {
        kind: synth::SynthKind::SpeechLike,
        duration_s,
        seed,
    }
}

pub fn speech_set(
    prefix: &str,
    count: usize,
    duration_s: f64,
    sample_rate: u32,
    stream_seed: u64,
) -> Result<Vec<Utterance>, CorpusError> {
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let spec = speech_spec(duration_s, seeds::mix(stream_seed, i as u64));
        out.push(Utterance {
            id: format!("{prefix}-{i:03}"),
            wave: synth::synth(&spec, sample_rate)?,
        });
    }
    Ok(out)
}

/// One family's pool of independent noise clips.
pub fn noise_pool(
    family: &str,
    count: usize,
    duration_s: f64,
    sample_rate: u32,
    stream_seed: u64,
) -> Result<Vec<Utterance>, CorpusError> {
    let kind = parse_family(family)?;
    let stream = seeds::mix(stream_seed, label_salt(family));
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let spec = SynthSpec {
            kind,
            duration_s,
            seed: seeds::mix(stream, i as u64),
        };
        out.push(Utterance {
            id: format!("{family}-{i:02}"),
            wave: synth::synth(&spec, sample_rate)?,
        });
    }
    Ok(out)
}

/// Noisy observations: each clean utterance mixed with a drawn observation
/// clip at one of the observation SNRs (cycled so every level is covered).
pub fn build_noisy_observations(
    clean: &[Utterance],
    obs_pool: &[Utterance],
    obs_snr_db: &[f64],
    stream_seed: u64,
) -> Result<Vec<Utterance>, CorpusError> {
    if obs_pool.is_empty() {
        return Err(CorpusError::ManifestInvalid(
            "observation noise pool is empty".into(),
        ));
    }
    let mut out = Vec::with_capacity(clean.len());
    for (i, utt) in clean.iter().enumerate() {
        let item_seed = seeds::mix(stream_seed, i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(item_seed);
        let clip = &obs_pool[rng.random_range(0..obs_pool.len())];
        let snr = SnrDb::new(obs_snr_db[i % obs_snr_db.len()])?;
        let (noisy, _) = mixer::mix_at_snr(&utt.wave, &clip.wave, snr, seeds::mix(item_seed, 1))?;
        out.push(Utterance {
            id: format!("obs-{i:03}"),
            wave: noisy,
        });
    }
    Ok(out)
}

/// Evaluation items: speech mixed with held-out noise clips at the test
/// SNRs, both cycled deterministically; the clean source rides along as
/// the scoring reference.
pub fn build_eval_set(
    speech: &[Utterance],
    noise: &[Utterance],
    snr_db: &[f64],
    stream_seed: u64,
) -> Result<EvalSet, CorpusError> {
    if noise.is_empty() {
        return Err(CorpusError::ManifestInvalid(
            "evaluation noise pool is empty".into(),
        ));
    }
    let mut items = Vec::with_capacity(speech.len());
    for (i, utt) in speech.iter().enumerate() {
        let clip = &noise[i % noise.len()];
        let snr = SnrDb::new(snr_db[i % snr_db.len()])?;
        let (input, _) =
            mixer::mix_at_snr(&utt.wave, &clip.wave, snr, seeds::mix(stream_seed, i as u64))?;
        items.push(EvalItem {
            id: utt.id.clone(),
            input,
            clean_ref: utt.wave.clone(),
        });
    }
    Ok(EvalSet { items })
}

/// Builds the complete synthetic corpus family in memory.
///
/// Streams, all independent: speech for train/val/matched-test/mismatched
/// test; one noise pool per training family; observation clips (mixed into
/// noisy training targets); held-out observation-family clips (mixed into
/// evaluation inputs; never seen in training); mismatch-family clips.
pub fn build_lab_corpora(
    corpus: &CorpusSection,
    experiment: &ExperimentSection,
    master_seed: u64,
) -> Result<LabCorpora, CorpusError> {
    let rate = corpus.sample_rate;
    let dur = corpus.duration_s;

    let train_clean = speech_set(
        "train",
        corpus.train_count,
        dur,
        rate,
        seeds::mix(master_seed, SALT_SPEECH_TRAIN),
    )?;
    let val_speech = speech_set(
        "val",
        corpus.val_count,
        dur,
        rate,
        seeds::mix(master_seed, SALT_SPEECH_VAL),
    )?;
    let test_speech = speech_set(
        "test",
        corpus.test_count,
        dur,
        rate,
        seeds::mix(master_seed, SALT_SPEECH_TEST),
    )?;
    let test_mm_speech = speech_set(
        "testmm",
        corpus.test_count,
        dur,
        rate,
        seeds::mix(master_seed, SALT_SPEECH_TEST_MM),
    )?;

    let mut pool_clips = Vec::new();
    for family in &experiment.train_pool_families {
        pool_clips.extend(noise_pool(
            family,
            corpus.pool_clips,
            corpus.noise_duration_s,
            rate,
            seeds::mix(master_seed, SALT_POOL),
        )?);
    }
    let train_pool = NoisePool { clips: pool_clips };

    let obs_pool = noise_pool(
        &experiment.observation_family,
        corpus.pool_clips,
        corpus.noise_duration_s,
        rate,
        seeds::mix(master_seed, SALT_OBS),
    )?;
    let heldout_pool = noise_pool(
        &experiment.observation_family,
        corpus.pool_clips,
        corpus.noise_duration_s,
        rate,
        seeds::mix(master_seed, SALT_HELDOUT),
    )?;
    let mismatch_pool = noise_pool(
        &experiment.mismatch_family,
        corpus.pool_clips,
        corpus.noise_duration_s,
        rate,
        seeds::mix(master_seed, SALT_MISMATCH),
    )?;

    let noisy_train = build_noisy_observations(
        &train_clean,
        &obs_pool,
        &corpus.observation_snr_db,
        seeds::mix(master_seed, SALT_OBS_MIX),
    )?;

    let val = build_eval_set(
        &val_speech,
        &heldout_pool,
        &corpus.test_snr_db,
        seeds::mix(master_seed, SALT_VAL_MIX),
    )?;
    let test_matched = build_eval_set(
        &test_speech,
        &heldout_pool,
        &corpus.test_snr_db,
        seeds::mix(master_seed, SALT_TEST_MIX),
    )?;
    let test_mismatched = build_eval_set(
        &test_mm_speech,
        &mismatch_pool,
        &corpus.test_snr_db,
        seeds::mix(master_seed, SALT_TEST_MM_MIX),
    )?;

    Ok(LabCorpora {
        train_clean,
        noisy_train,
        train_pool,
        obs_pool,
        val,
        test_matched,
        test_mismatched,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusRole {
    Clean,
    Noise,
    Noisy,
}

/// One corpus item: either a rendered WAV (`path`) or a synthesis recipe
/// (`synth`), at least one of which must be present. A noisy entry may
/// carry a clean reference usable by evaluation only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub role: CorpusRole,
    /// Set membership: `train`, `val`, `test`, `pool:<family>`,
    /// `obs:<family>`, `heldout:<family>`, `mismatch:<family>`.
    pub group: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
    pub duration_s: f64,
    pub seed: u64,
    /// Hidden clean reference for scoring noisy entries; never offered to
    /// training code.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_only_clean: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub sample_rate: u32,
    pub entries: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.id.as_str()) {
                return Err(CorpusError::ManifestInvalid(format!(
                    "duplicate entry id {:?}",
                    e.id
                )));
            }
            if e.path.is_none() && e.synth.is_none() {
                return Err(CorpusError::ManifestInvalid(format!(
                    "entry {:?} has neither a path nor a synth spec",
                    e.id
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let text = serde_json::to_string_pretty(self).map_err(|source| {
            CorpusError::ManifestFormat {
                path: path.display().to_string(),
                source,
            }
        })?;
        std::fs::write(path, text).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::ManifestIo {
            path: path.display().to_string(),
            source,
        })?;
        let manifest: CorpusManifest =
            serde_json::from_str(&text).map_err(|source| CorpusError::ManifestFormat {
                path: path.display().to_string(),
                source,
            })?;
        manifest.validate()?;
        Ok(manifest)
    }
}

/// Renders every corpus set to WAV files under `out_dir/wavs` and writes
/// `manifest.json` beside them. The default configuration yields 260
/// speech files (train + val + test) plus the noise pools.
pub fn synth_corpus(
    corpus: &CorpusSection,
    experiment: &ExperimentSection,
    master_seed: u64,
    out_dir: &Path,
) -> Result<CorpusManifest, CorpusError> {
    let wav_dir = out_dir.join("wavs");
    std::fs::create_dir_all(&wav_dir).map_err(|source| CorpusError::Io {
        path: wav_dir.display().to_string(),
        source,
    })?;

    let mut entries = Vec::new();
    let mut render = |utts: &[Utterance],
                      role: CorpusRole,
                      group: &str,
                      duration_s: f64,
                      stream_seed: u64|
     -> Result<(), CorpusError> {
        for (i, u) in utts.iter().enumerate() {
            let rel = format!("wavs/{}.wav", u.id);
            wav::write_wav(out_dir.join(&rel), &u.wave, WavEncoding::Float32)?;
            entries.push(ManifestEntry {
                id: u.id.clone(),
                role,
                group: group.to_string(),
                path: Some(rel),
                synth: None,
                duration_s,
                seed: seeds::mix(stream_seed, i as u64),
                eval_only_clean: None,
            });
        }
        Ok(())
    };

    let rate = corpus.sample_rate;
    let dur = corpus.duration_s;
    let train_stream = seeds::mix(master_seed, SALT_SPEECH_TRAIN);
    let val_stream = seeds::mix(master_seed, SALT_SPEECH_VAL);
    let test_stream = seeds::mix(master_seed, SALT_SPEECH_TEST);

    render(
        &speech_set("train", corpus.train_count, dur, rate, train_stream)?,
        CorpusRole::Clean,
        "train",
        dur,
        train_stream,
    )?;
    render(
        &speech_set("val", corpus.val_count, dur, rate, val_stream)?,
        CorpusRole::Clean,
        "val",
        dur,
        val_stream,
    )?;
    render(
        &speech_set("test", corpus.test_count, dur, rate, test_stream)?,
        CorpusRole::Clean,
        "test",
        dur,
        test_stream,
    )?;

    let mut pool_families: Vec<String> = experiment.train_pool_families.clone();
    for f in &experiment.noise_sweep_families {
        if !pool_families.contains(f) {
            pool_families.push(f.clone());
        }
    }
    for family in &pool_families {
        let stream = seeds::mix(seeds::mix(master_seed, SALT_POOL), label_salt(family));
        render(
            &noise_pool(
                family,
                corpus.pool_clips,
                corpus.noise_duration_s,
                rate,
                seeds::mix(master_seed, SALT_POOL),
            )?,
            CorpusRole::Noise,
            &format!("pool:{family}"),
            corpus.noise_duration_s,
            stream,
        )?;
    }

    let obs = &experiment.observation_family;
    let obs_pool = {
        let mut p = noise_pool(
            obs,
            corpus.pool_clips,
            corpus.noise_duration_s,
            rate,
            seeds::mix(master_seed, SALT_OBS),
        )?;
        for u in &mut p {
            u.id = format!("obs-{}", u.id);
        }
        p
    };
    let heldout_pool = {
        let mut p = noise_pool(
            obs,
            corpus.pool_clips,
            corpus.noise_duration_s,
            rate,
            seeds::mix(master_seed, SALT_HELDOUT),
        )?;
        for u in &mut p {
            u.id = format!("heldout-{}", u.id);
        }
        p
    };
    let mismatch_pool = {
        let mut p = noise_pool(
            &experiment.mismatch_family,
            corpus.pool_clips,
            corpus.noise_duration_s,
            rate,
            seeds::mix(master_seed, SALT_MISMATCH),
        )?;
        for u in &mut p {
            u.id = format!("mismatch-{}", u.id);
        }
        p
    };
    render(
        &obs_pool,
        CorpusRole::Noise,
        &format!("obs:{obs}"),
        corpus.noise_duration_s,
        seeds::mix(seeds::mix(master_seed, SALT_OBS), label_salt(obs)),
    )?;
    render(
        &heldout_pool,
        CorpusRole::Noise,
        &format!("heldout:{obs}"),
        corpus.noise_duration_s,
        seeds::mix(seeds::mix(master_seed, SALT_HELDOUT), label_salt(obs)),
    )?;
    render(
        &mismatch_pool,
        CorpusRole::Noise,
        &format!("mismatch:{}", experiment.mismatch_family),
        corpus.noise_duration_s,
        seeds::mix(
            seeds::mix(master_seed, SALT_MISMATCH),
            label_salt(&experiment.mismatch_family),
        ),
    )?;

    let manifest = CorpusManifest {
        sample_rate: corpus.sample_rate,
        entries,
    };
    manifest.validate()?;
    manifest.save(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}

/// A manifest with every entry realized as audio.
pub struct LoadedCorpus {
    pub manifest: CorpusManifest,
    pub waves: Vec<Waveform>,
}

/// Realizes a manifest: reads each entry's WAV, or synthesizes it when
/// only a recipe is present.
pub fn load_corpus(manifest_path: &Path) -> Result<LoadedCorpus, CorpusError> {
    let manifest = CorpusManifest::load(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut waves = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        let wave = match (&e.path, &e.synth) {
            (Some(rel), _) => wav::read_wav(base.join(rel))?,
            (None, Some(spec)) => synth::synth(spec, manifest.sample_rate)?,
            (None, None) => unreachable!("validated at load"),
        };
        waves.push(wave);
    }
    Ok(LoadedCorpus { manifest, waves })
}

impl LoadedCorpus {
    fn group(&self, name: &str) -> Vec<(usize, &ManifestEntry)> {
        self.manifest
            .entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.group == name)
            .collect()
    }

    fn utterances(&self, picks: &[(usize, &ManifestEntry)]) -> Vec<Utterance> {
        picks
            .iter()
            .map(|(i, e)| Utterance {
                id: e.id.clone(),
                wave: self.waves[*i].clone(),
            })
            .collect()
    }

    fn group_with_prefix(&self, prefix: &str) -> Vec<(usize, &ManifestEntry)> {
        self.manifest
            .entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.group.starts_with(prefix))
            .collect()
    }

    /// Assembles the corpora the experiments need from manifest groups.
    /// Mirrors `build_lab_corpora`, with noise clips coming from the
    /// manifest pools instead of fresh synthesis.
    pub fn assemble(
        &self,
        corpus: &CorpusSection,
        experiment: &ExperimentSection,
        master_seed: u64,
    ) -> Result<LabCorpora, CorpusError> {
        let train_entries = self.group("train");
        let train_clean: Vec<Utterance> = self.utterances(
            &train_entries
                .iter()
                .filter(|(_, e)| e.role == CorpusRole::Clean)
                .cloned()
                .collect::<Vec<_>>(),
        );
        let noisy_entries: Vec<(usize, &ManifestEntry)> = train_entries
            .iter()
            .filter(|(_, e)| e.role == CorpusRole::Noisy)
            .cloned()
            .collect();

        let mut pool_clips = Vec::new();
        for family in &experiment.train_pool_families {
            let picks = self.group(&format!("pool:{family}"));
            if picks.is_empty() {
                return Err(CorpusError::ManifestInvalid(format!(
                    "manifest has no pool:{family} noise entries"
                )));
            }
            pool_clips.extend(self.utterances(&picks));
        }
        let train_pool = NoisePool { clips: pool_clips };

        let obs_picks = self.group_with_prefix("obs:");
        let obs_pool = self.utterances(&obs_picks);

        let noisy_train = if !noisy_entries.is_empty() {
            self.utterances(&noisy_entries)
        } else if !train_clean.is_empty() && !obs_pool.is_empty() {
            build_noisy_observations(
                &train_clean,
                &obs_pool,
                &corpus.observation_snr_db,
                seeds::mix(master_seed, SALT_OBS_MIX),
            )?
        } else {
            Vec::new()
        };

        let heldout = self.utterances(&self.group_with_prefix("heldout:"));
        let mismatch = self.utterances(&self.group_with_prefix("mismatch:"));

        let val_speech = self.utterances(
            &self
                .group("val")
                .iter()
                .filter(|(_, e)| e.role == CorpusRole::Clean)
                .cloned()
                .collect::<Vec<_>>(),
        );
        let test_speech = self.utterances(
            &self
                .group("test")
                .iter()
                .filter(|(_, e)| e.role == CorpusRole::Clean)
                .cloned()
                .collect::<Vec<_>>(),
        );

        let eval_noise = if heldout.is_empty() { &obs_pool } else { &heldout };
        let val = if val_speech.is_empty() || eval_noise.is_empty() {
            EvalSet { items: Vec::new() }
        } else {
            build_eval_set(
                &val_speech,
                eval_noise,
                &corpus.test_snr_db,
                seeds::mix(master_seed, SALT_VAL_MIX),
            )?
        };
        let test_matched = if test_speech.is_empty() || eval_noise.is_empty() {
            EvalSet { items: Vec::new() }
        } else {
            build_eval_set(
                &test_speech,
                eval_noise,
                &corpus.test_snr_db,
                seeds::mix(master_seed, SALT_TEST_MIX),
            )?
        };
        let test_mismatched = if test_speech.is_empty() || mismatch.is_empty() {
            EvalSet { items: Vec::new() }
        } else {
            build_eval_set(
                &test_speech,
                &mismatch,
                &corpus.test_snr_db,
                seeds::mix(master_seed, SALT_TEST_MM_MIX),
            )?
        };

        Ok(LabCorpora {
            train_clean,
            noisy_train,
            train_pool,
            obs_pool,
            val,
            test_matched,
            test_mismatched,
        })
    }
}

/// Training data for a strategy, with corpus/strategy mismatches rejected:
/// supervised strategies demand clean training sources, the noisy-target
/// strategy demands noisy observations (or the material to build them).
pub fn training_data_for(
    corpora: &LabCorpora,
    strategy: Strategy,
    multiplier: usize,
) -> Result<TrainingData, CorpusError> {
    match strategy {
        Strategy::CleanTarget | Strategy::NoiseTarget => {
            if corpora.train_clean.is_empty() {
                return Err(CorpusError::StrategySources {
                    strategy,
                    required: "clean training utterances",
                });
            }
        }
        Strategy::NoisyTarget => {
            if corpora.noisy_train.is_empty() {
                return Err(CorpusError::StrategySources {
                    strategy,
                    required: "noisy training observations",
                });
            }
        }
    }
    if corpora.train_pool.clips.is_empty() {
        return Err(CorpusError::StrategySources {
            strategy,
            required: "a noise pool",
        });
    }
    Ok(corpora.training_data(strategy, multiplier))
}
