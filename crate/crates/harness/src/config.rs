//! TOML experiment configuration: `[corpus]`, `[train]`, `[experiment]`.
//! Every key has a default; unknown keys are rejected so typos fail loudly.

use std::fmt;
use std::path::Path;

use masklab_core::mixer::{SnrDb, SnrSpec, Strategy};
use masklab_core::model::{Activation, MaskNetConfig};
use masklab_core::stft::StftParams;
use masklab_core::synth::SynthKind;
use masklab_core::trainer::{TrainConfig, ValidationMode};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing config {path}: {source}")]
    Parse {
        path: String,
        source: Box<toml::de::Error>,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown noise family {0:?}; expected speech_like, white, pink, babble, or band_<lo>_<hi>")]
    UnknownFamily(String),
}

/// Top-level configuration. Missing sections and keys take defaults; the
/// whole file may be empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct LabConfig {
    pub corpus: CorpusSection,
    pub train: TrainSection,
    pub experiment: ExperimentSection,
}

/// Synthetic corpus shape: set sizes, clip length, and the SNRs at which
/// noisy observations and evaluation inputs are constructed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusSection {
    pub sample_rate: u32,
    pub train_count: usize,
    pub val_count: usize,
    pub test_count: usize,
    pub duration_s: f64,
    /// SNRs (dB) of the noisy observations x = s + n_obs used as NyTT
    /// training material; cycled deterministically over utterances.
    pub observation_snr_db: Vec<f64>,
    /// SNRs (dB) of evaluation inputs; cycled over the test and val sets.
    pub test_snr_db: Vec<f64>,
    /// Clips per noise pool.
    pub pool_clips: usize,
    /// Noise clip length; longer than speech clips so crops vary.
    pub noise_duration_s: f64,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection {
            sample_rate: 16_000,
            train_count: 200,
            val_count: 10,
            test_count: 50,
            duration_s: 2.0,
            observation_snr_db: vec![5.0, 10.0, 15.0],
            test_snr_db: vec![0.0, 5.0, 10.0],
            pool_clips: 12,
            noise_duration_s: 3.0,
        }
    }
}

/// Training hyperparameters shared by every experiment arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden_sizes: Vec<usize>,
    pub context_frames: usize,
    pub mask_bound: f64,
    pub activation: Activation,
    pub normalize_input: bool,
    pub win_len: usize,
    pub hop: usize,
    /// SNR set (dB) for supervised pair mixing (clean-target, noise-target).
    pub supervised_snr_db: Vec<f64>,
    /// Uniform range (dB) for the additional noise mixed onto noisy targets.
    pub extra_snr_lo_db: f64,
    pub extra_snr_hi_db: f64,
    /// Replicates the noisy training list to emulate a larger noisy corpus.
    pub train_count_multiplier: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            epochs: 45,
            batch_size: 10,
            learning_rate: 1e-4,
            hidden_sizes: vec![64, 64],
            context_frames: 5,
            mask_bound: 2.0,
            activation: Activation::Relu,
            normalize_input: true,
            win_len: 512,
            hop: 128,
            supervised_snr_db: vec![-5.0, 0.0, 5.0, 10.0],
            extra_snr_lo_db: -5.0,
            extra_snr_hi_db: 5.0,
            train_count_multiplier: 1,
        }
    }
}

impl TrainSection {
    pub fn stft_params(&self) -> Result<StftParams, ConfigError> {
        let p = StftParams {
            win_len: self.win_len,
            hop: self.hop,
            ..StftParams::default()
        };
        p.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(p)
    }

    pub fn net_config(&self) -> Result<MaskNetConfig, ConfigError> {
        let cfg = MaskNetConfig {
            input_bins: self.stft_params()?.freq_bins(),
            context_frames: self.context_frames,
            hidden_sizes: self.hidden_sizes.clone(),
            mask_bound: self.mask_bound,
            activation: self.activation,
            normalize_input: self.normalize_input,
        };
        cfg.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }

    /// Pair-mixing SNR distribution for a strategy: supervised strategies
    /// draw from the fixed set, the noisy-target strategy from the uniform
    /// additional-noise range.
    pub fn pair_snr(&self, strategy: Strategy) -> SnrSpec {
        match strategy {
            Strategy::CleanTarget | Strategy::NoiseTarget => {
                SnrSpec::Set(self.supervised_snr_db.clone())
            }
            Strategy::NoisyTarget => SnrSpec::Uniform {
                lo_db: self.extra_snr_lo_db,
                hi_db: self.extra_snr_hi_db,
            },
        }
    }

    pub fn to_train_config(
        &self,
        strategy: Strategy,
        seed: u64,
    ) -> Result<TrainConfig, ConfigError> {
        Ok(TrainConfig {
            strategy,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            pair_snr: self.pair_snr(strategy),
            seed,
            stft: self.stft_params()?,
            net: self.net_config()?,
            validation: ValidationMode::CleanSiSdr,
        })
    }
}

/// Experiment-level choices: noise family assignments and the reduced
/// scale used by the two sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// Family of the observation noise inside noisy training material and
    /// of the held-out clips mixed into evaluation inputs.
    pub observation_family: String,
    /// Families pooled as training-time additional/mixing noise. The same
    /// pool is offered to every strategy.
    pub train_pool_families: Vec<String>,
    /// Held-out family for the mismatched test set; excluded from training.
    pub mismatch_family: String,
    /// Noisy-target SNR points swept by `snr-sweep`; `inf` selects the
    /// clean-target path.
    pub snr_sweep_points_db: Vec<SnrDb>,
    /// Additional-noise families swept by `noise-sweep`.
    pub noise_sweep_families: Vec<String>,
    pub sweep_train_count: usize,
    pub sweep_test_count: usize,
    pub sweep_val_count: usize,
    pub sweep_epochs: usize,
    pub sweep_batch_size: usize,
    pub sweep_hidden_sizes: Vec<usize>,
    pub sweep_context_frames: usize,
    pub sweep_duration_s: f64,
    /// Evaluation input SNRs (dB) for sweep arms. Gentler than the main
    /// test SNRs so arm differences reflect training-target quality rather
    /// than evaluation headroom.
    pub sweep_test_snr_db: Vec<f64>,
    /// Observation noise family for sweep arms. Flat noise confined to the
    /// speech band removes the spectral shortcuts that a tilted family
    /// leaves open, so arm differences track training-target quality.
    pub sweep_observation_family: String,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            observation_family: "pink".to_string(),
            train_pool_families: vec![
                "pink".to_string(),
                "babble".to_string(),
                "white".to_string(),
                "band_500_2500".to_string(),
                "band_3000_6000".to_string(),
            ],
            mismatch_family: "band_3000_7500".to_string(),
            snr_sweep_points_db: [-5.0, 0.0, 5.0, 10.0, 15.0, 20.0]
                .iter()
                .map(|&db| SnrDb::new(db).expect("finite"))
                .chain([SnrDb::clean()])
                .collect(),
            noise_sweep_families: vec![
                "pink".to_string(),
                "babble".to_string(),
                "white".to_string(),
                "band_6000_8000".to_string(),
            ],
            sweep_train_count: 60,
            sweep_test_count: 30,
            sweep_val_count: 8,
            sweep_epochs: 25,
            sweep_batch_size: 10,
            sweep_hidden_sizes: vec![32, 32],
            sweep_context_frames: 3,
            sweep_duration_s: 1.5,
            sweep_test_snr_db: vec![0.0, 5.0, 10.0],
            sweep_observation_family: "band_90_4500".to_string(),
        }
    }
}

impl ExperimentSection {
    /// Train settings for a sweep arm: same optimizer and STFT, smaller
    /// network and epoch budget so many arms fit one core.
    pub fn sweep_train_section(&self, base: &TrainSection) -> TrainSection {
        TrainSection {
            epochs: self.sweep_epochs,
            batch_size: self.sweep_batch_size,
            hidden_sizes: self.sweep_hidden_sizes.clone(),
            context_frames: self.sweep_context_frames,
            ..base.clone()
        }
    }

    /// Corpus shape for a sweep arm.
    pub fn sweep_corpus_section(&self, base: &CorpusSection) -> CorpusSection {
        CorpusSection {
            train_count: self.sweep_train_count,
            val_count: self.sweep_val_count,
            test_count: self.sweep_test_count,
            duration_s: self.sweep_duration_s,
            test_snr_db: self.sweep_test_snr_db.clone(),
            ..base.clone()
        }
    }

    pub fn sweep_snr_points(&self) -> Vec<SnrDb> {
        self.snr_sweep_points_db.clone()
    }
}

/// Maps a family label to its synthesis recipe. Band families encode their
/// edges in the label: `band_6000_8000` is white noise restricted to
/// 6 to 8 kHz.
pub fn parse_family(label: &str) -> Result<SynthKind, ConfigError> {
    match label {
        "speech_like" => return Ok(SynthKind::SpeechLike),
        "white" => return Ok(SynthKind::White),
        "pink" => return Ok(SynthKind::Pink),
        "babble" => return Ok(SynthKind::Babble),
        _ => {}
    }
    if let Some(rest) = label.strip_prefix("band_") {
        let parts: Vec<&str> = rest.split('_').collect();
        if parts.len() == 2 {
            if let (Ok(lo), Ok(hi)) = (parts[0].parse::<f64>(), parts[1].parse::<f64>()) {
                return Ok(SynthKind::Band {
                    lo_hz: lo,
                    hi_hz: hi,
                });
            }
        }
    }
    Err(ConfigError::UnknownFamily(label.to_string()))
}

fn require(cond: bool, msg: impl fmt::Display) -> Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError::Invalid(msg.to_string()))
    }
}

fn check_family(label: &str, nyquist: f64) -> Result<(), ConfigError> {
    match parse_family(label)? {
        SynthKind::Band { lo_hz, hi_hz } => require(
            lo_hz >= 0.0 && lo_hz < hi_hz && hi_hz <= nyquist,
            format!("band family {label:?} must satisfy 0 <= lo < hi <= {nyquist}"),
        ),
        _ => Ok(()),
    }
}

impl LabConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let cfg: LabConfig = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source: Box::new(source),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults when no `--config` is given.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self, ConfigError> {
        match path {
            Some(p) => Self::load(p),
            None => {
                let cfg = LabConfig::default();
                cfg.validate()?;
                Ok(cfg)
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.corpus;
        require(c.sample_rate > 0, "corpus.sample_rate must be positive")?;
        require(c.train_count >= 1, "corpus.train_count must be >= 1")?;
        require(c.val_count >= 1, "corpus.val_count must be >= 1")?;
        require(c.test_count >= 1, "corpus.test_count must be >= 1")?;
        require(
            c.duration_s > 0.0 && c.duration_s.is_finite(),
            "corpus.duration_s must be positive",
        )?;
        require(
            c.noise_duration_s >= c.duration_s,
            "corpus.noise_duration_s must be >= corpus.duration_s",
        )?;
        require(
            !c.observation_snr_db.is_empty() && c.observation_snr_db.iter().all(|v| v.is_finite()),
            "corpus.observation_snr_db must be a non-empty list of finite dB values",
        )?;
        require(
            !c.test_snr_db.is_empty() && c.test_snr_db.iter().all(|v| v.is_finite()),
            "corpus.test_snr_db must be a non-empty list of finite dB values",
        )?;
        require(c.pool_clips >= 8, "corpus.pool_clips must be >= 8")?;

        let t = &self.train;
        require(t.epochs >= 1, "train.epochs must be >= 1")?;
        require(t.batch_size >= 1, "train.batch_size must be >= 1")?;
        require(
            t.learning_rate > 0.0 && t.learning_rate.is_finite(),
            "train.learning_rate must be positive",
        )?;
        require(
            !t.supervised_snr_db.is_empty() && t.supervised_snr_db.iter().all(|v| v.is_finite()),
            "train.supervised_snr_db must be a non-empty list of finite dB values",
        )?;
        require(
            t.extra_snr_lo_db.is_finite()
                && t.extra_snr_hi_db.is_finite()
                && t.extra_snr_lo_db <= t.extra_snr_hi_db,
            "train.extra_snr range must be finite with lo <= hi",
        )?;
        require(
            t.train_count_multiplier >= 1,
            "train.train_count_multiplier must be >= 1",
        )?;
        t.stft_params()?;
        t.net_config()?;

        let e = &self.experiment;
        let nyquist = f64::from(c.sample_rate) / 2.0;
        check_family(&e.observation_family, nyquist)?;
        require(
            !e.train_pool_families.is_empty(),
            "experiment.train_pool_families must not be empty",
        )?;
        for f in &e.train_pool_families {
            check_family(f, nyquist)?;
        }
        check_family(&e.mismatch_family, nyquist)?;
        require(
            !e.train_pool_families.contains(&e.mismatch_family),
            "experiment.mismatch_family must be excluded from train_pool_families",
        )?;
        require(
            !e.snr_sweep_points_db.is_empty(),
            "experiment.snr_sweep_points_db must not be empty",
        )?;
        require(
            !e.noise_sweep_families.is_empty(),
            "experiment.noise_sweep_families must not be empty",
        )?;
        for f in &e.noise_sweep_families {
            check_family(f, nyquist)?;
        }
        require(
            e.sweep_train_count >= 1
                && e.sweep_test_count >= 1
                && e.sweep_val_count >= 1
                && e.sweep_epochs >= 1
                && e.sweep_batch_size >= 1,
            "experiment sweep counts and epochs must be >= 1",
        )?;
        require(
            e.sweep_duration_s > 0.0 && e.sweep_duration_s.is_finite(),
            "experiment.sweep_duration_s must be positive",
        )?;
        require(
            !e.sweep_test_snr_db.is_empty() && e.sweep_test_snr_db.iter().all(|v| v.is_finite()),
            "experiment.sweep_test_snr_db must be non-empty finite dB values",
        )?;
        check_family(&e.sweep_observation_family, nyquist)?;
        let sweep_train = self.experiment.sweep_train_section(&self.train);
        sweep_train.net_config()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_yields_defaults() {
        let cfg: LabConfig = toml::from_str("").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg, LabConfig::default());
        assert_eq!(cfg.corpus.train_count, 200);
        assert_eq!(cfg.train.hidden_sizes, vec![64, 64]);
        assert_eq!(cfg.experiment.observation_family, "pink");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = toml::from_str::<LabConfig>("[train]\nepochz = 3\n").unwrap_err();
        assert!(err.to_string().contains("epochz"), "{err}");
        let err = toml::from_str::<LabConfig>("[corpuz]\n").unwrap_err();
        assert!(err.to_string().contains("corpuz"), "{err}");
    }

    #[test]
    fn partial_section_keeps_other_defaults() {
        let cfg: LabConfig = toml::from_str("[train]\nepochs = 3\n").unwrap();
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.train.batch_size, TrainSection::default().batch_size);
        assert_eq!(cfg.corpus, CorpusSection::default());
    }

    #[test]
    fn inf_sweep_point_parses_and_maps_to_clean_sentinel() {
        let cfg: LabConfig =
            toml::from_str("[experiment]\nsnr_sweep_points_db = [0.0, inf]\n").unwrap();
        cfg.validate().unwrap();
        let pts = cfg.experiment.sweep_snr_points();
        assert_eq!(pts.len(), 2);
        assert!(pts[1].is_clean());
    }

    #[test]
    fn family_labels_parse() {
        assert!(matches!(parse_family("pink").unwrap(), SynthKind::Pink));
        assert!(matches!(parse_family("babble").unwrap(), SynthKind::Babble));
        match parse_family("band_6000_8000").unwrap() {
            SynthKind::Band { lo_hz, hi_hz } => {
                assert_eq!(lo_hz, 6000.0);
                assert_eq!(hi_hz, 8000.0);
            }
            other => panic!("unexpected kind {other:?}"),
        }
        assert!(parse_family("brown").is_err());
        assert!(parse_family("band_2000").is_err());
    }

    #[test]
    fn band_above_nyquist_rejected() {
        let toml_text = "[experiment]\nmismatch_family = \"band_2000_9000\"\n";
        let cfg: LabConfig = toml::from_str(toml_text).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("band_2000_9000"), "{err}");
    }

    #[test]
    fn mismatch_family_must_stay_out_of_training_pool() {
        let toml_text = "[experiment]\nmismatch_family = \"white\"\n";
        let cfg: LabConfig = toml::from_str(toml_text).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn invalid_numbers_rejected() {
        for text in [
            "[train]\nepochs = 0\n",
            "[train]\nlearning_rate = 0.0\n",
            "[corpus]\ntrain_count = 0\n",
            "[corpus]\npool_clips = 2\n",
            "[train]\nextra_snr_lo_db = 5.0\nextra_snr_hi_db = -5.0\n",
        ] {
            let cfg: LabConfig = toml::from_str(text).unwrap();
            assert!(cfg.validate().is_err(), "expected rejection for {text:?}");
        }
    }

    #[test]
    fn strategy_snr_specs_follow_strategy() {
        let t = TrainSection::default();
        match t.pair_snr(Strategy::CleanTarget) {
            SnrSpec::Set(v) => assert_eq!(v, vec![-5.0, 0.0, 5.0, 10.0]),
            other => panic!("unexpected spec {other:?}"),
        }
        match t.pair_snr(Strategy::NoisyTarget) {
            SnrSpec::Uniform { lo_db, hi_db } => {
                assert_eq!(lo_db, -5.0);
                assert_eq!(hi_db, 5.0);
            }
            other => panic!("unexpected spec {other:?}"),
        }
    }

    #[test]
    fn config_round_trips_through_json_echo() {
        let cfg = LabConfig::default();
        let echo = serde_json::to_value(&cfg).unwrap();
        let back: LabConfig = serde_json::from_value(echo).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn to_train_config_carries_geometry() {
        let t = TrainSection::default();
        let tc = t.to_train_config(Strategy::NoisyTarget, 7).unwrap();
        assert_eq!(tc.stft.win_len, 512);
        assert_eq!(tc.net.input_bins, 257);
        assert_eq!(tc.net.context_frames, 5);
        assert_eq!(tc.seed, 7);
    }
}
