//! Training loops for the three strategies.
//!
//! The corpus types make strategy isolation structural: noisy-target
//! training consumes a [`NoisyCorpus`], which has no clean field at all,
//! so clean audio cannot leak into its loop. Validation against clean
//! references lives in a separate [`EvalSet`] used only for model
//! selection, never for gradients; a loss-based proxy mode is available
//! when no clean references exist anywhere.

use rand::seq::SliceRandom;
use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{si_sdr, MetricsError};
use crate::mixer::{make_pair, MixError, PairSources, SnrSpec, Strategy, TrainingPair};
use crate::model::{
    adam_step, AdamState, MaskNet, MaskNetConfig, ModelError, Gradients,
};
use crate::seeds;
use crate::signal::Waveform;
use crate::stft::{StftError, StftParams};

const SALT_INIT: u64 = 2_001;
const SALT_EPOCH: u64 = 2_002;
const SALT_SELECT: u64 = 2_003;
const SALT_NOISE_PICK: u64 = 2_004;
const SALT_PROXY: u64 = 2_005;

/// Items scored by the loss-proxy validation mode.
const PROXY_ITEMS: usize = 8;

#[derive(Error, Debug)]
pub enum TrainerError {
    #[error("{strategy} training requires {required}, but the corpus provides {have}")]
    StrategyDataMismatch {
        strategy: Strategy,
        required: &'static str,
        have: &'static str,
    },
    #[error("corpus has no utterances")]
    EmptyCorpus,
    #[error("noise pool is empty")]
    EmptyPool,
    #[error("batch size must be at least 1")]
    ZeroBatch,
    #[error("validation requires a non-empty evaluation set")]
    EmptyValidation,
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error(transparent)]
    Mix(#[from] MixError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Stft(#[from] StftError),
}

/// A named clip.
#[derive(Debug, Clone)]
pub struct Utterance {
    pub id: String,
    pub wave: Waveform,
}

#[derive(Debug, Clone)]
pub struct NoisePool {
    pub clips: Vec<Utterance>,
}

/// Clean sources plus a noise pool: feeds clean-target and noise-target
/// training.
#[derive(Debug, Clone)]
pub struct SupervisedCorpus {
    pub clean: Vec<Utterance>,
    pub noise: NoisePool,
}

/// Noisy observations plus a noise pool; deliberately has no clean field.
#[derive(Debug, Clone)]
pub struct NoisyCorpus {
    pub noisy: Vec<Utterance>,
    pub noise: NoisePool,
}

#[derive(Debug, Clone)]
pub enum TrainingData {
    Supervised(SupervisedCorpus),
    NoisyOnly(NoisyCorpus),
}

impl TrainingData {
    pub fn len(&self) -> usize {
        match self {
            TrainingData::Supervised(c) => c.clean.len(),
            TrainingData::NoisyOnly(c) => c.noisy.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn kind_label(&self) -> &'static str {
        match self {
            TrainingData::Supervised(_) => "clean sources with a noise pool",
            TrainingData::NoisyOnly(_) => "noisy observations with a noise pool",
        }
    }

    fn pool(&self) -> &NoisePool {
        match self {
            TrainingData::Supervised(c) => &c.noise,
            TrainingData::NoisyOnly(c) => &c.noise,
        }
    }
}

/// Inputs with clean references, for validation and testing only.
#[derive(Debug, Clone)]
pub struct EvalItem {
    pub id: String,
    pub input: Waveform,
    pub clean_ref: Waveform,
}

#[derive(Debug, Clone)]
pub struct EvalSet {
    pub items: Vec<EvalItem>,
}

/// How epoch scores for model selection are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMode {
    /// Mean SI-SDR of enhanced validation inputs against clean refs.
    CleanSiSdr,
    /// Negated training-style loss on a fixed slice of the training
    /// corpus; usable when no clean audio exists at all.
    ProxyLoss,
}

/// Everything a training run needs besides the data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub strategy: Strategy,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub pair_snr: SnrSpec,
    pub seed: u64,
    pub stft: StftParams,
    pub net: MaskNetConfig,
    pub validation: ValidationMode,
}

impl TrainConfig {
    /// Desk-scale defaults with the strategy's usual SNR handling.
    pub fn for_strategy(strategy: Strategy, seed: u64) -> Self {
        let pair_snr = match strategy {
            Strategy::CleanTarget | Strategy::NoiseTarget => SnrSpec::supervised_default(),
            Strategy::NoisyTarget => SnrSpec::noisy_target_default(),
        };
        Self {
            strategy,
            epochs: 60,
            batch_size: 16,
            learning_rate: 1e-4,
            pair_snr,
            seed,
            stft: StftParams::default(),
            net: MaskNetConfig::default(),
            validation: ValidationMode::CleanSiSdr,
        }
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub mean_loss: f64,
    pub val_score: f64,
}

/// Full account of a run. `best_epoch == None` means no epoch beat the
/// untrained starting point, and the initial network was kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub initial_val_score: Option<f64>,
    pub records: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,mean_loss,val_si_sdr,is_best\n");
        for (e, r) in self.records.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e,
                r.mean_loss,
                r.val_score,
                self.best_epoch == Some(e)
            ));
        }
        out
    }
}

/// Builds the pair for one corpus index. All draws (noise picks, SNRs,
/// crops) derive from `item_seed`.
fn pair_for_item(
    strategy: Strategy,
    data: &TrainingData,
    snr_spec: &SnrSpec,
    index: usize,
    item_seed: u64,
) -> Result<TrainingPair, TrainerError> {
    let pool = &data.pool().clips;
    if pool.is_empty() {
        return Err(TrainerError::EmptyPool);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(item_seed, SALT_NOISE_PICK));

    let mismatch = |required: &'static str| TrainerError::StrategyDataMismatch {
        strategy,
        required,
        have: data.kind_label(),
    };

    match (strategy, data) {
        (Strategy::CleanTarget, TrainingData::Supervised(c)) => {
            let clean = &c.clean[index];
            let noise = &pool[rng.random_range(0..pool.len())];
            let mut pair = make_pair(
                strategy,
                PairSources::CleanNoise {
                    clean: &clean.wave,
                    noise: &noise.wave,
                },
                snr_spec,
                item_seed,
            )?;
            pair.meta.source_ids = vec![clean.id.clone(), noise.id.clone()];
            Ok(pair)
        }
        (Strategy::NoiseTarget, TrainingData::Supervised(c)) => {
            let clean = &c.clean[index];
            let noise_input = &pool[rng.random_range(0..pool.len())];
            let noise_target = &pool[rng.random_range(0..pool.len())];
            let mut pair = make_pair(
                strategy,
                PairSources::CleanTwoNoises {
                    clean: &clean.wave,
                    noise_input: &noise_input.wave,
                    noise_target: &noise_target.wave,
                },
                snr_spec,
                item_seed,
            )?;
            pair.meta.source_ids = vec![
                clean.id.clone(),
                noise_input.id.clone(),
                noise_target.id.clone(),
            ];
            Ok(pair)
        }
        (Strategy::NoisyTarget, TrainingData::NoisyOnly(c)) => {
            let noisy = &c.noisy[index];
            let noise = &pool[rng.random_range(0..pool.len())];
            let mut pair = make_pair(
                strategy,
                PairSources::NoisyNoise {
                    noisy: &noisy.wave,
                    noise: &noise.wave,
                },
                snr_spec,
                item_seed,
            )?;
            pair.meta.source_ids = vec![noisy.id.clone(), noise.id.clone()];
            Ok(pair)
        }
        (Strategy::CleanTarget | Strategy::NoiseTarget, _) => {
            Err(mismatch("clean sources with a noise pool"))
        }
        (Strategy::NoisyTarget, _) => Err(mismatch("noisy observations with a noise pool")),
    }
}

/// Pairs for an explicit index sequence; draws are per-position.
pub fn pairs_for_indices(
    strategy: Strategy,
    data: &TrainingData,
    snr_spec: &SnrSpec,
    indices: &[usize],
    seed: u64,
) -> Result<Vec<TrainingPair>, TrainerError> {
    indices
        .iter()
        .enumerate()
        .map(|(p, &i)| pair_for_item(strategy, data, snr_spec, i, seeds::mix(seed, p as u64)))
        .collect()
}

/// A batch of freshly drawn pairs: utterances sampled uniformly with
/// replacement, then noise and SNR drawn per item.
pub fn build_batch(
    strategy: Strategy,
    data: &TrainingData,
    snr_spec: &SnrSpec,
    batch_size: usize,
    seed: u64,
) -> Result<Vec<TrainingPair>, TrainerError> {
    if data.is_empty() {
        return Err(TrainerError::EmptyCorpus);
    }
    if batch_size == 0 {
        return Err(TrainerError::ZeroBatch);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::mix(seed, SALT_SELECT));
    let indices: Vec<usize> = (0..batch_size)
        .map(|_| rng.random_range(0..data.len()))
        .collect();
    pairs_for_indices(strategy, data, snr_spec, &indices, seed)
}

/// One pass over the corpus in shuffled order: per batch, gradients are
/// averaged over the batch and applied in a single optimizer step.
/// Returns the mean per-pair loss.
pub fn train_epoch(
    net: &mut MaskNet,
    adam: &mut AdamState,
    data: &TrainingData,
    config: &TrainConfig,
    epoch: usize,
) -> Result<f64, TrainerError> {
    if data.is_empty() {
        return Err(TrainerError::EmptyCorpus);
    }
    if config.batch_size == 0 {
        return Err(TrainerError::ZeroBatch);
    }

    let epoch_seed = seeds::mix(seeds::mix(config.seed, SALT_EPOCH), epoch as u64);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(epoch_seed));

    let mut total_loss = 0.0;
    for (b, chunk) in order.chunks(config.batch_size).enumerate() {
        let chunk_seed = seeds::mix(epoch_seed, b as u64 + 1);
        let pairs = pairs_for_indices(config.strategy, data, &config.pair_snr, chunk, chunk_seed)?;

        let mut batch_grads = Gradients::zeros_like(net);
        for pair in &pairs {
            let (loss, grads) = net.backward(&pair.input, &pair.target, &config.stft)?;
            if !loss.is_finite() {
                return Err(TrainerError::NonFiniteLoss { epoch, batch: b });
            }
            total_loss += loss;
            batch_grads.accumulate(&grads)?;
        }
        batch_grads.scale(1.0 / pairs.len() as f64);
        adam_step(net, &batch_grads, adam)?;
    }
    Ok(total_loss / data.len() as f64)
}

/// Mean SI-SDR of enhanced inputs against clean references.
pub fn validate(
    net: &MaskNet,
    eval: &EvalSet,
    params: &StftParams,
) -> Result<f64, TrainerError> {
    if eval.items.is_empty() {
        return Err(TrainerError::EmptyValidation);
    }
    let mut total = 0.0;
    for item in &eval.items {
        let est = net.enhance(&item.input, params)?;
        total += si_sdr(&est, &item.clean_ref)?;
    }
    Ok(total / eval.items.len() as f64)
}

/// Negated mean loss on a fixed, seed-determined slice of the training
/// corpus; comparable across epochs because the pairs never change.
fn proxy_score(
    net: &MaskNet,
    data: &TrainingData,
    config: &TrainConfig,
) -> Result<f64, TrainerError> {
    let count = PROXY_ITEMS.min(data.len());
    let indices: Vec<usize> = (0..count).collect();
    let pairs = pairs_for_indices(
        config.strategy,
        data,
        &config.pair_snr,
        &indices,
        seeds::mix(config.seed, SALT_PROXY),
    )?;
    let mut total = 0.0;
    for pair in &pairs {
        total += net.training_loss(&pair.input, &pair.target, &config.stft)?;
    }
    Ok(-total / pairs.len() as f64)
}

fn epoch_score(
    net: &MaskNet,
    data: &TrainingData,
    eval: Option<&EvalSet>,
    config: &TrainConfig,
) -> Result<f64, TrainerError> {
    match config.validation {
        ValidationMode::CleanSiSdr => {
            let eval = eval.ok_or(TrainerError::EmptyValidation)?;
            validate(net, eval, &config.stft)
        }
        ValidationMode::ProxyLoss => proxy_score(net, data, config),
    }
}

/// Full run: seeded init, `epochs` passes, per-epoch scoring, and
/// selection of the best-scoring network (the untrained starting point
/// is a candidate too).
pub fn train(
    config: &TrainConfig,
    data: &TrainingData,
    eval: Option<&EvalSet>,
) -> Result<(MaskNet, TrainHistory), TrainerError> {
    config.stft.validate()?;
    if config.net.input_bins != config.stft.freq_bins() {
        return Err(TrainerError::Model(ModelError::BadConfig(format!(
            "net expects {} input bins but the stft produces {}",
            config.net.input_bins,
            config.stft.freq_bins()
        ))));
    }
    if data.is_empty() {
        return Err(TrainerError::EmptyCorpus);
    }

    let mut net = MaskNet::init(
        config.net.clone(),
        seeds::mix(config.seed, SALT_INIT),
    )?;
    if config.epochs == 0 {
        return Ok((
            net,
            TrainHistory {
                initial_val_score: None,
                records: vec![],
                best_epoch: None,
            },
        ));
    }

    let mut adam = AdamState::new(&net, config.learning_rate);
    let initial = epoch_score(&net, data, eval, config)?;
    let mut best_net = net.clone();
    let mut best_score = initial;
    let mut best_epoch = None;
    let mut records = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mean_loss = train_epoch(&mut net, &mut adam, data, config, epoch)?;
        let val_score = epoch_score(&net, data, eval, config)?;
        records.push(EpochRecord {
            mean_loss,
            val_score,
        });
        if val_score > best_score {
            best_score = val_score;
            best_net = net.clone();
            best_epoch = Some(epoch);
        }
    }

    Ok((
        best_net,
        TrainHistory {
            initial_val_score: Some(initial),
            records,
            best_epoch,
        },
    ))
}
