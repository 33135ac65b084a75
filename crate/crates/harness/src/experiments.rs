//! The three experiments: the strategy comparison (clean-, noise-, and
//! noisy-target training under a shared noise diet), the noisy-target SNR
//! sweep, and the additional-noise-family sweep with the overlap
//! diagnostic.
//!
//! Arms of one experiment share corpora, evaluation sets, network
//! initialization, and batch schedules; only the arm's own variable moves.
//! Differences between arms are then attributable to the variable, not to
//! sampling noise.

use masklab_core::metrics::{score_utterance, ColumnStats, MetricsError, MetricsReport};
use masklab_core::mixer::{MixError, SnrDb, SnrSpec, Strategy};
use masklab_core::model::{MaskNet, ModelError};
use masklab_core::seeds;
use masklab_core::stft::StftParams;
use masklab_core::trainer::{
    train, EvalSet, NoisePool, NoisyCorpus, SupervisedCorpus, TrainHistory, TrainerError,
    TrainingData,
};
use thiserror::Error;

use crate::config::LabConfig;
use crate::corpusgen::{
    build_lab_corpora, build_noisy_observations, noise_pool, training_data_for, CorpusError,
};
use crate::overlap::{noise_overlap_diagnostic, OverlapError, OverlapReport};

/// One training-run seed stream per experiment; arms inside an experiment
/// share it so their draws line up.
const SALT_POC_RUN: u64 = 201;
const SALT_SWEEP_RUN: u64 = 202;
const SALT_SWEEP_OBS_MIX: u64 = 203;
const SALT_NOISE_RUN: u64 = 204;
const SALT_NOISE_POOLS: u64 = 205;

/// Seed for a strategy-comparison training run; exposed so a standalone
/// `train` invocation reproduces the corresponding comparison arm exactly.
pub fn poc_run_seed(master_seed: u64) -> u64 {
    seeds::mix(master_seed, SALT_POC_RUN)
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Trainer(#[from] TrainerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Mix(#[from] MixError),
    #[error(transparent)]
    Overlap(#[from] OverlapError),
}

/// Scores a trained network over an evaluation set.
pub fn evaluate_model(
    net: &MaskNet,
    eval: &EvalSet,
    params: &StftParams,
) -> Result<MetricsReport, ExperimentError> {
    let mut records = Vec::with_capacity(eval.items.len());
    for item in &eval.items {
        let processed = net.enhance(&item.input, params)?;
        records.push(score_utterance(
            item.id.clone(),
            &processed,
            &item.input,
            &item.clean_ref,
            params,
        )?);
    }
    Ok(MetricsReport::from_records(records)?)
}

#[derive(Debug, Clone)]
pub struct MethodOutcome {
    pub strategy: Strategy,
    pub history: TrainHistory,
    pub matched: MetricsReport,
    pub mismatched: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct PocResults {
    pub methods: Vec<MethodOutcome>,
}

impl PocResults {
    pub fn method(&self, strategy: Strategy) -> Option<&MethodOutcome> {
        self.methods.iter().find(|m| m.strategy == strategy)
    }
}

/// Trains each strategy on the shared corpora and scores it on the
/// matched and mismatched test sets. All strategies see the same noise
/// pool, the same evaluation sets, the same initialization seed, and the
/// same batch schedule.
pub fn run_proof_of_concept(
    cfg: &LabConfig,
    master_seed: u64,
) -> Result<PocResults, ExperimentError> {
    let corpora = build_lab_corpora(&cfg.corpus, &cfg.experiment, master_seed)?;
    let run_seed = seeds::mix(master_seed, SALT_POC_RUN);

    let mut methods = Vec::with_capacity(3);
    for strategy in [
        Strategy::CleanTarget,
        Strategy::NoiseTarget,
        Strategy::NoisyTarget,
    ] {
        let data = training_data_for(&corpora, strategy, cfg.train.train_count_multiplier)?;
        let tc = cfg.train.to_train_config(strategy, run_seed)?;
        let (net, history) = train(&tc, &data, Some(&corpora.val))?;
        let matched = evaluate_model(&net, &corpora.test_matched, &tc.stft)?;
        let mismatched = evaluate_model(&net, &corpora.test_mismatched, &tc.stft)?;
        methods.push(MethodOutcome {
            strategy,
            history,
            matched,
            mismatched,
        });
    }
    Ok(PocResults { methods })
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub label: String,
    pub snr: SnrDb,
    pub si_sdri: ColumnStats,
    pub history: TrainHistory,
}

#[derive(Debug, Clone)]
pub struct SnrSweepResults {
    pub points: Vec<SweepPoint>,
}

pub fn snr_point_label(snr: SnrDb) -> String {
    if snr.is_clean() {
        "inf".to_string()
    } else {
        format!("{}", snr.db())
    }
}

/// One sweep arm per noisy-target SNR point. Every arm retrains on noisy
/// observations remixed at its SNR from identical draws (same clips, same
/// crops, only the gain moves); the infinite point trains on clean targets
/// through the clean-target path. Additional noise comes from the
/// observation family's pool for every arm.
pub fn run_snr_sweep(
    cfg: &LabConfig,
    master_seed: u64,
) -> Result<SnrSweepResults, ExperimentError> {
    let sweep_corpus = cfg.experiment.sweep_corpus_section(&cfg.corpus);
    let sweep_train = cfg.experiment.sweep_train_section(&cfg.train);
    let mut sweep_experiment = cfg.experiment.clone();
    // matched-noise setup: the only noise family in play is the sweep
    // observation family
    sweep_experiment.observation_family = cfg.experiment.sweep_observation_family.clone();
    sweep_experiment.train_pool_families = vec![sweep_experiment.observation_family.clone()];

    let corpora = build_lab_corpora(&sweep_corpus, &sweep_experiment, master_seed)?;
    let run_seed = seeds::mix(master_seed, SALT_SWEEP_RUN);
    let obs_mix_stream = seeds::mix(master_seed, SALT_SWEEP_OBS_MIX);

    let mut points = Vec::new();
    for snr in cfg.experiment.sweep_snr_points() {
        let (strategy, data) = if snr.is_clean() {
            (
                Strategy::CleanTarget,
                TrainingData::Supervised(SupervisedCorpus {
                    clean: corpora.train_clean.clone(),
                    noise: corpora.train_pool.clone(),
                }),
            )
        } else {
            let noisy = build_noisy_observations(
                &corpora.train_clean,
                &corpora.obs_pool,
                &[snr.db()],
                obs_mix_stream,
            )?;
            (
                Strategy::NoisyTarget,
                TrainingData::NoisyOnly(NoisyCorpus {
                    noisy,
                    noise: corpora.train_pool.clone(),
                }),
            )
        };

        let mut tc = sweep_train.to_train_config(strategy, run_seed)?;
        // both arms draw pair SNRs from the same additional-noise range
        tc.pair_snr = SnrSpec::Uniform {
            lo_db: sweep_train.extra_snr_lo_db,
            hi_db: sweep_train.extra_snr_hi_db,
        };
        let (net, history) = train(&tc, &data, Some(&corpora.val))?;
        let report = evaluate_model(&net, &corpora.test_matched, &tc.stft)?;
        points.push(SweepPoint {
            label: snr_point_label(snr),
            snr,
            si_sdri: report.aggregates.si_sdri,
            history,
        });
    }
    Ok(SnrSweepResults { points })
}

#[derive(Debug, Clone)]
pub struct NoiseFamilyOutcome {
    pub family: String,
    pub si_sdri: ColumnStats,
    pub overlap_score: f64,
    pub overlap: OverlapReport,
    pub history: TrainHistory,
}

#[derive(Debug, Clone)]
pub struct NoiseSweepResults {
    pub families: Vec<NoiseFamilyOutcome>,
}

/// One noisy-target arm per additional-noise family against a fixed noisy
/// corpus, plus the overlap diagnostic of each family's pool against the
/// observation pool.
pub fn run_noise_sweep(
    cfg: &LabConfig,
    master_seed: u64,
) -> Result<NoiseSweepResults, ExperimentError> {
    let sweep_corpus = cfg.experiment.sweep_corpus_section(&cfg.corpus);
    let mut sweep_experiment = cfg.experiment.clone();
    sweep_experiment.train_pool_families = vec![cfg.experiment.observation_family.clone()];
    let sweep_train = cfg.experiment.sweep_train_section(&cfg.train);

    let corpora = build_lab_corpora(&sweep_corpus, &sweep_experiment, master_seed)?;
    let run_seed = seeds::mix(master_seed, SALT_NOISE_RUN);
    let pools_stream = seeds::mix(master_seed, SALT_NOISE_POOLS);
    let tc_stft = sweep_train.stft_params()?;

    let mut families = Vec::new();
    for family in &cfg.experiment.noise_sweep_families {
        let pool = noise_pool(
            family,
            sweep_corpus.pool_clips,
            sweep_corpus.noise_duration_s,
            sweep_corpus.sample_rate,
            pools_stream,
        )?;
        let overlap = noise_overlap_diagnostic(&pool, &corpora.obs_pool, &tc_stft)?;

        let data = TrainingData::NoisyOnly(NoisyCorpus {
            noisy: corpora.noisy_train.clone(),
            noise: NoisePool { clips: pool },
        });
        let tc = sweep_train.to_train_config(Strategy::NoisyTarget, run_seed)?;
        let (net, history) = train(&tc, &data, Some(&corpora.val))?;
        let report = evaluate_model(&net, &corpora.test_matched, &tc.stft)?;
        families.push(NoiseFamilyOutcome {
            family: family.clone(),
            si_sdri: report.aggregates.si_sdri,
            overlap_score: overlap.score,
            overlap,
            history,
        });
    }
    Ok(NoiseSweepResults { families })
}
