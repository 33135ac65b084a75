//! `masklab`: speech-enhancement training laboratory.
//!
//! Subcommands cover corpus synthesis, single training runs, checkpoint
//! evaluation, the three-strategy comparison, the noisy-target SNR sweep,
//! the additional-noise family sweep, and the pool overlap diagnostic.
//! Every run is a pure function of (config, seed); artifacts land under
//! `--out`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use masklab_core::mixer::Strategy;
use masklab_core::model::{load_checkpoint, save_checkpoint};
use masklab_harness::config::LabConfig;
use masklab_harness::corpusgen::{
    build_lab_corpora, load_corpus, noise_pool, synth_corpus, training_data_for, LabCorpora,
};
use masklab_harness::experiments::{
    evaluate_model, poc_run_seed, run_noise_sweep, run_proof_of_concept, run_snr_sweep,
};
use masklab_harness::overlap::noise_overlap_diagnostic;
use masklab_harness::report;

const SALT_OVERLAP_A: u64 = 301;
const SALT_OVERLAP_B: u64 = 302;

#[derive(Parser)]
#[command(
    name = "masklab",
    version,
    about = "Mask-based speech enhancement lab: train with clean, noise, or noisy targets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file; built-in defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; every artifact is a pure function of config + seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for artifacts.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Render the synthetic corpus to WAV files plus a manifest.
    SynthCorpus {
        #[command(flatten)]
        common: Common,
    },
    /// Train one strategy and save the best checkpoint.
    Train {
        #[command(flatten)]
        common: Common,
        /// clean_target | noise_target | noisy_target
        #[arg(long)]
        strategy: String,
        /// Corpus manifest to train from; omitted = synthesize in memory.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Overrides [train].train_count_multiplier (noisy-corpus size).
        #[arg(long)]
        train_count_multiplier: Option<usize>,
    },
    /// Score a saved checkpoint on the matched test set.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Corpus manifest to evaluate on; omitted = synthesize in memory.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Value for the metrics table's method column.
        #[arg(long, default_value = "model")]
        method: String,
    },
    /// Compare the three training strategies on matched and mismatched
    /// test sets.
    Poc {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep the noisy-target SNR, retraining per point.
    SnrSweep {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep the additional-noise family, retraining per family.
    NoiseSweep {
        #[command(flatten)]
        common: Common,
    },
    /// Overlap diagnostic between two noise family pools.
    Overlap {
        #[command(flatten)]
        common: Common,
        /// Family label, e.g. pink or band_6000_8000.
        #[arg(long)]
        pool_a: String,
        #[arg(long)]
        pool_b: String,
    },
}

fn load_config(common: &Common) -> Result<LabConfig> {
    LabConfig::load_or_default(common.config.as_deref()).context("loading configuration")
}

fn corpora_from(
    cfg: &LabConfig,
    manifest: Option<&Path>,
    master_seed: u64,
) -> Result<LabCorpora> {
    match manifest {
        Some(path) => {
            let loaded = load_corpus(path)
                .with_context(|| format!("loading corpus manifest {}", path.display()))?;
            Ok(loaded.assemble(&cfg.corpus, &cfg.experiment, master_seed)?)
        }
        None => Ok(build_lab_corpora(&cfg.corpus, &cfg.experiment, master_seed)?),
    }
}

fn announce(written: &[PathBuf]) {
    for p in written {
        println!("wrote {}", p.display());
    }
}

fn cmd_synth_corpus(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let manifest = synth_corpus(&cfg.corpus, &cfg.experiment, common.seed, &common.out)?;
    println!(
        "wrote {} ({} entries)",
        common.out.join("manifest.json").display(),
        manifest.entries.len()
    );
    Ok(())
}

fn cmd_train(
    common: &Common,
    strategy: &str,
    corpus: Option<&Path>,
    multiplier: Option<usize>,
) -> Result<()> {
    let cfg = load_config(common)?;
    let strategy: Strategy = strategy
        .parse()
        .map_err(|e: String| anyhow::anyhow!(e))
        .context("parsing --strategy")?;
    let corpora = corpora_from(&cfg, corpus, common.seed)?;
    if corpora.val.items.is_empty() {
        bail!("corpus provides no validation set; training selects by validation score");
    }
    let mult = multiplier.unwrap_or(cfg.train.train_count_multiplier);
    let data = training_data_for(&corpora, strategy, mult)?;
    let tc = cfg.train.to_train_config(strategy, poc_run_seed(common.seed))?;

    let (net, history) = masklab_core::trainer::train(&tc, &data, Some(&corpora.val))?;

    std::fs::create_dir_all(&common.out)
        .with_context(|| format!("creating {}", common.out.display()))?;
    let ckpt = common.out.join("checkpoint.json");
    save_checkpoint(&ckpt, &net, None)?;
    println!("wrote {}", ckpt.display());
    let written = report::write_train_report(&common.out, &cfg, common.seed, strategy, &history)?;
    announce(&written);

    match history.best_epoch {
        Some(e) => println!(
            "best epoch {} of {}, validation score {:.3}",
            e,
            history.records.len(),
            history.records[e].val_score
        ),
        None => println!("no epoch beat the initial network; kept the initial parameters"),
    }
    Ok(())
}

fn cmd_evaluate(
    common: &Common,
    checkpoint: &Path,
    corpus: Option<&Path>,
    method: &str,
) -> Result<()> {
    let cfg = load_config(common)?;
    let (net, _) = load_checkpoint(checkpoint)
        .with_context(|| format!("loading checkpoint {}", checkpoint.display()))?;
    let stft = cfg.train.stft_params()?;
    if net.config().input_bins != stft.freq_bins() {
        bail!(
            "checkpoint expects {} frequency bins but the configured stft produces {}",
            net.config().input_bins,
            stft.freq_bins()
        );
    }
    let corpora = corpora_from(&cfg, corpus, common.seed)?;
    if corpora.test_matched.items.is_empty() {
        bail!("corpus provides no test set");
    }
    let metrics = evaluate_model(&net, &corpora.test_matched, &stft)?;
    let written = report::write_eval_report(&common.out, &cfg, common.seed, method, &metrics)?;
    announce(&written);
    println!(
        "mean si_sdr_in {:.3} dB, mean si_sdr_out {:.3} dB, mean si_sdri {:.3} dB",
        metrics.aggregates.si_sdr_in.mean,
        metrics.aggregates.si_sdr_out.mean,
        metrics.aggregates.si_sdri.mean
    );
    Ok(())
}

fn cmd_poc(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let results = run_proof_of_concept(&cfg, common.seed)?;
    let written = report::write_poc_report(&common.out, &cfg, common.seed, &results)?;
    announce(&written);
    for m in &results.methods {
        println!(
            "{}: matched si_sdri {:.3} dB (median {:.3}, var {:.3}), mismatched si_sdri {:.3} dB",
            m.strategy.label(),
            m.matched.aggregates.si_sdri.mean,
            m.matched.aggregates.si_sdri.median,
            m.matched.aggregates.si_sdri.variance,
            m.mismatched.aggregates.si_sdri.mean,
        );
    }
    Ok(())
}

fn cmd_snr_sweep(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let results = run_snr_sweep(&cfg, common.seed)?;
    let written = report::write_snr_sweep_report(&common.out, &cfg, common.seed, &results)?;
    announce(&written);
    for p in &results.points {
        println!("snr {}: mean si_sdri {:.3} dB", p.label, p.si_sdri.mean);
    }
    Ok(())
}

fn cmd_noise_sweep(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let results = run_noise_sweep(&cfg, common.seed)?;
    let written = report::write_noise_sweep_report(&common.out, &cfg, common.seed, &results)?;
    announce(&written);
    for f in &results.families {
        println!(
            "{}: mean si_sdri {:.3} dB, overlap {:.3e}",
            f.family, f.si_sdri.mean, f.overlap_score
        );
    }
    Ok(())
}

fn cmd_overlap(common: &Common, pool_a: &str, pool_b: &str) -> Result<()> {
    let cfg = load_config(common)?;
    let c = &cfg.corpus;
    let a = noise_pool(
        pool_a,
        c.pool_clips,
        c.noise_duration_s,
        c.sample_rate,
        masklab_core::seeds::mix(common.seed, SALT_OVERLAP_A),
    )?;
    let b = noise_pool(
        pool_b,
        c.pool_clips,
        c.noise_duration_s,
        c.sample_rate,
        masklab_core::seeds::mix(common.seed, SALT_OVERLAP_B),
    )?;
    let stft = cfg.train.stft_params()?;
    let result = noise_overlap_diagnostic(&a, &b, &stft)?;
    let written =
        report::write_overlap_report(&common.out, &cfg, common.seed, pool_a, pool_b, &result)?;
    announce(&written);
    println!("overlap({pool_a}, {pool_b}) = {:.3e}", result.score);
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::SynthCorpus { common } => cmd_synth_corpus(common),
        Command::Train {
            common,
            strategy,
            corpus,
            train_count_multiplier,
        } => cmd_train(common, strategy, corpus.as_deref(), *train_count_multiplier),
        Command::Evaluate {
            common,
            checkpoint,
            corpus,
            method,
        } => cmd_evaluate(common, checkpoint, corpus.as_deref(), method),
        Command::Poc { common } => cmd_poc(common),
        Command::SnrSweep { common } => cmd_snr_sweep(common),
        Command::NoiseSweep { common } => cmd_noise_sweep(common),
        Command::Overlap {
            common,
            pool_a,
            pool_b,
        } => cmd_overlap(common, pool_a, pool_b),
    }
}
