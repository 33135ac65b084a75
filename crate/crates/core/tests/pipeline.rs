//! Cross-module behavior: synthesis through mixing, analysis, training,
//! checkpointing, and scoring, exercised only through the public API.

use masklab_core::metrics::{score_utterance, si_sdr};
use masklab_core::mixer::{
    gain_for_snr, make_pair, measured_snr_db, mix_at_snr, PairSources, SnrDb, SnrSpec, Strategy,
};
use masklab_core::model::{load_checkpoint, save_checkpoint, MaskNetConfig};
use masklab_core::seeds;
use masklab_core::signal::Waveform;
use masklab_core::stft::{apply_mask, istft, stft, Mask, StftParams};
use masklab_core::synth::{synth, SynthKind, SynthSpec};
use masklab_core::trainer::{
    train, EvalItem, EvalSet, NoisePool, SupervisedCorpus, TrainConfig, TrainingData, Utterance,
    ValidationMode,
};
use ndarray::Array2;
use num_complex::Complex64;

const SR: u32 = 16_000;

fn clip(kind: SynthKind, seed: u64, duration_s: f64) -> Waveform {
    synth(
        &SynthSpec {
            kind,
            duration_s,
            seed,
        },
        SR,
    )
    .unwrap()
}

fn small_stft() -> StftParams {
    StftParams {
        win_len: 128,
        hop: 32,
        ..StftParams::default()
    }
}

#[test]
fn mixture_survives_analysis_resynthesis_with_snr_intact() {
    let speech = clip(SynthKind::SpeechLike, 7, 1.0);
    let noise = clip(SynthKind::Pink, 8, 1.0);
    let snr = SnrDb::new(5.0).unwrap();

    let (mixture, scaled) = mix_at_snr(&speech, &noise, snr, 99).unwrap();
    assert!((measured_snr_db(&speech, &scaled).unwrap() - 5.0).abs() < 1e-9);

    // identity mask through the full analysis/resynthesis chain
    let params = small_stft();
    let spec = stft(&mixture, &params).unwrap();
    let ones = Mask {
        values: Array2::<Complex64>::from_elem(spec.bins.dim(), Complex64::new(1.0, 0.0)),
    };
    let back = istft(&apply_mask(&spec, &ones).unwrap()).unwrap();

    let num: f64 = mixture
        .samples()
        .iter()
        .zip(back.samples())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let den: f64 = mixture.samples().iter().map(|v| v * v).sum();
    assert!((num / den).sqrt() < 1e-6, "resynthesis drifted");

    let before = si_sdr(&mixture, &speech).unwrap();
    let after = si_sdr(&back, &speech).unwrap();
    assert!((before - after).abs() < 1e-6);
}

#[test]
fn gain_matches_direct_power_solution() {
    let speech = clip(SynthKind::SpeechLike, 21, 0.5);
    let noise = clip(SynthKind::White, 22, 0.5);
    for target in [-10.0, 0.0, 12.5] {
        let g = gain_for_snr(&speech, &noise, SnrDb::new(target).unwrap()).unwrap();
        let scaled: Vec<f64> = noise.samples().iter().map(|v| v * g).collect();
        let scaled = Waveform::new(scaled, SR).unwrap();
        assert!((measured_snr_db(&speech, &scaled).unwrap() - target).abs() < 1e-9);
    }
}

#[test]
fn pair_synthesis_honors_each_strategy_contract() {
    let clean = clip(SynthKind::SpeechLike, 31, 0.5);
    let noise_a = clip(SynthKind::Pink, 32, 0.5);
    let noise_b = clip(SynthKind::White, 33, 0.5);
    let spec = SnrSpec::Set(vec![5.0]);

    let ctt = make_pair(
        Strategy::CleanTarget,
        PairSources::CleanNoise {
            clean: &clean,
            noise: &noise_a,
        },
        &spec,
        1,
    )
    .unwrap();
    assert_eq!(ctt.target.samples(), clean.samples());
    assert_ne!(ctt.input.samples(), clean.samples());

    let nett = make_pair(
        Strategy::NoiseTarget,
        PairSources::CleanTwoNoises {
            clean: &clean,
            noise_input: &noise_a,
            noise_target: &noise_b,
        },
        &spec,
        2,
    )
    .unwrap();
    assert_ne!(nett.input.samples(), nett.target.samples());

    // the noisy-target residual (input - target) is exactly the added noise
    let observed = ctt.input.clone();
    let nytt = make_pair(
        Strategy::NoisyTarget,
        PairSources::NoisyNoise {
            noisy: &observed,
            noise: &noise_b,
        },
        &spec,
        3,
    )
    .unwrap();
    assert_eq!(nytt.target.samples(), observed.samples());
    let residual: Vec<f64> = nytt
        .input
        .samples()
        .iter()
        .zip(nytt.target.samples())
        .map(|(y, x)| y - x)
        .collect();
    let residual = Waveform::new(residual, SR).unwrap();
    assert!((measured_snr_db(&observed, &residual).unwrap() - 5.0).abs() < 1e-9);
}

#[test]
fn micro_training_learns_and_checkpoint_round_trips() {
    let params = small_stft();
    let clean: Vec<Utterance> = (0..6)
        .map(|i| Utterance {
            id: format!("c{i}"),
            wave: clip(SynthKind::SpeechLike, 100 + i, 0.4),
        })
        .collect();
    let pool = NoisePool {
        clips: (0..4)
            .map(|i| Utterance {
                id: format!("n{i}"),
                wave: clip(SynthKind::Pink, 200 + i, 0.6),
            })
            .collect(),
    };
    let val = EvalSet {
        items: (0..3)
            .map(|i| {
                let s = clip(SynthKind::SpeechLike, 300 + i, 0.4);
                let n = clip(SynthKind::Pink, 400 + i, 0.4);
                let (input, _) = mix_at_snr(&s, &n, SnrDb::new(5.0).unwrap(), 500 + i).unwrap();
                EvalItem {
                    id: format!("v{i}"),
                    input,
                    clean_ref: s,
                }
            })
            .collect(),
    };

    let config = TrainConfig {
        strategy: Strategy::CleanTarget,
        epochs: 12,
        batch_size: 3,
        learning_rate: 1e-3,
        pair_snr: SnrSpec::Set(vec![5.0]),
        seed: seeds::mix(9, 1),
        stft: params,
        net: MaskNetConfig {
            input_bins: params.freq_bins(),
            context_frames: 3,
            hidden_sizes: vec![24],
            ..MaskNetConfig::default()
        },
        validation: ValidationMode::CleanSiSdr,
    };
    let data = TrainingData::Supervised(SupervisedCorpus {
        clean: clean.clone(),
        noise: pool,
    });

    let (net, history) = train(&config, &data, Some(&val)).unwrap();
    assert_eq!(history.records.len(), 12);
    let initial = history.initial_val_score.unwrap();
    let best = history
        .best_epoch
        .map(|e| history.records[e].val_score)
        .unwrap_or(initial);
    assert!(
        best > initial,
        "training never beat the starting point: best {best:.3} vs initial {initial:.3}"
    );

    // the selected model actually improves a fresh mixture
    let s = clip(SynthKind::SpeechLike, 900, 0.4);
    let n = clip(SynthKind::Pink, 901, 0.4);
    let (input, _) = mix_at_snr(&s, &n, SnrDb::new(5.0).unwrap(), 902).unwrap();
    let enhanced = net.enhance(&input, &params).unwrap();
    let record = score_utterance("fresh", &enhanced, &input, &s, &params).unwrap();
    assert!(
        record.si_sdri > 0.0,
        "no improvement on held-out mixture: {:.3}",
        record.si_sdri
    );

    // checkpoint round trip reproduces the enhancement exactly
    let dir = std::env::temp_dir().join(format!("masklab-ckpt-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("checkpoint.json");
    save_checkpoint(&path, &net, None).unwrap();
    let (restored, _) = load_checkpoint(&path).unwrap();
    let again = restored.enhance(&input, &params).unwrap();
    assert_eq!(enhanced.samples(), again.samples());
    std::fs::remove_dir_all(&dir).ok();
}
