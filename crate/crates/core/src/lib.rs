//! Desk-scale speech enhancement training laboratory.
//!
//! Provides time-domain signal synthesis, SNR-exact mixing, STFT
//! analysis/synthesis with complex time-frequency masking, a small
//! trainable mask estimator with exact hand-derived gradients, SI-SDR
//! metrics, and training loops for three strategies: clean-target,
//! noise-target, and noisy-target training.

pub mod metrics;
pub mod mixer;
pub mod model;
pub mod seeds;
pub mod signal;
pub mod stft;
pub mod synth;
pub mod trainer;
pub mod wav;
