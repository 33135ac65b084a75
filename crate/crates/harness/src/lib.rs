//! Experiment harness: configuration, corpus generation, the training
//! strategy comparison, SNR and noise-family sweeps, the noise overlap
//! diagnostic, and report emission. The `masklab` binary is a thin CLI
//! over these modules.

pub mod config;
pub mod corpusgen;
pub mod experiments;
pub mod overlap;
pub mod report;
