//! Patch-level quantum fidelity kernels for audio anti-spoofing.
//!
//! The pipeline turns each utterance into a standardized log-mel
//! spectrogram, summarizes its most active 4x4 time–frequency patches into
//! four statistics each, embeds pairs of patch summaries into an eight-qubit
//! state with a shallow rotation + controlled-Z circuit, and trains an SVM on
//! the resulting state-fidelity kernel. An RBF kernel on the same features
//! serves as the classical control.
//!
//! Module map:
//! - [`dsp`]: WAV I/O, resampling, STFT, mel filterbank, log standardization
//! - [`patch`]: patch partition, summary statistics, top-k selection
//! - [`quantum`]: statevector simulator, embedding circuit, fidelity kernel
//! - [`kernel`]: kernel specs, Gram matrices, RBF baseline
//! - [`svm`]: SMO solver on precomputed kernels
//! - [`spoof`], [`synth`]: spoof generation, dataset manifest, stand-in audio
//! - [`eval`]: AUROC, EER, kernel-structure statistics, reports
//! - [`pipeline`]: experiment config and the stage functions behind the CLI

pub mod dsp;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod par;
pub mod patch;
pub mod pipeline;
pub mod quantum;
pub mod rng;
pub mod spoof;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};

/// Numerical floor used by the log compression, standardization, patch
/// weights and cosine similarities.
pub const EPSILON: f64 = 1e-8;
