//! Phonetic-aligned acoustic parameter (PAAP) toolkit.
//!
//! The pipeline turns waveforms into per-frame matrices of 25 acoustic
//! low-level descriptors ([`lld`] or [`estimator`]), maps external phoneme
//! alignments onto the same frames ([`phoneme`]), fits acoustic-phonetic
//! weights by regularized least squares ([`weights`]), scores enhanced
//! speech against clean speech with the phoneme-weighted loss ([`loss`]),
//! and summarizes per-parameter and per-phoneme improvement ([`analysis`]).

pub mod analysis;
pub mod audio;
pub mod dsp;
pub mod error;
pub mod estimator;
pub mod features;
pub mod lld;
pub mod loss;
pub mod phoneme;
pub mod synth;
pub mod weights;

pub use analysis::{
    emit_report, improvement_percent, mae_per_param, per_phoneme_improvement, PaapReport,
    PhonemeImprovement, PhonemeRow, ReportAccumulator, ReportFormat,
};
pub use audio::{mix_at_snr, read_wav, resample, write_wav, SampleFormat, Waveform};
pub use dsp::{dct2, levinson_durbin, mel_filterbank, stft, FrameSpec, LpcSolution, Spectrogram};
pub use error::{PaapError, Result};
pub use estimator::{
    estimate_params, load_weights, lstm_forward, Direction, DspBackend, EstimatorWeights,
    LstmLayer, NeuralBackend, ParamBackend,
};
pub use features::{AcousticParamMatrix, NUM_PARAMS, PARAM_NAMES};
pub use lld::{extract_all, extract_f0, VoicingTrack};
pub use loss::{paap_loss, paap_loss_batch, BatchLoss, PaapLossConfig, WeightMode};
pub use phoneme::{
    argmax_phonemes, parse_alignment, to_frame_logits, AlignmentDoc, PhonemeCategory,
    PhonemeLogits, PhonemeVocab, NUM_PHONEMES,
};
pub use weights::{augment_bias, fit_weights, APWeights};

/// Canonical internal sample rate.
pub const SAMPLE_RATE_HZ: u32 = 16_000;
