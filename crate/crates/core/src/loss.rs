//! Phoneme-weighted squared error between enhanced and clean parameter tracks.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{PaapError, Result};
use crate::features::{AcousticParamMatrix, NUM_PARAMS};
use crate::weights::APWeights;

pub const DEFAULT_AUX_SCALE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// Weights used as fitted, so negative weights reward larger errors.
    #[default]
    Literal,
    /// Weights replaced by their magnitudes; the loss is never negative.
    Absolute,
}

impl WeightMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            WeightMode::Literal => "literal",
            WeightMode::Absolute => "absolute",
        }
    }
}

impl FromStr for WeightMode {
    type Err = PaapError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(WeightMode::Literal),
            "absolute" => Ok(WeightMode::Absolute),
            other => Err(PaapError::arg(format!(
                "unknown weight mode {other:?} (expected literal or absolute)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PaapLossConfig {
    pub weight_mode: WeightMode,
    pub aux_scale: f64,
}

impl Default for PaapLossConfig {
    fn default() -> Self {
        PaapLossConfig { weight_mode: WeightMode::Literal, aux_scale: DEFAULT_AUX_SCALE }
    }
}

impl PaapLossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.aux_scale >= 0.0 && self.aux_scale.is_finite()) {
            return Err(PaapError::arg(format!("aux_scale must be >= 0, got {}", self.aux_scale)));
        }
        Ok(())
    }

    /// `original_loss + aux_scale * paap`.
    pub fn combined(&self, original_loss: f64, paap: f64) -> f64 {
        original_loss + self.aux_scale * paap
    }
}

/// Sum over frames (not yet divided by N).
fn loss_sum(
    d_e: &AcousticParamMatrix,
    d_c: &AcousticParamMatrix,
    phoneme_idx: &[usize],
    w: &APWeights,
    cfg: &PaapLossConfig,
) -> Result<f64> {
    let n = d_e.n_frames();
    if d_c.n_frames() != n || phoneme_idx.len() != n {
        return Err(PaapError::arg(format!(
            "frame counts differ: enhanced {n}, clean {}, phonemes {}",
            d_c.n_frames(),
            phoneme_idx.len()
        )));
    }
    if n == 0 {
        return Err(PaapError::arg("no frames"));
    }
    let n_classes = w.values[0].len();
    let mut total = 0.0;
    for (i, ((e, c), &j)) in d_e.values.iter().zip(&d_c.values).zip(phoneme_idx).enumerate() {
        if j >= n_classes {
            return Err(PaapError::arg(format!(
                "frame {i}: phoneme index {j} out of range 0..{n_classes}"
            )));
        }
        // the bias column of the augmented difference is always 0, so it is skipped
        let mut frame = 0.0;
        for k in 0..NUM_PARAMS {
            let diff = e[k] - c[k];
            let wk = match cfg.weight_mode {
                WeightMode::Literal => w.values[k][j],
                WeightMode::Absolute => w.values[k][j].abs(),
            };
            frame += diff * diff * wk;
        }
        total += frame;
    }
    Ok(total)
}

/// Mean over frames of the squared parameter difference dotted with the
/// weight column of the frame's phoneme.
pub fn paap_loss(
    d_e: &AcousticParamMatrix,
    d_c: &AcousticParamMatrix,
    phoneme_idx: &[usize],
    w: &APWeights,
    cfg: &PaapLossConfig,
) -> Result<f64> {
    cfg.validate()?;
    Ok(loss_sum(d_e, d_c, phoneme_idx, w, cfg)? / d_e.n_frames() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchLoss {
    pub per_utterance: Vec<f64>,
    pub frames: Vec<usize>,
    /// Frame-weighted mean, equal to the loss over all frames concatenated.
    pub corpus_mean: f64,
}

pub fn paap_loss_batch(
    pairs: &[(&AcousticParamMatrix, &AcousticParamMatrix, &[usize])],
    w: &APWeights,
    cfg: &PaapLossConfig,
) -> Result<BatchLoss> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(PaapError::arg("no utterances"));
    }
    let sums = pairs
        .iter()
        .enumerate()
        .map(|(u, (e, c, idx))| {
            loss_sum(e, c, idx, w, cfg).map_err(|err| match err {
                PaapError::Argument(m) => PaapError::arg(format!("utterance {u}: {m}")),
                other => other,
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let frames: Vec<usize> = pairs.iter().map(|(e, _, _)| e.n_frames()).collect();
    Ok(batch_from_sums(&sums, &frames))
}

/// Combines per-utterance frame sums in order.
pub fn batch_from_sums(sums: &[f64], frames: &[usize]) -> BatchLoss {
    let total_frames: usize = frames.iter().sum();
    BatchLoss {
        per_utterance: sums.iter().zip(frames).map(|(s, &n)| s / n as f64).collect(),
        frames: frames.to_vec(),
        corpus_mean: sums.iter().sum::<f64>() / total_frames as f64,
    }
}
