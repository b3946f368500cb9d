//! Evaluation analytics: per-parameter MAE, relative improvement of an
//! enhanced signal over a baseline, and the same split by aligned phoneme.
//!
//! Improvement is reported as `(MAE_B - MAE_E) / MAE_B * 100`, so positive
//! numbers mean the enhanced parameters are closer to clean. Cells with no
//! frames or a zero baseline error are `None`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{PaapError, Result};
use crate::features::{has_extension, write_file, AcousticParamMatrix, NUM_PARAMS, PARAM_NAMES};
use crate::phoneme::{PhonemeCategory, PhonemeVocab};

fn check_shapes(mats: &[&AcousticParamMatrix]) -> Result<usize> {
    let n = mats[0].n_frames();
    if mats.iter().any(|m| m.n_frames() != n) {
        let counts: Vec<usize> = mats.iter().map(|m| m.n_frames()).collect();
        return Err(PaapError::arg(format!("frame counts differ: {counts:?}")));
    }
    Ok(n)
}

/// Column-wise mean absolute error.
pub fn mae_per_param(d_e: &AcousticParamMatrix, d_c: &AcousticParamMatrix) -> Result<[f64; NUM_PARAMS]> {
    let n = check_shapes(&[d_e, d_c])?;
    if n == 0 {
        return Err(PaapError::arg("no frames"));
    }
    let mut sums = [0.0; NUM_PARAMS];
    for (e, c) in d_e.values.iter().zip(&d_c.values) {
        for k in 0..NUM_PARAMS {
            sums[k] += (e[k] - c[k]).abs();
        }
    }
    Ok(sums.map(|s| s / n as f64))
}

/// Mean of the 25 column errors.
pub fn mae_overall(mae: &[f64; NUM_PARAMS]) -> f64 {
    mae.iter().sum::<f64>() / NUM_PARAMS as f64
}

/// `(mae_b - mae_e) / mae_b * 100`; `None` when the baseline error is zero.
pub fn improvement_percent(mae_e: f64, mae_b: f64) -> Option<f64> {
    (mae_b > 0.0).then(|| (mae_b - mae_e) / mae_b * 100.0)
}

/// `(mae_e - mae_b) / mae_b * 100`, the signed relative change in error.
/// Always the negation of [`improvement_percent`].
pub fn relative_error_change_percent(mae_e: f64, mae_b: f64) -> Option<f64> {
    (mae_b > 0.0).then(|| (mae_e - mae_b) / mae_b * 100.0)
}

/// Running sums over any number of utterances; merge order is the add order.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportAccumulator {
    n_classes: usize,
    frames: Vec<usize>,
    abs_err_e: Vec<[f64; NUM_PARAMS]>,
    abs_err_b: Vec<[f64; NUM_PARAMS]>,
    abs_clean: Vec<[f64; NUM_PARAMS]>,
    utterances: usize,
}

impl ReportAccumulator {
    pub fn new(n_classes: usize) -> Self {
        ReportAccumulator {
            n_classes,
            frames: vec![0; n_classes],
            abs_err_e: vec![[0.0; NUM_PARAMS]; n_classes],
            abs_err_b: vec![[0.0; NUM_PARAMS]; n_classes],
            abs_clean: vec![[0.0; NUM_PARAMS]; n_classes],
            utterances: 0,
        }
    }

    pub fn add(
        &mut self,
        d_e: &AcousticParamMatrix,
        d_b: &AcousticParamMatrix,
        d_c: &AcousticParamMatrix,
        phoneme_idx: &[usize],
    ) -> Result<()> {
        let n = check_shapes(&[d_e, d_b, d_c])?;
        if phoneme_idx.len() != n {
            return Err(PaapError::arg(format!(
                "{n} frames but {} phoneme indices",
                phoneme_idx.len()
            )));
        }
        if let Some(i) = phoneme_idx.iter().position(|&j| j >= self.n_classes) {
            return Err(PaapError::arg(format!(
                "frame {i}: phoneme index {} out of range 0..{}",
                phoneme_idx[i], self.n_classes
            )));
        }
        for (i, &j) in phoneme_idx.iter().enumerate() {
            let (e, b, c) = (&d_e.values[i], &d_b.values[i], &d_c.values[i]);
            self.frames[j] += 1;
            for k in 0..NUM_PARAMS {
                self.abs_err_e[j][k] += (e[k] - c[k]).abs();
                self.abs_err_b[j][k] += (b[k] - c[k]).abs();
                self.abs_clean[j][k] += c[k].abs();
            }
        }
        self.utterances += 1;
        Ok(())
    }

    /// Appends another accumulator's sums after this one's.
    pub fn merge(&mut self, other: &ReportAccumulator) -> Result<()> {
        if other.n_classes != self.n_classes {
            return Err(PaapError::arg("accumulators have different vocabulary sizes"));
        }
        for j in 0..self.n_classes {
            self.frames[j] += other.frames[j];
            for k in 0..NUM_PARAMS {
                self.abs_err_e[j][k] += other.abs_err_e[j][k];
                self.abs_err_b[j][k] += other.abs_err_b[j][k];
                self.abs_clean[j][k] += other.abs_clean[j][k];
            }
        }
        self.utterances += other.utterances;
        Ok(())
    }

    pub fn total_frames(&self) -> usize {
        self.frames.iter().sum()
    }

    pub fn finish(&self, vocab: &PhonemeVocab) -> Result<PaapReport> {
        if vocab.len() != self.n_classes {
            return Err(PaapError::arg(format!(
                "vocabulary has {} labels, accumulator {}",
                vocab.len(),
                self.n_classes
            )));
        }
        let total = self.total_frames();
        if total == 0 {
            return Err(PaapError::arg("no frames accumulated"));
        }
        let mut sum_e = [0.0; NUM_PARAMS];
        let mut sum_b = [0.0; NUM_PARAMS];
        for j in 0..self.n_classes {
            for k in 0..NUM_PARAMS {
                sum_e[k] += self.abs_err_e[j][k];
                sum_b[k] += self.abs_err_b[j][k];
            }
        }
        let mae_e = sum_e.map(|s| s / total as f64);
        let mae_b = sum_b.map(|s| s / total as f64);
        let phonemes = (0..self.n_classes)
            .map(|j| {
                let n = self.frames[j];
                let per = |sums: &[f64; NUM_PARAMS]| -> Vec<Option<f64>> {
                    sums.iter().map(|s| (n > 0).then(|| s / n as f64)).collect()
                };
                let me = per(&self.abs_err_e[j]);
                let mb = per(&self.abs_err_b[j]);
                let improvement = me
                    .iter()
                    .zip(&mb)
                    .map(|(e, b)| improvement_percent((*e)?, (*b)?))
                    .collect();
                let category = vocab.category(j);
                PhonemeRow {
                    phoneme: vocab.label(j).to_string(),
                    category,
                    is_silence: j == vocab.sil_index(),
                    frames: n,
                    mae_enhanced: me,
                    mae_baseline: mb,
                    improvement,
                    mean_abs_clean: per(&self.abs_clean[j]),
                }
            })
            .collect();
        Ok(PaapReport {
            params: PARAM_NAMES.iter().map(|s| s.to_string()).collect(),
            n_utterances: self.utterances,
            n_frames: total,
            mae_enhanced: mae_e.to_vec(),
            mae_baseline: mae_b.to_vec(),
            improvement: mae_e.iter().zip(&mae_b).map(|(e, b)| improvement_percent(*e, *b)).collect(),
            overall_mae_enhanced: mae_overall(&mae_e),
            overall_mae_baseline: mae_overall(&mae_b),
            overall_improvement: improvement_percent(mae_overall(&mae_e), mae_overall(&mae_b)),
            phonemes,
            config_digest: None,
        })
    }
}

/// Per-phoneme slice of the report, one entry per parameter in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhonemeRow {
    pub phoneme: String,
    pub category: PhonemeCategory,
    pub is_silence: bool,
    pub frames: usize,
    pub mae_enhanced: Vec<Option<f64>>,
    pub mae_baseline: Vec<Option<f64>>,
    pub improvement: Vec<Option<f64>>,
    /// Mean of `|D_C|` over the phoneme's frames.
    pub mean_abs_clean: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaapReport {
    pub params: Vec<String>,
    pub n_utterances: usize,
    pub n_frames: usize,
    pub mae_enhanced: Vec<f64>,
    pub mae_baseline: Vec<f64>,
    pub improvement: Vec<Option<f64>>,
    pub overall_mae_enhanced: f64,
    pub overall_mae_baseline: f64,
    pub overall_improvement: Option<f64>,
    pub phonemes: Vec<PhonemeRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
}

/// Per-phoneme improvement table for a single utterance.
pub type PhonemeImprovement = Vec<PhonemeRow>;

pub fn per_phoneme_improvement(
    d_e: &AcousticParamMatrix,
    d_b: &AcousticParamMatrix,
    d_c: &AcousticParamMatrix,
    phoneme_idx: &[usize],
    vocab: &PhonemeVocab,
) -> Result<PhonemeImprovement> {
    let mut acc = ReportAccumulator::new(vocab.len());
    acc.add(d_e, d_b, d_c, phoneme_idx)?;
    Ok(acc.finish(vocab)?.phonemes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    /// `.json` is JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        if has_extension(path, "json") {
            ReportFormat::Json
        } else {
            ReportFormat::Csv
        }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

impl PaapReport {
    /// One header line plus one row per phoneme in vocabulary order.
    pub fn to_csv(&self) -> String {
        let mut out = self.digest_line();
        out.push_str("phoneme,category,is_silence,frames");
        for p in &self.params {
            let _ = write!(out, ",{p}_improvement");
        }
        for p in &self.params {
            let _ = write!(out, ",{p}_mean_abs_clean");
        }
        out.push('\n');
        for row in &self.phonemes {
            let _ = write!(
                out,
                "{},{},{},{}",
                row.phoneme,
                row.category.as_str(),
                row.is_silence,
                row.frames
            );
            for v in row.improvement.iter().chain(&row.mean_abs_clean) {
                out.push(',');
                out.push_str(&cell(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| PaapError::format(format!("report JSON: {e}")))
    }

    fn digest_line(&self) -> String {
        self.config_digest
            .as_ref()
            .map(|d| format!("# config_digest={d}\n"))
            .unwrap_or_default()
    }

    /// Bar data: one row per parameter.
    pub fn bar_csv(&self) -> String {
        let mut out = self.digest_line();
        out.push_str("param,mae_enhanced,mae_baseline,improvement\n");
        for (k, p) in self.params.iter().enumerate() {
            let _ = writeln!(
                out,
                "{p},{:?},{:?},{}",
                self.mae_enhanced[k],
                self.mae_baseline[k],
                cell(self.improvement[k])
            );
        }
        out
    }

    /// Scatter data in long format: one row per occupied (phoneme, parameter).
    pub fn scatter_csv(&self) -> String {
        let mut out = self.digest_line();
        out.push_str("phoneme,category,is_silence,param,mean_abs_clean,improvement\n");
        for row in self.phonemes.iter().filter(|r| r.frames > 0) {
            for (k, p) in self.params.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{p},{},{}",
                    row.phoneme,
                    row.category.as_str(),
                    row.is_silence,
                    cell(row.mean_abs_clean[k]),
                    cell(row.improvement[k])
                );
            }
        }
        out
    }

    /// Writes `improvement_by_param.csv` and `improvement_by_phoneme.csv` into `dir`.
    pub fn write_plot_data(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| PaapError::io(dir, e))?;
        write_file(&dir.join("improvement_by_param.csv"), self.bar_csv().as_bytes())?;
        write_file(&dir.join("improvement_by_phoneme.csv"), self.scatter_csv().as_bytes())
    }
}

pub fn emit_report(report: &PaapReport, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => report.to_csv(),
        ReportFormat::Json => report.to_json(),
    };
    write_file(path.as_ref(), text.as_bytes())
}
