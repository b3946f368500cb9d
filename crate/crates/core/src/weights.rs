//! Acoustic-phonetic weights: a linear map from the 25 acoustic parameters
//! (plus bias) to the 41 phoneme scores, fit by regularized least squares on
//! clean speech.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{PaapError, Result};
use crate::features::{write_file, AcousticParamMatrix, NUM_PARAMS, PARAM_NAMES};
use crate::phoneme::{PhonemeLogits, PhonemeVocab, NUM_PHONEMES};

/// Parameter rows plus the bias row.
pub const N_ROWS: usize = NUM_PARAMS + 1;
pub const BIAS_ROW: usize = NUM_PARAMS;
pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-4;
/// Smallest acceptable Cholesky pivot relative to the largest diagonal entry.
const PIVOT_TOLERANCE: f64 = 1e-12;

/// 26 x 41 weight matrix; column `j` weights the parameters for phoneme `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct APWeights {
    pub values: [[f64; NUM_PHONEMES]; N_ROWS],
    pub vocab: PhonemeVocab,
    pub ridge_lambda: f64,
}

#[derive(Serialize, Deserialize)]
struct WeightsFile {
    vocab: Vec<String>,
    params: Vec<String>,
    ridge_lambda: f64,
    w: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_digest: Option<String>,
}

impl APWeights {
    pub fn param_names(&self) -> &'static [&'static str; NUM_PARAMS] {
        &PARAM_NAMES
    }

    /// Weight vector for phoneme `j`, bias last.
    pub fn column(&self, j: usize) -> [f64; N_ROWS] {
        std::array::from_fn(|r| self.values[r][j])
    }

    pub fn to_json(&self, config_digest: Option<&str>) -> String {
        let file = WeightsFile {
            vocab: self.vocab.labels().to_vec(),
            params: PARAM_NAMES.iter().map(|s| s.to_string()).collect(),
            ridge_lambda: self.ridge_lambda,
            w: self.values.iter().map(|r| r.to_vec()).collect(),
            config_digest: config_digest.map(str::to_string),
        };
        serde_json::to_string_pretty(&file).expect("weights serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: WeightsFile =
            serde_json::from_str(text).map_err(|e| PaapError::format(e.to_string()))?;
        if file.params.len() != NUM_PARAMS
            || file.params.iter().zip(PARAM_NAMES).any(|(a, b)| a != b)
        {
            return Err(PaapError::format(
                "weights `params` must list the 25 canonical parameter names in order",
            ));
        }
        if file.w.len() != N_ROWS {
            return Err(PaapError::format(format!(
                "weights `w` has {} rows, expected {N_ROWS}",
                file.w.len()
            )));
        }
        let mut values = [[0.0; NUM_PHONEMES]; N_ROWS];
        for (r, row) in file.w.iter().enumerate() {
            if row.len() != NUM_PHONEMES {
                return Err(PaapError::format(format!(
                    "weights row {r} has {} entries, expected {NUM_PHONEMES}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(PaapError::Validation(format!("weights row {r} is not finite")));
            }
            values[r].copy_from_slice(row);
        }
        if !(file.ridge_lambda >= 0.0 && file.ridge_lambda.is_finite()) {
            return Err(PaapError::Validation("ridge_lambda must be a non-negative number".into()));
        }
        Ok(APWeights {
            values,
            vocab: PhonemeVocab::new(file.vocab)?,
            ridge_lambda: file.ridge_lambda,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>, config_digest: Option<&str>) -> Result<()> {
        let mut text = self.to_json(config_digest);
        text.push('\n');
        write_file(path.as_ref(), text.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PaapError::io(path, e))?;
        APWeights::from_json(&text).map_err(|e| match e {
            PaapError::Format(m) => PaapError::format(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// Appends a constant-one column.
pub fn augment_bias(d: &AcousticParamMatrix) -> Vec<[f64; N_ROWS]> {
    d.values
        .iter()
        .map(|row| {
            let mut out = [1.0; N_ROWS];
            out[..NUM_PARAMS].copy_from_slice(row);
            out
        })
        .collect()
}

type Gram = [[f64; N_ROWS]; N_ROWS];
type Cross = [[f64; NUM_PHONEMES]; N_ROWS];

fn accumulate(gram: &mut Gram, cross: &mut Cross, x: &[[f64; N_ROWS]], y: &[[f64; NUM_PHONEMES]]) {
    for (xr, yr) in x.iter().zip(y) {
        for a in 0..N_ROWS {
            for b in a..N_ROWS {
                gram[a][b] += xr[a] * xr[b];
            }
            for (c, yv) in yr.iter().enumerate() {
                cross[a][c] += xr[a] * yv;
            }
        }
    }
}

/// Lower-triangular Cholesky factor of a symmetric matrix given by its upper triangle.
fn cholesky(gram: &Gram) -> Result<Gram> {
    let max_diag = (0..N_ROWS).map(|i| gram[i][i].abs()).fold(0.0, f64::max);
    let tol = PIVOT_TOLERANCE * max_diag.max(f64::MIN_POSITIVE);
    let mut l = [[0.0; N_ROWS]; N_ROWS];
    for j in 0..N_ROWS {
        let pivot = gram[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        if !(pivot > tol) {
            return Err(PaapError::Singular(format!(
                "normal equations are not positive definite at row {j} ({}); use a ridge lambda > 0",
                if j < NUM_PARAMS { PARAM_NAMES[j] } else { "bias" }
            )));
        }
        let d = pivot.sqrt();
        l[j][j] = d;
        for i in j + 1..N_ROWS {
            let s = gram[j][i] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            l[i][j] = s / d;
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &Gram, cross: &Cross) -> Cross {
    let mut w = [[0.0; NUM_PHONEMES]; N_ROWS];
    for c in 0..NUM_PHONEMES {
        let mut z = [0.0; N_ROWS];
        for i in 0..N_ROWS {
            let s: f64 = (0..i).map(|k| l[i][k] * z[k]).sum();
            z[i] = (cross[i][c] - s) / l[i][i];
        }
        for i in (0..N_ROWS).rev() {
            let s: f64 = (i + 1..N_ROWS).map(|k| l[k][i] * w[k][c]).sum();
            w[i][c] = (z[i] - s) / l[i][i];
        }
    }
    w
}

/// Solves `(XᵀX + λĨ) w = XᵀY` for already-stacked design rows; `Ĩ` skips the bias row.
pub(crate) fn solve_design(
    blocks: &[(Vec<[f64; N_ROWS]>, &[[f64; NUM_PHONEMES]])],
    ridge_lambda: f64,
) -> Result<Cross> {
    let mut gram = [[0.0; N_ROWS]; N_ROWS];
    let mut cross = [[0.0; NUM_PHONEMES]; N_ROWS];
    for (x, y) in blocks {
        accumulate(&mut gram, &mut cross, x, y);
    }
    for (i, row) in gram.iter_mut().enumerate().take(NUM_PARAMS) {
        row[i] += ridge_lambda;
    }
    let l = cholesky(&gram)?;
    Ok(cholesky_solve(&l, &cross))
}

/// Fits the weight matrix on stacked clean-speech utterances.
pub fn fit_weights(
    d_list: &[AcousticParamMatrix],
    p_list: &[PhonemeLogits],
    ridge_lambda: f64,
) -> Result<APWeights> {
    if !(ridge_lambda >= 0.0 && ridge_lambda.is_finite()) {
        return Err(PaapError::arg(format!("ridge lambda must be >= 0, got {ridge_lambda}")));
    }
    if d_list.len() != p_list.len() {
        return Err(PaapError::arg(format!(
            "{} feature matrices but {} logit matrices",
            d_list.len(),
            p_list.len()
        )));
    }
    let Some(first) = p_list.first() else {
        return Err(PaapError::arg("no utterances to fit"));
    };
    for (u, (d, p)) in d_list.iter().zip(p_list).enumerate() {
        if d.n_frames() != p.n_frames() {
            return Err(PaapError::arg(format!(
                "utterance {u}: {} feature frames but {} logit frames",
                d.n_frames(),
                p.n_frames()
            )));
        }
        if p.vocab != first.vocab {
            return Err(PaapError::arg(format!("utterance {u}: vocabulary differs from utterance 0")));
        }
    }
    let total: usize = d_list.iter().map(|d| d.n_frames()).sum();
    if total < N_ROWS + 1 {
        return Err(PaapError::arg(format!(
            "need at least {} frames in total, got {total}",
            N_ROWS + 1
        )));
    }
    let blocks: Vec<_> = d_list
        .iter()
        .zip(p_list)
        .map(|(d, p)| (augment_bias(d), p.values.as_slice()))
        .collect();
    Ok(APWeights {
        values: solve_design(&blocks, ridge_lambda)?,
        vocab: first.vocab.clone(),
        ridge_lambda,
    })
}
