//! Run configuration: defaults, an optional TOML/JSON file, then flags.

use std::path::{Path, PathBuf};

use paap_core::loss::{PaapLossConfig, WeightMode};
use paap_core::weights::DEFAULT_RIDGE_LAMBDA;
use paap_core::{FrameSpec, PhonemeVocab};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Environment variable naming a config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "PAAP_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Dsp,
    Neural,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameSection {
    hop: Option<usize>,
    win: Option<usize>,
    fft_size: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    frame: FrameSection,
    backend: Option<Backend>,
    estimator_weights: Option<PathBuf>,
    vocab: Option<PathBuf>,
    ridge_lambda: Option<f64>,
    weight_mode: Option<WeightMode>,
    aux_scale: Option<f64>,
    jobs: Option<usize>,
}

/// Flag values that may override the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub hop: Option<usize>,
    pub win: Option<usize>,
    pub fft_size: Option<usize>,
    pub backend: Option<Backend>,
    pub estimator_weights: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub ridge_lambda: Option<f64>,
    pub weight_mode: Option<WeightMode>,
    pub aux_scale: Option<f64>,
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub frame: FrameSpec,
    pub backend: Backend,
    pub estimator_weights: Option<PathBuf>,
    pub vocab: PhonemeVocab,
    pub ridge_lambda: f64,
    pub loss: PaapLossConfig,
    pub jobs: usize,
    digest: String,
}

#[derive(Serialize)]
struct DigestInput<'a> {
    frame: FrameSpec,
    backend: Backend,
    estimator_weights_sha256: Option<String>,
    vocab: &'a [String],
    ridge_lambda: f64,
    weight_mode: WeightMode,
    aux_scale: f64,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn read_config_file(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let parsed = if is_json {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

impl RunConfig {
    pub fn resolve(config_path: Option<&Path>, o: Overrides) -> Result<Self, CliError> {
        let file = match config_path {
            Some(p) => read_config_file(p)?,
            None => ConfigFile::default(),
        };
        let d = FrameSpec::default();
        let frame = FrameSpec::new(
            o.hop.or(file.frame.hop).unwrap_or(d.hop),
            o.win.or(file.frame.win).unwrap_or(d.win),
            o.fft_size.or(file.frame.fft_size).unwrap_or(d.fft_size),
        )
        .map_err(|e| CliError::Usage(e.to_string()))?;
        let backend = o.backend.or(file.backend).unwrap_or_default();
        let estimator_weights = o.estimator_weights.or(file.estimator_weights);
        if backend == Backend::Neural && estimator_weights.is_none() {
            return Err(CliError::Usage("the neural backend needs estimator weights".into()));
        }
        let vocab = match o.vocab.or(file.vocab) {
            Some(p) => PhonemeVocab::load(&p)?,
            None => PhonemeVocab::default(),
        };
        let ridge_lambda = o.ridge_lambda.or(file.ridge_lambda).unwrap_or(DEFAULT_RIDGE_LAMBDA);
        if !(ridge_lambda >= 0.0 && ridge_lambda.is_finite()) {
            return Err(CliError::Usage(format!("ridge lambda must be >= 0, got {ridge_lambda}")));
        }
        let loss = PaapLossConfig {
            weight_mode: o.weight_mode.or(file.weight_mode).unwrap_or_default(),
            aux_scale: o.aux_scale.or(file.aux_scale).unwrap_or(PaapLossConfig::default().aux_scale),
        };
        loss.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let jobs = match o.jobs.or(file.jobs) {
            Some(0) => return Err(CliError::Usage("jobs must be at least 1".into())),
            Some(n) => n,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };

        let estimator_hash = match (&backend, &estimator_weights) {
            (Backend::Neural, Some(p)) => {
                let bytes = std::fs::read(p).map_err(|e| {
                    CliError::Domain(paap_core::PaapError::Io { path: p.clone(), source: e })
                })?;
                Some(sha256_hex(&bytes))
            }
            _ => None,
        };
        let input = DigestInput {
            frame,
            backend,
            estimator_weights_sha256: estimator_hash,
            vocab: vocab.labels(),
            ridge_lambda,
            weight_mode: loss.weight_mode,
            aux_scale: loss.aux_scale,
        };
        let canonical = serde_json::to_string(&input).expect("digest input serializes");
        let digest = format!("sha256:{}", sha256_hex(canonical.as_bytes()));
        Ok(RunConfig { frame, backend, estimator_weights, vocab, ridge_lambda, loss, jobs, digest })
    }

    /// Hash of every setting that can change results; paths and `jobs` are excluded.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn digest_comment(&self) -> String {
        format!("config_digest={}", self.digest)
    }
}
