//! Resolving input paths into parameter matrices and phoneme indices.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use paap_core::{
    argmax_phonemes, load_weights, read_wav, resample, AcousticParamMatrix, DspBackend, NeuralBackend,
    PaapError, ParamBackend, PhonemeLogits, PhonemeVocab, SAMPLE_RATE_HZ,
};
use rayon::prelude::*;

use crate::config::{Backend, RunConfig};
use crate::error::CliError;

const FEATURE_EXTS: [&str; 3] = ["wav", "csv", "bin"];
const ALIGNMENT_EXTS: [&str; 2] = ["json", "bin"];

fn ext_of(path: &Path) -> Option<String> {
    path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase())
}

pub fn is_wav(path: &Path) -> bool {
    ext_of(path).as_deref() == Some("wav")
}

pub fn make_backend(cfg: &RunConfig) -> Result<Box<dyn ParamBackend>, CliError> {
    Ok(match cfg.backend {
        Backend::Dsp => Box::new(DspBackend { spec: cfg.frame }),
        Backend::Neural => {
            let path = cfg.estimator_weights.as_ref().expect("checked when the config was resolved");
            Box::new(NeuralBackend::new(load_weights(path)?, cfg.frame)?)
        }
    })
}

/// Reads a waveform at the internal rate.
pub fn load_audio(path: &Path) -> paap_core::Result<paap_core::Waveform> {
    resample(&read_wav(path)?, SAMPLE_RATE_HZ)
}

/// WAV inputs go through the backend; CSV and binary files are read as is.
pub fn load_features(path: &Path, cfg: &RunConfig, backend: &dyn ParamBackend) -> paap_core::Result<AcousticParamMatrix> {
    if is_wav(path) {
        backend.estimate(&load_audio(path)?)
    } else {
        AcousticParamMatrix::load(path, cfg.frame)
    }
}

/// Phoneme index per frame from an alignment JSON or a logits binary,
/// checked against the vocabulary the indices will be used with.
pub fn load_phonemes(
    path: &Path,
    cfg: &RunConfig,
    vocab: &PhonemeVocab,
    n_frames: usize,
) -> paap_core::Result<Vec<usize>> {
    let logits = PhonemeLogits::load(path, &cfg.vocab, cfg.frame, n_frames, SAMPLE_RATE_HZ)?;
    if &logits.vocab != vocab {
        return Err(PaapError::Argument(format!(
            "{}: alignment vocabulary differs from the one in use",
            path.display()
        )));
    }
    if logits.n_frames() != n_frames {
        return Err(PaapError::Argument(format!(
            "{}: {} logit frames but the features have {n_frames}",
            path.display(),
            logits.n_frames()
        )));
    }
    Ok(argmax_phonemes(&logits))
}

/// Files in `dir` with one of `exts`, keyed by stem.
pub fn index_dir(dir: &Path, exts: &[&str]) -> Result<BTreeMap<String, PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| PaapError::Io { path: dir.to_path_buf(), source: e })?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| PaapError::Io { path: dir.to_path_buf(), source: e })?.path();
        let Some(ext) = ext_of(&path) else { continue };
        if !path.is_file() || !exts.contains(&ext.as_str()) {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        if let Some(prev) = out.insert(stem.clone(), path.clone()) {
            return Err(PaapError::Argument(format!(
                "two inputs share the stem {stem:?}: {} and {}",
                prev.display(),
                path.display()
            ))
            .into());
        }
    }
    if out.is_empty() {
        return Err(PaapError::Argument(format!("{} has no .{} inputs", dir.display(), exts.join("/."))).into());
    }
    Ok(out)
}

/// Pairs up same-stem files across several directories, or takes single files as one utterance.
/// Every directory must hold exactly the same stems.
pub fn match_inputs(roots: &[(&str, &Path, bool)]) -> Result<Vec<(String, Vec<PathBuf>)>, CliError> {
    let all_files = roots.iter().all(|(_, p, _)| p.is_file());
    if all_files {
        let stem = roots[0].1.file_stem().and_then(|s| s.to_str()).unwrap_or("utterance").to_string();
        return Ok(vec![(stem, roots.iter().map(|(_, p, _)| p.to_path_buf()).collect())]);
    }
    if let Some((name, p, _)) = roots.iter().find(|(_, p, _)| !p.is_dir()) {
        return Err(CliError::Usage(format!(
            "--{name} {} must be a directory when other inputs are directories",
            p.display()
        )));
    }
    let indexes = roots
        .iter()
        .map(|(_, p, alignment)| index_dir(p, if *alignment { &ALIGNMENT_EXTS } else { &FEATURE_EXTS }))
        .collect::<Result<Vec<_>, _>>()?;
    let (first_name, _, _) = roots[0];
    for ((name, _, _), idx) in roots.iter().zip(&indexes).skip(1) {
        if let Some(stem) = indexes[0].keys().find(|k| !idx.contains_key(*k)) {
            return Err(PaapError::Argument(format!("{stem:?} is in --{first_name} but not in --{name}")).into());
        }
        if let Some(stem) = idx.keys().find(|k| !indexes[0].contains_key(*k)) {
            return Err(PaapError::Argument(format!("{stem:?} is in --{name} but not in --{first_name}")).into());
        }
    }
    Ok(indexes[0]
        .keys()
        .map(|stem| (stem.clone(), indexes.iter().map(|idx| idx[stem].clone()).collect()))
        .collect())
}

/// Maps `f` over `items` on a pool of `jobs` threads; results keep input order.
pub fn par_map<T: Sync, R: Send>(
    jobs: usize,
    items: &[T],
    f: impl Fn(&T) -> paap_core::Result<R> + Sync + Send,
) -> Result<Vec<R>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(f).collect::<paap_core::Result<Vec<R>>>())?)
}

/// Prefixes an error message with the utterance it came from.
pub fn in_utterance(stem: &str, e: PaapError) -> PaapError {
    match e {
        PaapError::Argument(m) => PaapError::Argument(format!("utterance {stem:?}: {m}")),
        PaapError::Format(m) => PaapError::Format(format!("utterance {stem:?}: {m}")),
        PaapError::Validation(m) => PaapError::Validation(format!("utterance {stem:?}: {m}")),
        PaapError::DegenerateSignal(m) => PaapError::DegenerateSignal(format!("utterance {stem:?}: {m}")),
        other => other,
    }
}
