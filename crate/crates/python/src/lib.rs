//! Python bindings: waveforms, descriptor extraction, weight fitting, loss and analysis.
//!
//! Matrices cross the boundary as lists of rows.

use std::path::PathBuf;

use paap_core::loss::WeightMode;
use paap_core as core;
use paap_core::{PaapError, NUM_PARAMS, NUM_PHONEMES};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: PaapError) -> PyErr {
    match e {
        PaapError::Io { .. } => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn spec(hop: usize, win: usize, fft_size: usize) -> PyResult<core::FrameSpec> {
    core::FrameSpec::new(hop, win, fft_size).map_err(py_err)
}

fn rows<const N: usize>(values: Vec<Vec<f64>>, what: &str) -> PyResult<Vec<[f64; N]>> {
    values
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            <[f64; N]>::try_from(r.as_slice())
                .map_err(|_| PyValueError::new_err(format!("{what} row {i} has {} values, expected {N}", r.len())))
        })
        .collect()
}

#[pyclass(module = "paap_py", frozen, from_py_object)]
#[derive(Clone)]
struct Waveform {
    inner: core::Waveform,
}

#[pymethods]
impl Waveform {
    #[new]
    fn new(samples: Vec<f64>, sample_rate: u32) -> PyResult<Self> {
        Ok(Waveform { inner: core::Waveform::new(samples, sample_rate).map_err(py_err)? })
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(Waveform { inner: core::read_wav(path).map_err(py_err)? })
    }

    /// `format` is "f32" or "pcm16".
    #[pyo3(signature = (path, format = "f32"))]
    fn write(&self, path: PathBuf, format: &str) -> PyResult<()> {
        let format = match format {
            "f32" => core::SampleFormat::Float32,
            "pcm16" => core::SampleFormat::Pcm16,
            other => return Err(PyValueError::new_err(format!("unknown sample format {other:?}"))),
        };
        core::write_wav(path, &self.inner, format).map_err(py_err)
    }

    fn resample(&self, sample_rate: u32) -> PyResult<Self> {
        Ok(Waveform { inner: core::resample(&self.inner, sample_rate).map_err(py_err)? })
    }

    #[getter]
    fn samples(&self) -> Vec<f64> {
        self.inner.samples.clone()
    }

    #[getter]
    fn sample_rate(&self) -> u32 {
        self.inner.sample_rate_hz
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Waveform(len={}, sample_rate={})", self.inner.len(), self.inner.sample_rate_hz)
    }
}

/// N frames by 25 descriptors.
#[pyclass(module = "paap_py", frozen, from_py_object)]
#[derive(Clone)]
struct ParamMatrix {
    inner: core::AcousticParamMatrix,
}

#[pymethods]
impl ParamMatrix {
    #[new]
    #[pyo3(signature = (values, hop = 160, win = 512, fft_size = 512))]
    fn new(values: Vec<Vec<f64>>, hop: usize, win: usize, fft_size: usize) -> PyResult<Self> {
        let values = rows::<NUM_PARAMS>(values, "parameter")?;
        let inner = core::AcousticParamMatrix::new(values, spec(hop, win, fft_size)?).map_err(py_err)?;
        Ok(ParamMatrix { inner })
    }

    /// Reads a feature CSV or `.bin` file.
    #[staticmethod]
    #[pyo3(signature = (path, hop = 160, win = 512, fft_size = 512))]
    fn load(path: PathBuf, hop: usize, win: usize, fft_size: usize) -> PyResult<Self> {
        let inner = core::AcousticParamMatrix::load(path, spec(hop, win, fft_size)?).map_err(py_err)?;
        Ok(ParamMatrix { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path, None).map_err(py_err)
    }

    #[getter]
    fn values(&self) -> Vec<Vec<f64>> {
        self.inner.values.iter().map(|r| r.to_vec()).collect()
    }

    #[getter]
    fn n_frames(&self) -> usize {
        self.inner.n_frames()
    }

    fn column(&self, name: &str) -> PyResult<Vec<f64>> {
        let k = core::PARAM_NAMES
            .iter()
            .position(|p| *p == name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown parameter {name:?}")))?;
        Ok(self.inner.column(k))
    }

    fn __len__(&self) -> usize {
        self.inner.n_frames()
    }

    fn __repr__(&self) -> String {
        format!("ParamMatrix(n_frames={})", self.inner.n_frames())
    }
}

/// Neural estimator weights.
#[pyclass(module = "paap_py", frozen)]
struct EstimatorWeights {
    inner: core::EstimatorWeights,
}

#[pymethods]
impl EstimatorWeights {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(EstimatorWeights { inner: core::load_weights(path).map_err(py_err)? })
    }

    /// Uniform random weights in [-scale, scale], for shape checks.
    #[staticmethod]
    #[pyo3(signature = (hidden, seed, scale = 0.1, fft_size = 512))]
    fn random(hidden: usize, seed: u64, scale: f32, fft_size: usize) -> Self {
        EstimatorWeights { inner: core::EstimatorWeights::random(hidden, fft_size / 2 + 1, scale, seed) }
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(py_err)
    }

    #[getter]
    fn hidden(&self) -> usize {
        self.inner.hidden
    }
}

/// Fitted 26 x 41 acoustic-phonetic weights; row 25 is the bias.
#[pyclass(module = "paap_py", frozen)]
struct APWeights {
    inner: core::APWeights,
}

#[pymethods]
impl APWeights {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(APWeights { inner: core::APWeights::load(path).map_err(py_err)? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path, None).map_err(py_err)
    }

    #[getter]
    fn values(&self) -> Vec<Vec<f64>> {
        self.inner.values.iter().map(|r| r.to_vec()).collect()
    }

    #[getter]
    fn ridge_lambda(&self) -> f64 {
        self.inner.ridge_lambda
    }

    #[getter]
    fn vocab(&self) -> Vec<String> {
        self.inner.vocab.labels().to_vec()
    }
}

#[pyclass(module = "paap_py", frozen)]
struct Report {
    inner: core::PaapReport,
}

#[pymethods]
impl Report {
    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn improvement(&self) -> Vec<Option<f64>> {
        self.inner.improvement.clone()
    }

    #[getter]
    fn overall_improvement(&self) -> Option<f64> {
        self.inner.overall_improvement
    }

    #[getter]
    fn n_frames(&self) -> usize {
        self.inner.n_frames
    }

    /// Per-phoneme improvement, keyed by label, for phonemes with frames.
    fn by_phoneme(&self) -> Vec<(String, usize, Vec<Option<f64>>)> {
        self.inner
            .phonemes
            .iter()
            .filter(|r| r.frames > 0)
            .map(|r| (r.phoneme.clone(), r.frames, r.improvement.clone()))
            .collect()
    }
}

#[pyfunction]
fn param_names() -> Vec<&'static str> {
    core::PARAM_NAMES.to_vec()
}

#[pyfunction]
fn default_vocab() -> Vec<String> {
    core::PhonemeVocab::default().labels().to_vec()
}

#[pyfunction]
fn mix_at_snr(clean: &Waveform, noise: &Waveform, snr_db: f64) -> PyResult<Waveform> {
    Ok(Waveform { inner: core::mix_at_snr(&clean.inner, &noise.inner, snr_db).map_err(py_err)? })
}

#[pyfunction]
#[pyo3(signature = (waveform, hop = 160, win = 512, fft_size = 512))]
fn extract_all(py: Python<'_>, waveform: &Waveform, hop: usize, win: usize, fft_size: usize) -> PyResult<ParamMatrix> {
    let spec = spec(hop, win, fft_size)?;
    let inner = py.detach(|| core::extract_all(&waveform.inner, &spec)).map_err(py_err)?;
    Ok(ParamMatrix { inner })
}

#[pyfunction]
#[pyo3(signature = (waveform, weights, hop = 160, win = 512, fft_size = 512))]
fn estimate_params(
    py: Python<'_>,
    waveform: &Waveform,
    weights: &EstimatorWeights,
    hop: usize,
    win: usize,
    fft_size: usize,
) -> PyResult<ParamMatrix> {
    let spec = spec(hop, win, fft_size)?;
    let inner = py
        .detach(|| core::estimator::estimate_params_with(&waveform.inner, &weights.inner, &spec))
        .map_err(py_err)?;
    Ok(ParamMatrix { inner })
}

/// Frame-level phoneme scores (N x 41) from an alignment JSON file.
#[pyfunction]
#[pyo3(signature = (path, n_frames, hop = 160, win = 512, fft_size = 512))]
fn frame_logits(path: PathBuf, n_frames: usize, hop: usize, win: usize, fft_size: usize) -> PyResult<Vec<Vec<f64>>> {
    let spec = spec(hop, win, fft_size)?;
    let doc = core::parse_alignment(path, &core::PhonemeVocab::default()).map_err(py_err)?;
    let logits = core::to_frame_logits(&doc, n_frames, &spec, core::SAMPLE_RATE_HZ).map_err(py_err)?;
    Ok(logits.values.iter().map(|r| r.to_vec()).collect())
}

/// Index of the highest score per frame; ties go to the lowest index.
#[pyfunction]
fn argmax_phonemes(logits: Vec<Vec<f64>>) -> PyResult<Vec<usize>> {
    let values = rows::<NUM_PHONEMES>(logits, "logit")?;
    Ok(core::argmax_phonemes(&core::PhonemeLogits {
        values,
        vocab: core::PhonemeVocab::default(),
        frame_spec: core::FrameSpec::default(),
    }))
}

/// Ridge fit of weights on clean features and N x 41 phoneme scores per utterance.
#[pyfunction]
#[pyo3(signature = (features, logits, ridge_lambda = core::weights::DEFAULT_RIDGE_LAMBDA))]
fn fit_weights(
    py: Python<'_>,
    features: Vec<ParamMatrix>,
    logits: Vec<Vec<Vec<f64>>>,
    ridge_lambda: f64,
) -> PyResult<APWeights> {
    let d_list: Vec<_> = features.into_iter().map(|f| f.inner).collect();
    let p_list = logits
        .into_iter()
        .zip(&d_list)
        .map(|(l, d)| {
            Ok(core::PhonemeLogits {
                values: rows::<NUM_PHONEMES>(l, "logit")?,
                vocab: core::PhonemeVocab::default(),
                frame_spec: d.frame_spec,
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let inner = py.detach(|| core::fit_weights(&d_list, &p_list, ridge_lambda)).map_err(py_err)?;
    Ok(APWeights { inner })
}

#[pyfunction]
#[pyo3(signature = (enhanced, clean, phonemes, weights, weight_mode = "literal"))]
fn paap_loss(
    enhanced: &ParamMatrix,
    clean: &ParamMatrix,
    phonemes: Vec<usize>,
    weights: &APWeights,
    weight_mode: &str,
) -> PyResult<f64> {
    let cfg = core::PaapLossConfig {
        weight_mode: weight_mode.parse::<WeightMode>().map_err(py_err)?,
        ..Default::default()
    };
    core::paap_loss(&enhanced.inner, &clean.inner, &phonemes, &weights.inner, &cfg).map_err(py_err)
}

/// Improvement report over utterances given as (enhanced, baseline, clean, phonemes) tuples.
#[pyfunction]
fn analyze(utterances: Vec<(ParamMatrix, ParamMatrix, ParamMatrix, Vec<usize>)>) -> PyResult<Report> {
    let vocab = core::PhonemeVocab::default();
    let mut acc = core::ReportAccumulator::new(vocab.len());
    for (e, b, c, idx) in &utterances {
        acc.add(&e.inner, &b.inner, &c.inner, idx).map_err(py_err)?;
    }
    Ok(Report { inner: acc.finish(&vocab).map_err(py_err)? })
}

#[pymodule]
fn paap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SAMPLE_RATE_HZ", core::SAMPLE_RATE_HZ)?;
    m.add_class::<Waveform>()?;
    m.add_class::<ParamMatrix>()?;
    m.add_class::<EstimatorWeights>()?;
    m.add_class::<APWeights>()?;
    m.add_class::<Report>()?;
    m.add_function(wrap_pyfunction!(param_names, m)?)?;
    m.add_function(wrap_pyfunction!(default_vocab, m)?)?;
    m.add_function(wrap_pyfunction!(mix_at_snr, m)?)?;
    m.add_function(wrap_pyfunction!(extract_all, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_params, m)?)?;
    m.add_function(wrap_pyfunction!(frame_logits, m)?)?;
    m.add_function(wrap_pyfunction!(argmax_phonemes, m)?)?;
    m.add_function(wrap_pyfunction!(fit_weights, m)?)?;
    m.add_function(wrap_pyfunction!(paap_loss, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    Ok(())
}
