//! Neural parameter estimator: three stacked bidirectional LSTM layers over
//! log-magnitude spectrogram frames, followed by a linear projection to the
//! 25 parameters. Inference only; weights come from an exported file.
//!
//! Weight file: one line of JSON header
//! `{"h":..,"layers":3,"in":..,"out":25,"tensors":[{"name","shape","offset"}]}`
//! terminated by `\n`, then a little-endian f32 blob. Offsets count f32
//! elements from the start of the blob. Gate order inside every `4h` block
//! is input, forget, cell, output.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audio::Waveform;
use crate::dsp::{stft, FrameSpec};
use crate::error::{PaapError, Result};
use crate::features::{write_file, AcousticParamMatrix, NUM_PARAMS};
use crate::lld::extract_all;

pub const N_LAYERS: usize = 3;
pub const DEFAULT_HIDDEN: usize = 512;
/// Added to magnitudes before the log.
pub const LOG_OFFSET: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn tag(self) -> &'static str {
        match self {
            Direction::Forward => "fw",
            Direction::Backward => "bw",
        }
    }
}

/// Parameters of one LSTM layer in one direction, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    pub hidden: usize,
    pub input: usize,
    /// `4h x in`
    pub w_ih: Vec<f32>,
    /// `4h x h`
    pub w_hh: Vec<f32>,
    pub b_ih: Vec<f32>,
    pub b_hh: Vec<f32>,
}

impl LstmLayer {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        LstmLayer {
            hidden,
            input,
            w_ih: vec![0.0; 4 * hidden * input],
            w_hh: vec![0.0; 4 * hidden * hidden],
            b_ih: vec![0.0; 4 * hidden],
            b_hh: vec![0.0; 4 * hidden],
        }
    }

    fn check(&self) -> Result<()> {
        let g = 4 * self.hidden;
        if self.w_ih.len() != g * self.input
            || self.w_hh.len() != g * self.hidden
            || self.b_ih.len() != g
            || self.b_hh.len() != g
        {
            return Err(PaapError::arg(format!(
                "LSTM layer tensors do not match h={} in={}",
                self.hidden, self.input
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorWeights {
    pub hidden: usize,
    pub input: usize,
    /// `[forward, backward]` per layer.
    pub layers: Vec<[LstmLayer; 2]>,
    /// `25 x 2h`; columns `0..h` read the forward half.
    pub proj_w: Vec<f32>,
    pub proj_b: Vec<f32>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn matvec_acc(out: &mut [f64], m: &[f32], x: &[f64]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += row.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum::<f64>();
    }
}

/// Runs one layer over `x` (N frames) with zero initial state. The backward
/// direction walks time in reverse and returns outputs in original order.
pub fn lstm_forward(x: &[Vec<f64>], layer: &LstmLayer, dir: Direction) -> Result<Vec<Vec<f64>>> {
    layer.check()?;
    let h = layer.hidden;
    if let Some((i, row)) = x.iter().enumerate().find(|(_, r)| r.len() != layer.input) {
        return Err(PaapError::arg(format!(
            "frame {i} has {} inputs, layer expects {}",
            row.len(),
            layer.input
        )));
    }
    let bias: Vec<f64> = layer.b_ih.iter().zip(&layer.b_hh).map(|(&a, &b)| a as f64 + b as f64).collect();
    let mut hs = vec![0.0; h];
    let mut cs = vec![0.0; h];
    let mut out = vec![Vec::new(); x.len()];
    let order: Box<dyn Iterator<Item = usize>> = match dir {
        Direction::Forward => Box::new(0..x.len()),
        Direction::Backward => Box::new((0..x.len()).rev()),
    };
    let mut gates = vec![0.0; 4 * h];
    for t in order {
        gates.copy_from_slice(&bias);
        matvec_acc(&mut gates, &layer.w_ih, &x[t]);
        matvec_acc(&mut gates, &layer.w_hh, &hs);
        for k in 0..h {
            let i = sigmoid(gates[k]);
            let f = sigmoid(gates[h + k]);
            let g = gates[2 * h + k].tanh();
            let o = sigmoid(gates[3 * h + k]);
            cs[k] = f * cs[k] + i * g;
            hs[k] = o * cs[k].tanh();
        }
        out[t] = hs.clone();
    }
    Ok(out)
}

impl EstimatorWeights {
    /// All-zero network; every output frame equals the (zero) projection bias.
    pub fn zeros(hidden: usize, input: usize) -> Self {
        EstimatorWeights {
            hidden,
            input,
            layers: (0..N_LAYERS)
                .map(|l| {
                    let n_in = if l == 0 { input } else { 2 * hidden };
                    [LstmLayer::zeros(hidden, n_in), LstmLayer::zeros(hidden, n_in)]
                })
                .collect(),
            proj_w: vec![0.0; NUM_PARAMS * 2 * hidden],
            proj_b: vec![0.0; NUM_PARAMS],
        }
    }

    /// Uniform weights in `[-scale, scale]` from a fixed seed, for tests and demos.
    pub fn random(hidden: usize, input: usize, scale: f32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = EstimatorWeights::zeros(hidden, input);
        let mut fill = |v: &mut Vec<f32>| v.iter_mut().for_each(|x| *x = rng.random_range(-scale..=scale));
        for pair in &mut w.layers {
            for layer in pair.iter_mut() {
                fill(&mut layer.w_ih);
                fill(&mut layer.w_hh);
                fill(&mut layer.b_ih);
                fill(&mut layer.b_hh);
            }
        }
        fill(&mut w.proj_w);
        fill(&mut w.proj_b);
        w
    }

    fn tensors(&self) -> Vec<(String, Vec<usize>, &[f32])> {
        let mut out = Vec::new();
        for (l, pair) in self.layers.iter().enumerate() {
            for (layer, dir) in pair.iter().zip([Direction::Forward, Direction::Backward]) {
                let p = format!("lstm.l{l}.{}", dir.tag());
                let g = 4 * layer.hidden;
                out.push((format!("{p}.W_ih"), vec![g, layer.input], layer.w_ih.as_slice()));
                out.push((format!("{p}.W_hh"), vec![g, layer.hidden], layer.w_hh.as_slice()));
                out.push((format!("{p}.b_ih"), vec![g], layer.b_ih.as_slice()));
                out.push((format!("{p}.b_hh"), vec![g], layer.b_hh.as_slice()));
            }
        }
        out.push(("proj.W".into(), vec![NUM_PARAMS, 2 * self.hidden], self.proj_w.as_slice()));
        out.push(("proj.b".into(), vec![NUM_PARAMS], self.proj_b.as_slice()));
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut entries = Vec::new();
        let mut blob = Vec::new();
        let mut offset = 0;
        for (name, shape, data) in self.tensors() {
            entries.push(TensorEntry { name, shape, offset });
            offset += data.len();
            for v in data {
                blob.extend_from_slice(&v.to_le_bytes());
            }
        }
        let header = WeightHeader {
            h: self.hidden,
            layers: N_LAYERS,
            input: self.input,
            out: NUM_PARAMS,
            tensors: entries,
        };
        let mut out = serde_json::to_vec(&header).expect("header serializes");
        out.push(b'\n');
        out.extend(blob);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let split = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| PaapError::format("weight file has no header line"))?;
        let header: WeightHeader = serde_json::from_slice(&bytes[..split])
            .map_err(|e| PaapError::format(format!("weight header: {e}")))?;
        let blob = &bytes[split + 1..];
        if !blob.len().is_multiple_of(4) {
            return Err(PaapError::format("weight blob length is not a multiple of 4"));
        }
        if header.layers != N_LAYERS || header.out != NUM_PARAMS {
            return Err(PaapError::format(format!(
                "expected {N_LAYERS} layers and {NUM_PARAMS} outputs, header has {} and {}",
                header.layers, header.out
            )));
        }
        if header.h == 0 || header.input == 0 {
            return Err(PaapError::format("hidden and input sizes must be positive"));
        }
        let n_floats = blob.len() / 4;
        let mut w = EstimatorWeights::zeros(header.h, header.input);
        let expected: Vec<(String, Vec<usize>)> =
            w.tensors().into_iter().map(|(n, s, _)| (n, s)).collect();
        for (name, shape) in expected {
            let entry = header
                .tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| PaapError::format(format!("missing tensor `{name}`")))?;
            if entry.shape != shape {
                return Err(PaapError::format(format!(
                    "tensor `{name}` has shape {:?}, expected {shape:?}",
                    entry.shape
                )));
            }
            let len: usize = shape.iter().product();
            if entry.offset.checked_add(len).is_none_or(|end| end > n_floats) {
                return Err(PaapError::format(format!("tensor `{name}` runs past the end of the blob")));
            }
            let data: Vec<f32> = blob[entry.offset * 4..(entry.offset + len) * 4]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            if data.iter().any(|v| !v.is_finite()) {
                return Err(PaapError::Validation(format!("tensor `{name}` has non-finite values")));
            }
            *w.tensor_mut(&name) = data;
        }
        Ok(w)
    }

    fn tensor_mut(&mut self, name: &str) -> &mut Vec<f32> {
        match name {
            "proj.W" => return &mut self.proj_w,
            "proj.b" => return &mut self.proj_b,
            _ => {}
        }
        // lstm.l{L}.{fw|bw}.{T}
        let parts: Vec<&str> = name.split('.').collect();
        let l: usize = parts[1][1..].parse().expect("generated name");
        let layer = &mut self.layers[l][usize::from(parts[2] == "bw")];
        match parts[3] {
            "W_ih" => &mut layer.w_ih,
            "W_hh" => &mut layer.w_hh,
            "b_ih" => &mut layer.b_ih,
            _ => &mut layer.b_hh,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.to_bytes())
    }

    /// Swaps the forward and backward roles in every layer and the matching
    /// halves of the projection. Running the result on time-reversed input
    /// yields the time-reversed output.
    pub fn mirrored(&self) -> Self {
        let mut w = self.clone();
        for pair in &mut w.layers {
            pair.swap(0, 1);
        }
        // layers 1.. read [fw, bw] concatenations, so their input columns swap too
        let h = self.hidden;
        for pair in w.layers.iter_mut().skip(1) {
            for layer in pair.iter_mut() {
                for row in layer.w_ih.chunks_exact_mut(2 * h) {
                    let (a, b) = row.split_at_mut(h);
                    a.swap_with_slice(b);
                }
            }
        }
        for row in w.proj_w.chunks_exact_mut(2 * h) {
            let (a, b) = row.split_at_mut(h);
            a.swap_with_slice(b);
        }
        w
    }
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

#[derive(Serialize, Deserialize)]
struct WeightHeader {
    h: usize,
    layers: usize,
    #[serde(rename = "in")]
    input: usize,
    out: usize,
    tensors: Vec<TensorEntry>,
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<EstimatorWeights> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| PaapError::io(path, e))?;
    EstimatorWeights::from_bytes(&bytes).map_err(|e| match e {
        PaapError::Format(m) => PaapError::format(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Stacked bidirectional layers and projection on arbitrary input frames.
pub fn network_forward(x: &[Vec<f64>], weights: &EstimatorWeights) -> Result<Vec<[f64; NUM_PARAMS]>> {
    let mut cur = x.to_vec();
    for pair in &weights.layers {
        let fw = lstm_forward(&cur, &pair[0], Direction::Forward)?;
        let bw = lstm_forward(&cur, &pair[1], Direction::Backward)?;
        cur = fw.into_iter().zip(bw).map(|(mut a, b)| {
            a.extend(b);
            a
        }).collect();
    }
    Ok(cur
        .iter()
        .map(|hcat| {
            let mut out: [f64; NUM_PARAMS] = std::array::from_fn(|k| weights.proj_b[k] as f64);
            matvec_acc(&mut out, &weights.proj_w, hcat);
            out
        })
        .collect())
}

/// Input features: `log(|X| + 1e-7)` per STFT bin.
pub fn log_spectrogram(w: &Waveform, spec: &FrameSpec) -> Result<Vec<Vec<f64>>> {
    let spect = stft(w, spec)?;
    Ok(spect
        .frames
        .into_iter()
        .map(|f| f.into_iter().map(|m| (m + LOG_OFFSET).ln()).collect())
        .collect())
}

pub fn estimate_params_with(w: &Waveform, weights: &EstimatorWeights, spec: &FrameSpec) -> Result<AcousticParamMatrix> {
    if spec.n_bins() != weights.input {
        return Err(PaapError::arg(format!(
            "estimator expects {} input bins but the frame spec gives {}",
            weights.input,
            spec.n_bins()
        )));
    }
    let x = log_spectrogram(w, spec)?;
    AcousticParamMatrix::new(network_forward(&x, weights)?, *spec)
}

/// Neural estimate on the default frame grid.
pub fn estimate_params(w: &Waveform, weights: &EstimatorWeights) -> Result<AcousticParamMatrix> {
    estimate_params_with(w, weights, &FrameSpec::default())
}

/// Anything that turns a waveform into a parameter matrix.
pub trait ParamBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn estimate(&self, w: &Waveform) -> Result<AcousticParamMatrix>;
}

#[derive(Debug, Clone, Default)]
pub struct DspBackend {
    pub spec: FrameSpec,
}

impl ParamBackend for DspBackend {
    fn name(&self) -> &'static str {
        "dsp"
    }

    fn estimate(&self, w: &Waveform) -> Result<AcousticParamMatrix> {
        extract_all(w, &self.spec)
    }
}

#[derive(Debug, Clone)]
pub struct NeuralBackend {
    pub weights: Arc<EstimatorWeights>,
    pub spec: FrameSpec,
}

impl NeuralBackend {
    pub fn new(weights: EstimatorWeights, spec: FrameSpec) -> Result<Self> {
        if spec.n_bins() != weights.input {
            return Err(PaapError::arg(format!(
                "estimator expects {} input bins but the frame spec gives {}",
                weights.input,
                spec.n_bins()
            )));
        }
        Ok(NeuralBackend { weights: Arc::new(weights), spec })
    }
}

impl ParamBackend for NeuralBackend {
    fn name(&self) -> &'static str {
        "neural"
    }

    fn estimate(&self, w: &Waveform) -> Result<AcousticParamMatrix> {
        estimate_params_with(w, &self.weights, &self.spec)
    }
}
