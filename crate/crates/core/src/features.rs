//! The per-frame acoustic parameter matrix and its file formats.

use std::io::Write;
use std::path::Path;

use crate::dsp::FrameSpec;
use crate::error::{PaapError, Result};

pub const NUM_PARAMS: usize = 25;

/// Canonical column order.
pub const PARAM_NAMES: [&str; NUM_PARAMS] = [
    "F0semitone",
    "jitterLocal",
    "shimmerLocaldB",
    "loudness",
    "HNRdBACF",
    "alphaRatio",
    "hammarbergIndex",
    "slope0-500",
    "slope500-1500",
    "spectralFlux",
    "mfcc1",
    "mfcc2",
    "mfcc3",
    "mfcc4",
    "F1freq",
    "F1bw",
    "F1amplLogRelF0",
    "F2freq",
    "F2bw",
    "F2amplLogRelF0",
    "F3freq",
    "F3bw",
    "F3amplLogRelF0",
    "logRelF0-H1-H2",
    "logRelF0-H1-A3",
];

/// Column indices into a [`AcousticParamMatrix`] row.
pub mod col {
    pub const F0_SEMITONE: usize = 0;
    pub const JITTER: usize = 1;
    pub const SHIMMER: usize = 2;
    pub const LOUDNESS: usize = 3;
    pub const HNR: usize = 4;
    pub const ALPHA_RATIO: usize = 5;
    pub const HAMMARBERG: usize = 6;
    pub const SLOPE_0_500: usize = 7;
    pub const SLOPE_500_1500: usize = 8;
    pub const SPECTRAL_FLUX: usize = 9;
    pub const MFCC1: usize = 10;
    pub const F1_FREQ: usize = 14;
    pub const F1_BW: usize = 15;
    pub const F1_AMPL: usize = 16;
    pub const H1_H2: usize = 23;
    pub const H1_A3: usize = 24;

    /// Frequency column of formant `k` (0-based); bandwidth and amplitude follow it.
    pub const fn formant_freq(k: usize) -> usize {
        F1_FREQ + 3 * k
    }

    /// Columns forced to zero on unvoiced frames.
    pub const VOICING_GATED: [usize; 9] = [
        F0_SEMITONE,
        JITTER,
        SHIMMER,
        HNR,
        F1_AMPL,
        F1_AMPL + 3,
        F1_AMPL + 6,
        H1_H2,
        H1_A3,
    ];
}

const BIN_MAGIC: &[u8; 6] = b"PAAPD1";

/// N frames by 25 acoustic parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AcousticParamMatrix {
    pub values: Vec<[f64; NUM_PARAMS]>,
    pub frame_spec: FrameSpec,
}

impl AcousticParamMatrix {
    pub fn new(values: Vec<[f64; NUM_PARAMS]>, frame_spec: FrameSpec) -> Result<Self> {
        for (i, row) in values.iter().enumerate() {
            if let Some(k) = row.iter().position(|v| !v.is_finite()) {
                return Err(PaapError::Validation(format!(
                    "frame {i}, column {}: non-finite value",
                    PARAM_NAMES[k]
                )));
            }
        }
        Ok(AcousticParamMatrix { values, frame_spec })
    }

    pub fn n_frames(&self) -> usize {
        self.values.len()
    }

    pub fn param_names(&self) -> &'static [&'static str; NUM_PARAMS] {
        &PARAM_NAMES
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[k]).collect()
    }

    /// CSV text: an optional `# ` comment line, a header, then one row per frame.
    pub fn to_csv(&self, comment: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(c) = comment {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str("frame");
        for name in PARAM_NAMES {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (i, row) in self.values.iter().enumerate() {
            out.push_str(&i.to_string());
            for v in row {
                out.push(',');
                out.push_str(&format!("{v:?}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, frame_spec: FrameSpec) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| PaapError::format("feature CSV is empty"))?;
        let names: Vec<&str> = header.split(',').map(str::trim).collect();
        if names.len() != NUM_PARAMS + 1
            || names[0] != "frame"
            || names[1..].iter().zip(PARAM_NAMES).any(|(a, b)| *a != b)
        {
            return Err(PaapError::format(
                "feature CSV header must be `frame` followed by the 25 canonical parameter names",
            ));
        }
        let mut values = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != NUM_PARAMS + 1 {
                return Err(PaapError::format(format!(
                    "feature CSV row {lineno}: expected {} fields, got {}",
                    NUM_PARAMS + 1,
                    fields.len()
                )));
            }
            let mut row = [0.0; NUM_PARAMS];
            for (k, f) in fields[1..].iter().enumerate() {
                row[k] = f.trim().parse().map_err(|_| {
                    PaapError::format(format!("feature CSV row {lineno}: bad number {f:?}"))
                })?;
            }
            values.push(row);
        }
        AcousticParamMatrix::new(values, frame_spec)
    }

    /// Binary layout: magic `PAAPD1`, u32 N, u32 25, then little-endian f32 row-major.
    pub fn to_bin(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(14 + self.values.len() * NUM_PARAMS * 4);
        out.extend_from_slice(BIN_MAGIC);
        out.extend_from_slice(&(self.values.len() as u32).to_le_bytes());
        out.extend_from_slice(&(NUM_PARAMS as u32).to_le_bytes());
        for row in &self.values {
            for &v in row {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bin(bytes: &[u8], frame_spec: FrameSpec) -> Result<Self> {
        let (rows, cols, body) = read_matrix_header(bytes, BIN_MAGIC)?;
        if cols != NUM_PARAMS {
            return Err(PaapError::format(format!(
                "feature file has {cols} columns, expected {NUM_PARAMS}"
            )));
        }
        let values = body
            .chunks_exact(NUM_PARAMS * 4)
            .take(rows)
            .map(|chunk| {
                let mut row = [0.0; NUM_PARAMS];
                for (k, b) in chunk.chunks_exact(4).enumerate() {
                    row[k] = f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64;
                }
                row
            })
            .collect();
        AcousticParamMatrix::new(values, frame_spec)
    }

    /// Writes CSV or binary depending on the extension (`.bin` is binary).
    pub fn save(&self, path: impl AsRef<Path>, comment: Option<&str>) -> Result<()> {
        let path = path.as_ref();
        let bytes = if has_extension(path, "bin") {
            self.to_bin()
        } else {
            self.to_csv(comment).into_bytes()
        };
        write_file(path, &bytes)
    }

    pub fn load(path: impl AsRef<Path>, frame_spec: FrameSpec) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| PaapError::io(path, e))?;
        let parsed = if has_extension(path, "bin") {
            AcousticParamMatrix::from_bin(&bytes, frame_spec)
        } else {
            let text = String::from_utf8(bytes)
                .map_err(|_| PaapError::format("feature CSV is not UTF-8"))?;
            AcousticParamMatrix::from_csv(&text, frame_spec)
        };
        parsed.map_err(|e| PaapError::format(format!("{}: {e}", path.display())))
    }
}

pub(crate) fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| PaapError::io(path, e))?;
    f.write_all(bytes).map_err(|e| PaapError::io(path, e))
}

/// Parses `magic, u32 rows, u32 cols` and checks the body length.
pub(crate) fn read_matrix_header<'a>(
    bytes: &'a [u8],
    magic: &[u8; 6],
) -> Result<(usize, usize, &'a [u8])> {
    if bytes.len() < 14 || &bytes[..6] != magic {
        return Err(PaapError::format(format!(
            "missing {} magic",
            String::from_utf8_lossy(magic)
        )));
    }
    let rows = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let body = &bytes[14..];
    if body.len() != rows * cols * 4 {
        return Err(PaapError::format(format!(
            "expected {} data bytes for {rows}x{cols}, found {}",
            rows * cols * 4,
            body.len()
        )));
    }
    Ok((rows, cols, body))
}
