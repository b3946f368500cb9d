//! Waveform I/O, band-limited resampling and SNR mixing.

use std::path::Path;

use crate::error::{PaapError, Result};

/// Mono audio at a known sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl Waveform {
    /// Builds a waveform, rejecting non-finite samples and a zero rate.
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(PaapError::arg("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(PaapError::Validation(format!("sample {i} is not finite")));
        }
        Ok(Waveform {
            samples,
            sample_rate_hz,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    /// Multiplies every sample by `gain`.
    pub fn scaled(&self, gain: f64) -> Waveform {
        Waveform {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    /// Rescales so the peak magnitude is at most 1. Quiet signals are left alone.
    pub fn peak_normalized(&self) -> Waveform {
        let peak = self.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        if peak > 1.0 {
            self.scaled(1.0 / peak)
        } else {
            self.clone()
        }
    }
}

fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|s| s * s).sum::<f64>() / x.len() as f64).sqrt()
}

/// On-disk sample encoding for [`write_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Pcm16,
    Float32,
}

fn map_hound(path: &Path, err: hound::Error) -> PaapError {
    match err {
        hound::Error::IoError(e) => PaapError::io(path, e),
        hound::Error::Unsupported => {
            PaapError::UnsupportedCodec(format!("{}: unsupported WAVE encoding", path.display()))
        }
        hound::Error::FormatError(msg) => PaapError::format(format!("{}: {msg}", path.display())),
        other => PaapError::format(format!("{}: {other}", path.display())),
    }
}

/// Reads a RIFF/WAVE file (PCM16 or IEEE float32) and downmixes to mono.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(PaapError::format(format!("{}: zero channels", path.display())));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_hound(path, e))?,
        (fmt, bits) => {
            return Err(PaapError::UnsupportedCodec(format!(
                "{}: {bits}-bit {fmt:?} samples (expected PCM16 or float32)",
                path.display()
            )))
        }
    };
    let samples: Vec<f64> = interleaved
        .chunks(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    Waveform::new(samples, spec.sample_rate)
        .map_err(|e| PaapError::format(format!("{}: {e}", path.display())))
}

/// Writes a mono WAV file. PCM16 output is rounded and clipped to the i16 range.
pub fn write_wav(path: impl AsRef<Path>, w: &Waveform, format: SampleFormat) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate_hz,
        bits_per_sample: match format {
            SampleFormat::Pcm16 => 16,
            SampleFormat::Float32 => 32,
        },
        sample_format: match format {
            SampleFormat::Pcm16 => hound::SampleFormat::Int,
            SampleFormat::Float32 => hound::SampleFormat::Float,
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for &s in &w.samples {
        match format {
            SampleFormat::Pcm16 => {
                let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                writer.write_sample(v)
            }
            SampleFormat::Float32 => writer.write_sample(s as f32),
        }
        .map_err(|e| map_hound(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound(path, e))
}

const SINC_ZERO_CROSSINGS: f64 = 32.0;
const KAISER_BETA: f64 = 8.6;

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Band-limited resampling with a Kaiser-windowed sinc kernel.
///
/// The cutoff sits at the lower of the two Nyquist frequencies. The output
/// has `round(len * target / source)` samples.
pub fn resample(w: &Waveform, target_hz: u32) -> Result<Waveform> {
    if target_hz == 0 {
        return Err(PaapError::arg("target sample rate must be positive"));
    }
    if target_hz == w.sample_rate_hz {
        return Ok(w.clone());
    }
    let ratio = target_hz as f64 / w.sample_rate_hz as f64;
    let out_len = (w.len() as f64 * ratio).round() as usize;
    // cutoff as a fraction of the source Nyquist
    let cutoff = ratio.min(1.0);
    let half_width = SINC_ZERO_CROSSINGS / cutoff;
    let i0_beta = bessel_i0(KAISER_BETA);
    let x = &w.samples;
    let n_in = x.len() as isize;

    let samples = (0..out_len)
        .map(|m| {
            let t = m as f64 / ratio;
            let lo = ((t - half_width).ceil() as isize).max(0);
            let hi = ((t + half_width).floor() as isize).min(n_in - 1);
            let mut acc = 0.0;
            for n in lo..=hi {
                let d = t - n as f64;
                let u = d / half_width;
                let win = bessel_i0(KAISER_BETA * (1.0 - u * u).max(0.0).sqrt()) / i0_beta;
                let arg = std::f64::consts::PI * cutoff * d;
                let sinc = if arg.abs() < 1e-12 { 1.0 } else { arg.sin() / arg };
                acc += x[n as usize] * cutoff * sinc * win;
            }
            acc
        })
        .collect();
    Waveform::new(samples, target_hz)
}

/// Noise gain that places `noise` at `snr_db` below `clean`.
pub fn mix_gain(clean: &Waveform, noise: &Waveform, snr_db: f64) -> Result<f64> {
    if clean.sample_rate_hz != noise.sample_rate_hz {
        return Err(PaapError::arg(format!(
            "sample rate mismatch: clean {} Hz, noise {} Hz",
            clean.sample_rate_hz, noise.sample_rate_hz
        )));
    }
    if noise.len() < clean.len() {
        return Err(PaapError::arg(format!(
            "noise ({} samples) shorter than clean ({} samples)",
            noise.len(),
            clean.len()
        )));
    }
    if !snr_db.is_finite() {
        return Err(PaapError::arg("snr_db must be finite"));
    }
    let clean_rms = clean.rms();
    let noise_rms = rms(&noise.samples[..clean.len()]);
    if clean_rms == 0.0 {
        return Err(PaapError::DegenerateSignal("clean signal is all zeros".into()));
    }
    if noise_rms == 0.0 {
        return Err(PaapError::DegenerateSignal("noise signal is all zeros".into()));
    }
    Ok(clean_rms / noise_rms * 10f64.powf(-snr_db / 20.0))
}

/// Adds `noise` (truncated to the clean length) to `clean` at the requested SNR.
pub fn mix_at_snr(clean: &Waveform, noise: &Waveform, snr_db: f64) -> Result<Waveform> {
    let g = mix_gain(clean, noise, snr_db)?;
    let samples = clean
        .samples
        .iter()
        .zip(&noise.samples)
        .map(|(c, n)| c + g * n)
        .collect();
    Waveform::new(samples, clean.sample_rate_hz)
}
