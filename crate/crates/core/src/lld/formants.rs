//! LPC formant tracking.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Schur};
use rustfft::num_complex::Complex;

use super::db20;
use super::pitch::VoicingTrack;
use super::spectral::harmonic_db;
use crate::audio::Waveform;
use crate::dsp::{autocorrelation, frame_samples, hann, levinson_durbin, stft, FrameSpec, Spectrogram};
use crate::error::{PaapError, Result};

pub const LPC_ORDER: usize = 12;
pub const PRE_EMPHASIS: f64 = 0.97;
const FORMANT_MIN_HZ: f64 = 90.0;
const FORMANT_MAX_HZ: f64 = 5500.0;
const MAX_BANDWIDTH_HZ: f64 = 600.0;
/// Zero-lag autocorrelation is raised by this fraction (a -30 dB noise floor),
/// which keeps spurious poles on line spectra wide.
const WHITE_NOISE_CORRECTION: f64 = 1e-3;
const SILENCE_ENERGY: f64 = 1e-12;

/// Up to three formants for one frame. Missing slots are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FormantFrame {
    pub freq: [f64; 3],
    pub bw: [f64; 3],
    /// Envelope level at the formant relative to the first harmonic (dB).
    pub ampl: [f64; 3],
}

/// Roots of `z^p - a[0] z^(p-1) - ... - a[p-1]` via companion-matrix eigenvalues.
fn predictor_roots(a: &[f64]) -> Option<Vec<Complex<f64>>> {
    let p = a.len();
    let mut m = DMatrix::<f64>::zeros(p, p);
    for (j, &c) in a.iter().enumerate() {
        m[(0, j)] = c;
    }
    for i in 1..p {
        m[(i, i - 1)] = 1.0;
    }
    let schur = Schur::try_new(m, f64::EPSILON, 10_000)?;
    Some(schur.complex_eigenvalues().iter().copied().collect())
}

/// LPC envelope level in dB at `freq_hz`, with the pre-emphasis tilt undone.
fn envelope_db(a: &[f64], gain: f64, freq_hz: f64, sr: f64) -> f64 {
    let omega = 2.0 * PI * freq_hz / sr;
    let inverse = a
        .iter()
        .enumerate()
        .fold(Complex::new(1.0, 0.0), |acc, (k, &c)| {
            acc - c * Complex::from_polar(1.0, -omega * (k + 1) as f64)
        });
    let emphasis = Complex::new(1.0, 0.0) - PRE_EMPHASIS * Complex::from_polar(1.0, -omega);
    10.0 * gain.max(1e-30).log10() - db20(inverse.norm()) - db20(emphasis.norm())
}

fn frame_formants(raw: &[f64], window: &[f64], sr: f64) -> Option<(Vec<f64>, f64, Vec<(f64, f64)>)> {
    let mut y = Vec::with_capacity(raw.len());
    y.push(raw[0]);
    y.extend(raw.windows(2).map(|p| p[1] - PRE_EMPHASIS * p[0]));
    y.iter_mut().zip(window).for_each(|(s, h)| *s *= h);
    let mut r = autocorrelation(&y, LPC_ORDER);
    if r[0] < SILENCE_ENERGY {
        return None;
    }
    r[0] *= 1.0 + WHITE_NOISE_CORRECTION;
    let sol = levinson_durbin(&r).ok()?;
    if sol.truncated_at.is_some() {
        return None;
    }
    let roots = predictor_roots(&sol.coeffs)?;
    let mut candidates: Vec<(f64, f64)> = roots
        .iter()
        .filter(|z| z.im > 0.0)
        .map(|z| (z.arg() * sr / (2.0 * PI), -(sr / PI) * z.norm().ln()))
        .filter(|&(f, bw)| (FORMANT_MIN_HZ..=FORMANT_MAX_HZ).contains(&f) && bw < MAX_BANDWIDTH_HZ)
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    Some((sol.coeffs, sol.gain, candidates))
}

pub(crate) fn formants_with_spectrogram(
    w: &Waveform,
    spect: &Spectrogram,
    v: &VoicingTrack,
) -> Result<Vec<FormantFrame>> {
    let spec = &spect.spec;
    if spect.n_frames() != v.n_frames() {
        return Err(PaapError::arg(format!(
            "spectrogram has {} frames but voicing track has {}",
            spect.n_frames(),
            v.n_frames()
        )));
    }
    let sr = w.sample_rate_hz as f64;
    let window = hann(spec.win);
    Ok((0..spect.n_frames())
        .map(|i| {
            let raw = frame_samples(&w.samples, spec, i);
            let Some((coeffs, gain, cands)) = frame_formants(&raw, &window, sr) else {
                return FormantFrame::default();
            };
            let mut out = FormantFrame::default();
            let h1 = v.voiced[i].then(|| harmonic_db(spect, &spect.frames[i], v.f0_hz[i], 1));
            for (k, &(f, bw)) in cands.iter().take(3).enumerate() {
                out.freq[k] = f;
                out.bw[k] = bw;
                if let Some(h1) = h1 {
                    out.ampl[k] = envelope_db(&coeffs, gain, f, sr) - h1;
                }
            }
            out
        })
        .collect())
}

/// F1–F3 frequency, bandwidth and level relative to the first harmonic.
pub fn extract_formants(w: &Waveform, spec: &FrameSpec, v: &VoicingTrack) -> Result<Vec<FormantFrame>> {
    let spect = stft(w, spec)?;
    formants_with_spectrogram(w, &spect, v)
}
