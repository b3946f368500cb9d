//! Spectral-shape, energy and cepstral descriptors.

use super::pitch::{parabolic_peak, VoicingTrack};
use super::{db10, db20, LOG_FLOOR};
use crate::dsp::{dct2, mel_filterbank, Spectrogram};
use crate::error::{PaapError, Result};

pub const N_MEL_BANDS: usize = 26;
const MEL_FMIN_HZ: f64 = 20.0;
const LOUDNESS_EXPONENT: f64 = 0.3;
/// Band searched for the strongest harmonic standing in for A3.
const F3_REGION_HZ: (f64, f64) = (2000.0, 3500.0);

fn check_voicing(spect: &Spectrogram, v: &VoicingTrack) -> Result<()> {
    if spect.n_frames() != v.n_frames() {
        return Err(PaapError::arg(format!(
            "spectrogram has {} frames but voicing track has {}",
            spect.n_frames(),
            v.n_frames()
        )));
    }
    Ok(())
}

/// Mel band energies (power) per frame.
fn mel_energies(spect: &Spectrogram) -> Result<Vec<Vec<f64>>> {
    let fb = mel_filterbank(
        N_MEL_BANDS,
        MEL_FMIN_HZ,
        spect.sample_rate_hz as f64 / 2.0,
        &spect.spec,
        spect.sample_rate_hz,
    )?;
    Ok(spect
        .frames
        .iter()
        .map(|mags| {
            fb.iter()
                .map(|row| row.iter().zip(mags).map(|(w, m)| w * m * m).sum())
                .collect()
        })
        .collect())
}

/// Loudness proxy: mean over 26 mel bands of `energy^0.3`.
pub fn extract_loudness(spect: &Spectrogram) -> Result<Vec<f64>> {
    Ok(mel_energies(spect)?
        .iter()
        .map(|bands| {
            bands.iter().map(|e| e.powf(LOUDNESS_EXPONENT)).sum::<f64>() / N_MEL_BANDS as f64
        })
        .collect())
}

/// MFCC 1–4: orthonormal DCT-II of floored natural-log mel energies, DC dropped.
pub fn extract_mfcc(spect: &Spectrogram) -> Result<Vec<[f64; 4]>> {
    mel_energies(spect)?
        .iter()
        .map(|bands| {
            let logs: Vec<f64> = bands.iter().map(|e| e.max(LOG_FLOOR).ln()).collect();
            let c = dct2(&logs, 5)?;
            Ok([c[1], c[2], c[3], c[4]])
        })
        .collect()
}

/// Spectral descriptors other than loudness and MFCCs, one vector per column.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralColumns {
    pub alpha_ratio: Vec<f64>,
    pub hammarberg: Vec<f64>,
    pub slope_0_500: Vec<f64>,
    pub slope_500_1500: Vec<f64>,
    pub flux: Vec<f64>,
    pub h1_h2: Vec<f64>,
    pub h1_a3: Vec<f64>,
    pub hnr: Vec<f64>,
}

fn band_energy(spect: &Spectrogram, mags: &[f64], lo: f64, hi: f64, hi_inclusive: bool) -> f64 {
    mags.iter()
        .enumerate()
        .filter(|&(k, _)| {
            let f = spect.bin_hz(k);
            f >= lo && (f < hi || (hi_inclusive && f == hi))
        })
        .map(|(_, m)| m * m)
        .sum()
}

fn band_max(spect: &Spectrogram, mags: &[f64], lo: f64, hi: f64, hi_inclusive: bool) -> f64 {
    mags.iter()
        .enumerate()
        .filter(|&(k, _)| {
            let f = spect.bin_hz(k);
            f >= lo && (f < hi || (hi_inclusive && f == hi))
        })
        .map(|(_, &m)| m)
        .fold(0.0, f64::max)
}

/// Least-squares slope of dB magnitude against frequency (dB/Hz) over `[lo, hi]`.
fn db_slope(spect: &Spectrogram, mags: &[f64], lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = spect
        .bin_range(lo, hi)
        .map(|k| (spect.bin_hz(k), db20(mags[k])))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// dB level of harmonic `k` of `f0`: strongest bin near `k * f0`, refined by
/// parabolic interpolation in the dB domain.
pub(crate) fn harmonic_db(spect: &Spectrogram, mags: &[f64], f0: f64, k: usize) -> f64 {
    let df = spect.sample_rate_hz as f64 / spect.spec.fft_size as f64;
    let last = mags.len() - 1;
    let center = (k as f64 * f0 / df).round() as usize;
    if center > last {
        return db20(0.0);
    }
    let reach = ((0.3 * f0 / df).floor() as usize).max(1);
    let lo = center.saturating_sub(reach).max(1);
    let hi = (center + reach).min(last - 1);
    let Some(peak) = (lo..=hi).max_by(|&a, &b| mags[a].total_cmp(&mags[b])) else {
        return db20(mags[center]);
    };
    let (_, val) = parabolic_peak(db20(mags[peak - 1]), db20(mags[peak]), db20(mags[peak + 1]));
    val
}

fn hnr_db(acf_peak: f64) -> f64 {
    if acf_peak >= 1.0 {
        return 100.0;
    }
    (10.0 * (acf_peak / (1.0 - acf_peak)).log10()).clamp(-100.0, 100.0)
}

/// Alpha ratio, Hammarberg index, spectral slopes, flux, harmonic
/// differences and HNR per frame.
pub fn extract_spectral(spect: &Spectrogram, v: &VoicingTrack) -> Result<SpectralColumns> {
    check_voicing(spect, v)?;
    let mut out = SpectralColumns::default();
    let mut prev_norm: Option<Vec<f64>> = None;
    for (i, mags) in spect.frames.iter().enumerate() {
        let low = band_energy(spect, mags, 50.0, 1000.0, false);
        let high = band_energy(spect, mags, 1000.0, 5000.0, true);
        out.alpha_ratio.push(db10(low) - db10(high));
        let peak_low = band_max(spect, mags, 0.0, 2000.0, false);
        let peak_high = band_max(spect, mags, 2000.0, 5000.0, true);
        out.hammarberg.push(db20(peak_low) - db20(peak_high));
        out.slope_0_500.push(db_slope(spect, mags, 0.0, 500.0));
        out.slope_500_1500.push(db_slope(spect, mags, 500.0, 1500.0));

        let norm = mags.iter().map(|m| m * m).sum::<f64>().sqrt();
        let normalized: Vec<f64> = if norm > 0.0 {
            mags.iter().map(|m| m / norm).collect()
        } else {
            vec![0.0; mags.len()]
        };
        out.flux.push(match &prev_norm {
            Some(prev) => normalized.iter().zip(prev).map(|(a, b)| (a - b).powi(2)).sum(),
            None => 0.0,
        });
        prev_norm = Some(normalized);

        if v.voiced[i] {
            let f0 = v.f0_hz[i];
            let h1 = harmonic_db(spect, mags, f0, 1);
            let h2 = harmonic_db(spect, mags, f0, 2);
            let first = (F3_REGION_HZ.0 / f0).ceil().max(1.0) as usize;
            let last = (F3_REGION_HZ.1 / f0).floor() as usize;
            let a3 = (first..=last)
                .map(|k| harmonic_db(spect, mags, f0, k))
                .reduce(f64::max)
                .unwrap_or_else(|| db20(0.0));
            out.h1_h2.push(h1 - h2);
            out.h1_a3.push(h1 - a3);
            out.hnr.push(hnr_db(v.confidence[i]));
        } else {
            out.h1_h2.push(0.0);
            out.h1_a3.push(0.0);
            out.hnr.push(0.0);
        }
    }
    Ok(out)
}
