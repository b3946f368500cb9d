//! Frame-wise extraction of the 25 acoustic low-level descriptors.
//!
//! Every descriptor is computed on the same center-padded frame grid as
//! [`crate::dsp::stft`], so row `i` of the output describes the signal
//! around sample `i * hop`. Voicing-dependent descriptors are exactly zero on
//! unvoiced frames and every logarithm is taken after a `1e-10` floor.

mod formants;
mod pitch;
mod spectral;

pub use formants::{extract_formants, FormantFrame, LPC_ORDER, PRE_EMPHASIS};
pub use pitch::{
    extract_f0, extract_perturbation, semitone, VoicingTrack, F0_MAX_HZ, F0_MIN_HZ,
    SEMITONE_REF_HZ, VOICING_THRESHOLD,
};
pub use spectral::{
    extract_loudness, extract_mfcc, extract_spectral, SpectralColumns, N_MEL_BANDS,
};

use crate::audio::Waveform;
use crate::dsp::{stft, FrameSpec};
use crate::error::Result;
use crate::features::{col, AcousticParamMatrix, NUM_PARAMS};

/// Floor applied to energies and magnitudes before any logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

pub(crate) fn db10(x: f64) -> f64 {
    10.0 * x.max(LOG_FLOOR).log10()
}

pub(crate) fn db20(x: f64) -> f64 {
    20.0 * x.max(LOG_FLOOR).log10()
}

/// Computes all 25 descriptors in canonical column order.
pub fn extract_all(w: &Waveform, spec: &FrameSpec) -> Result<AcousticParamMatrix> {
    let spect = stft(w, spec)?;
    let voicing = extract_f0(w, spec)?;
    let (jitter, shimmer) = extract_perturbation(w, &voicing)?;
    let loudness = extract_loudness(&spect)?;
    let spectral = extract_spectral(&spect, &voicing)?;
    let mfcc = extract_mfcc(&spect)?;
    let formant_frames = formants::formants_with_spectrogram(w, &spect, &voicing)?;

    let values = (0..spect.n_frames())
        .map(|i| {
            let mut row = [0.0; NUM_PARAMS];
            row[col::F0_SEMITONE] = semitone(voicing.f0_hz[i]);
            row[col::JITTER] = jitter[i];
            row[col::SHIMMER] = shimmer[i];
            row[col::LOUDNESS] = loudness[i];
            row[col::HNR] = spectral.hnr[i];
            row[col::ALPHA_RATIO] = spectral.alpha_ratio[i];
            row[col::HAMMARBERG] = spectral.hammarberg[i];
            row[col::SLOPE_0_500] = spectral.slope_0_500[i];
            row[col::SLOPE_500_1500] = spectral.slope_500_1500[i];
            row[col::SPECTRAL_FLUX] = spectral.flux[i];
            row[col::MFCC1..col::MFCC1 + 4].copy_from_slice(&mfcc[i]);
            for k in 0..3 {
                let base = col::formant_freq(k);
                row[base] = formant_frames[i].freq[k];
                row[base + 1] = formant_frames[i].bw[k];
                row[base + 2] = formant_frames[i].ampl[k];
            }
            row[col::H1_H2] = spectral.h1_h2[i];
            row[col::H1_A3] = spectral.h1_a3[i];
            if !voicing.voiced[i] {
                for c in col::VOICING_GATED {
                    row[c] = 0.0;
                }
            }
            row
        })
        .collect();
    AcousticParamMatrix::new(values, *spec)
}
