//! Deterministic synthetic signals for tests, fixtures and demos.
//!
//! Nothing here is speech; the generators produce signals with known
//! pitch, formants and phoneme timing so the pipeline can be checked
//! against ground truth.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::audio::Waveform;
use crate::phoneme::{AlignmentDoc, Interval, PhonemeVocab, SIL};

const FORMANT_BW_HZ: f64 = 80.0;
/// One-pole lowpass giving the -6 dB/octave tilt of voiced speech.
const SOURCE_TILT: f64 = 0.97;

fn wave(samples: Vec<f64>, sr: u32) -> Waveform {
    Waveform::new(samples, sr).expect("synthesized samples are finite")
}

pub fn sine(freq_hz: f64, amp: f64, n: usize, sr: u32) -> Waveform {
    wave(
        (0..n)
            .map(|i| amp * (2.0 * PI * freq_hz * i as f64 / sr as f64).sin())
            .collect(),
        sr,
    )
}

/// Band-limited sawtooth (harmonic `k` at amplitude `1/k`) at 16 kHz.
pub fn sawtooth(f0_hz: f64, amp: f64, n: usize, sr: u32) -> Waveform {
    let n_harm = ((sr as f64 / 2.0 - 1.0) / f0_hz).floor() as usize;
    wave(
        (0..n)
            .map(|i| {
                let t = i as f64 / sr as f64;
                amp * 2.0 / PI
                    * (1..=n_harm)
                        .map(|k| (2.0 * PI * k as f64 * f0_hz * t).sin() / k as f64)
                        .sum::<f64>()
            })
            .collect(),
        sr,
    )
}

/// Gaussian white noise with standard deviation `std`.
pub fn white_noise(std: f64, n: usize, seed: u64) -> Waveform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Normal::new(0.0, std).expect("positive std");
    wave((0..n).map(|_| dist.sample(&mut rng)).collect(), 16_000)
}

/// Cascade of two-pole resonators at `formants_hz` (80 Hz bandwidth each).
pub fn all_pole(x: &[f64], formants_hz: &[f64], sr: u32) -> Vec<f64> {
    let mut y = x.to_vec();
    for &f in formants_hz {
        let r = (-PI * FORMANT_BW_HZ / sr as f64).exp();
        let a1 = 2.0 * r * (2.0 * PI * f / sr as f64).cos();
        let a2 = -r * r;
        let (mut y1, mut y2) = (0.0, 0.0);
        for s in y.iter_mut() {
            let out = *s + a1 * y1 + a2 * y2;
            y2 = y1;
            y1 = out;
            *s = out;
        }
    }
    y
}

fn tilt(x: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    x.iter()
        .map(|v| {
            prev = v + SOURCE_TILT * prev;
            prev
        })
        .collect()
}

fn peak_normalize(mut x: Vec<f64>, amp: f64) -> Vec<f64> {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        x.iter_mut().for_each(|v| *v *= amp / peak);
    }
    x
}

/// Tilted pulse train at `f0_hz` through the resonator cascade, with a faint
/// (−60 dB) noise floor, scaled to peak `amp`. 16 kHz.
pub fn vowel(formants_hz: &[f64], f0_hz: f64, amp: f64, n: usize, seed: u64) -> Waveform {
    let sr = 16_000;
    let period = sr as f64 / f0_hz;
    let mut x = vec![0.0; n];
    let mut t = 0.0;
    while (t as usize) < n {
        x[t as usize] = 1.0;
        t += period;
    }
    let y = all_pole(&tilt(&x), formants_hz, sr);
    let y = peak_normalize(y, 1.0);
    let floor = white_noise(1e-3, n, seed);
    let mixed = y.iter().zip(&floor.samples).map(|(a, b)| a + b).collect();
    wave(peak_normalize(mixed, amp), sr)
}

/// Tilted white noise through the resonator cascade, scaled to peak `amp`. 16 kHz.
pub fn noise_vowel(formants_hz: &[f64], amp: f64, n: usize, seed: u64) -> Waveform {
    let x = tilt(&white_noise(1.0, n, seed).samples);
    wave(peak_normalize(all_pole(&x, formants_hz, 16_000), amp), 16_000)
}

/// Rough acoustic recipe used for a phoneme segment.
#[derive(Debug, Clone, Copy)]
enum Recipe {
    Silence,
    Vowel([f64; 3]),
    Nasal([f64; 3]),
    Fricative(f64),
    Plosive,
    Aspirate,
}

fn recipe(label: &str) -> Recipe {
    match label {
        "SIL" => Recipe::Silence,
        "IY" => Recipe::Vowel([280.0, 2250.0, 2900.0]),
        "IH" => Recipe::Vowel([400.0, 1900.0, 2550.0]),
        "EH" => Recipe::Vowel([550.0, 1770.0, 2490.0]),
        "AE" => Recipe::Vowel([690.0, 1660.0, 2490.0]),
        "AA" => Recipe::Vowel([710.0, 1100.0, 2540.0]),
        "AO" => Recipe::Vowel([590.0, 880.0, 2540.0]),
        "UH" => Recipe::Vowel([450.0, 1030.0, 2380.0]),
        "UW" => Recipe::Vowel([310.0, 870.0, 2250.0]),
        "AH" => Recipe::Vowel([620.0, 1200.0, 2550.0]),
        "ER" => Recipe::Vowel([490.0, 1350.0, 1690.0]),
        "EY" | "AY" | "OY" | "AW" | "OW" => Recipe::Vowel([520.0, 1400.0, 2500.0]),
        "M" | "N" | "NG" | "L" | "R" | "W" | "Y" => Recipe::Nasal([280.0, 1300.0, 2600.0]),
        "S" | "Z" => Recipe::Fricative(5000.0),
        "SH" | "ZH" | "CH" | "JH" => Recipe::Fricative(2800.0),
        "F" | "V" | "TH" | "DH" => Recipe::Fricative(4000.0),
        "HH" => Recipe::Aspirate,
        _ => Recipe::Plosive,
    }
}

/// A synthetic utterance with its ground-truth phoneme intervals.
#[derive(Debug, Clone)]
pub struct Utterance {
    pub waveform: Waveform,
    pub alignment: AlignmentDoc,
}

/// Builds a random utterance of roughly `duration_s` seconds: silence at
/// both ends with a random phoneme sequence in between. 16 kHz.
pub fn utterance(duration_s: f64, seed: u64) -> Utterance {
    let sr = 16_000u32;
    let vocab = PhonemeVocab::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = (duration_s * sr as f64).round() as usize;
    let f0 = rng.random_range(95.0..220.0);
    let lead = rng.random_range(1600..3200);
    let tail = rng.random_range(1600..3200);

    let mut samples = vec![0.0; lead];
    let mut intervals = vec![Interval::new(SIL, 0.0, lead as f64 / sr as f64)];
    while samples.len() + tail < total {
        let label = vocab.label(rng.random_range(0..vocab.len() - 1)).to_string();
        let len = rng.random_range(960..2400).min(total - tail - samples.len());
        let seg_seed = rng.random();
        let seg = match recipe(&label) {
            Recipe::Silence => vec![0.0; len],
            Recipe::Vowel(f) => vowel(&f, f0, 0.6, len, seg_seed).samples,
            Recipe::Nasal(f) => vowel(&f, f0, 0.3, len, seg_seed).samples,
            Recipe::Fricative(center) => {
                let x = white_noise(1.0, len, seg_seed).samples;
                peak_normalize(all_pole(&x, &[center], sr), 0.2)
            }
            Recipe::Aspirate => peak_normalize(white_noise(1.0, len, seg_seed).samples, 0.1),
            Recipe::Plosive => {
                let closure = len / 2;
                let mut seg = vec![0.0; closure];
                let burst = white_noise(1.0, len - closure, seg_seed).samples;
                let decay = (len - closure) as f64 / 4.0;
                seg.extend(burst.iter().enumerate().map(|(n, v)| 0.5 * v * (-(n as f64) / decay).exp()));
                seg
            }
        };
        let start = samples.len() as f64 / sr as f64;
        samples.extend(seg);
        intervals.push(Interval::new(&label, start, samples.len() as f64 / sr as f64));
    }
    let start = samples.len() as f64 / sr as f64;
    samples.resize(total, 0.0);
    intervals.push(Interval::new(SIL, start, total as f64 / sr as f64));
    let samples = peak_normalize(samples, 0.8);
    Utterance {
        waveform: wave(samples, sr),
        alignment: AlignmentDoc::from_intervals(intervals, vocab, sr)
            .expect("synthesized intervals are valid"),
    }
}

/// Stationary babble-like noise for mixing: filtered white noise with a
/// slow amplitude modulation. 16 kHz.
pub fn noise(n: usize, seed: u64) -> Waveform {
    let x = white_noise(1.0, n, seed).samples;
    let mut y = vec![0.0; n];
    let mut prev = 0.0;
    for (i, v) in x.iter().enumerate() {
        prev = 0.6 * prev + v;
        let env = 1.0 + 0.3 * (2.0 * PI * 3.0 * i as f64 / 16_000.0).sin();
        y[i] = prev * env;
    }
    wave(peak_normalize(y, 0.5), 16_000)
}
