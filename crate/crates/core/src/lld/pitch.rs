//! Autocorrelation pitch tracking and cycle-to-cycle perturbation.

use crate::audio::Waveform;
use crate::dsp::{frame_samples, FrameSpec};
use crate::error::Result;

pub const F0_MIN_HZ: f64 = 55.0;
pub const F0_MAX_HZ: f64 = 600.0;
/// Frames whose normalized autocorrelation peak falls below this are unvoiced.
pub const VOICING_THRESHOLD: f64 = 0.45;
pub const SEMITONE_REF_HZ: f64 = 27.5;
/// Mean-square level below which a frame is treated as silence.
const SILENCE_POWER: f64 = 1e-10;
/// Candidate peaks within this fraction of the best one win if they come at a shorter lag.
const OCTAVE_TOLERANCE: f64 = 0.9;
const MIN_PERIODS: usize = 3;

/// Per-frame pitch and voicing decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct VoicingTrack {
    /// 0 on unvoiced frames, otherwise within `[F0_MIN_HZ, F0_MAX_HZ]`.
    pub f0_hz: Vec<f64>,
    pub voiced: Vec<bool>,
    /// Normalized autocorrelation peak, clamped to `[0, 1]`.
    pub confidence: Vec<f64>,
    pub frame_spec: FrameSpec,
    pub sample_rate_hz: u32,
}

impl VoicingTrack {
    pub fn n_frames(&self) -> usize {
        self.f0_hz.len()
    }
}

/// F0 in semitones above 27.5 Hz; 0 for unvoiced (`f0 <= 0`).
pub fn semitone(f0_hz: f64) -> f64 {
    if f0_hz > 0.0 {
        12.0 * (f0_hz / SEMITONE_REF_HZ).log2()
    } else {
        0.0
    }
}

fn remove_mean(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

/// Normalized cross-correlation between `x[..n-lag]` and `x[lag..]`.
fn nccf(x: &[f64], lag: usize) -> f64 {
    let n = x.len() - lag;
    let (head, tail) = (&x[..n], &x[lag..]);
    let cross: f64 = head.iter().zip(tail).map(|(a, b)| a * b).sum();
    let e0: f64 = head.iter().map(|a| a * a).sum();
    let e1: f64 = tail.iter().map(|a| a * a).sum();
    let denom = (e0 * e1).sqrt();
    if denom > 0.0 {
        cross / denom
    } else {
        0.0
    }
}

/// Vertex of the parabola through `(−1, a), (0, b), (1, c)`: (offset, value).
pub(crate) fn parabolic_peak(a: f64, b: f64, c: f64) -> (f64, f64) {
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 || !denom.is_finite() {
        return (0.0, b);
    }
    let offset = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    (offset, b - 0.25 * (a - c) * offset)
}

struct PitchEstimate {
    f0_hz: f64,
    peak: f64,
}

fn frame_pitch(frame: &[f64], sr: f64) -> PitchEstimate {
    let unvoiced = |peak: f64| PitchEstimate { f0_hz: 0.0, peak };
    let power = frame.iter().map(|v| v * v).sum::<f64>() / frame.len() as f64;
    if power < SILENCE_POWER {
        return unvoiced(0.0);
    }
    let min_lag = (sr / F0_MAX_HZ).floor().max(2.0) as usize;
    let max_lag = ((sr / F0_MIN_HZ).ceil() as usize + 1).min(frame.len() * 3 / 4);
    if max_lag <= min_lag + 1 {
        return unvoiced(0.0);
    }
    let r: Vec<f64> = (min_lag - 1..=max_lag + 1).map(|lag| nccf(frame, lag)).collect();
    // local maxima of the NCCF, as (interpolated lag, interpolated value)
    let peaks: Vec<(f64, f64)> = (1..r.len() - 1)
        .filter(|&j| r[j] > r[j - 1] && r[j] >= r[j + 1] && r[j] > 0.0)
        .map(|j| {
            let (off, val) = parabolic_peak(r[j - 1], r[j], r[j + 1]);
            ((min_lag - 1 + j) as f64 + off, val.min(1.0))
        })
        .collect();
    let Some(best) = peaks.iter().map(|p| p.1).reduce(f64::max) else {
        return unvoiced(0.0);
    };
    let (lag, peak) = *peaks
        .iter()
        .find(|p| p.1 >= OCTAVE_TOLERANCE * best)
        .expect("best peak satisfies its own tolerance");
    let peak = peak.clamp(0.0, 1.0);
    let f0 = sr / lag;
    if peak < VOICING_THRESHOLD || !(F0_MIN_HZ..=F0_MAX_HZ).contains(&f0) {
        return unvoiced(peak);
    }
    PitchEstimate { f0_hz: f0, peak }
}

/// Autocorrelation pitch per frame over 55–600 Hz.
pub fn extract_f0(w: &Waveform, spec: &FrameSpec) -> Result<VoicingTrack> {
    spec.validate()?;
    if w.is_empty() {
        return Err(crate::PaapError::arg("cannot track pitch of an empty waveform"));
    }
    let sr = w.sample_rate_hz as f64;
    let n = spec.n_frames(w.len());
    let mut track = VoicingTrack {
        f0_hz: Vec::with_capacity(n),
        voiced: Vec::with_capacity(n),
        confidence: Vec::with_capacity(n),
        frame_spec: *spec,
        sample_rate_hz: w.sample_rate_hz,
    };
    for i in 0..n {
        let mut frame = frame_samples(&w.samples, spec, i);
        remove_mean(&mut frame);
        let est = frame_pitch(&frame, sr);
        track.voiced.push(est.f0_hz > 0.0);
        track.f0_hz.push(est.f0_hz);
        track.confidence.push(est.peak);
    }
    Ok(track)
}

/// Peak times (fractional samples) and amplitudes of successive pitch cycles.
fn cycle_peaks(x: &[f64], period: f64) -> Vec<(f64, f64)> {
    let n = x.len();
    let refine = |i: usize| -> (f64, f64) {
        if i == 0 || i + 1 >= n {
            return (i as f64, x[i]);
        }
        let (off, val) = parabolic_peak(x[i - 1], x[i], x[i + 1]);
        (i as f64 + off, val)
    };
    let argmax = |lo: usize, hi: usize| -> usize {
        (lo..=hi)
            .max_by(|&a, &b| x[a].total_cmp(&x[b]).then(b.cmp(&a)))
            .expect("non-empty search range")
    };
    let interior = |i: usize| i > 0 && i + 1 < n;
    let anchor = argmax(0, n - 1);
    let mut marks = vec![anchor];
    // walk forward, then backward, one period at a time
    let mut cur = anchor as f64;
    loop {
        let lo = (cur + 0.75 * period).ceil() as usize;
        let hi = ((cur + 1.25 * period).floor() as usize).min(n - 1);
        if lo > hi || lo >= n {
            break;
        }
        let next = argmax(lo, hi);
        if !interior(next) {
            break;
        }
        marks.push(next);
        cur = next as f64;
    }
    cur = anchor as f64;
    loop {
        let hi_f = cur - 0.75 * period;
        if hi_f < 0.0 {
            break;
        }
        let lo = (cur - 1.25 * period).ceil().max(0.0) as usize;
        let hi = hi_f.floor() as usize;
        if lo > hi {
            break;
        }
        let prev = argmax(lo, hi);
        if !interior(prev) {
            break;
        }
        marks.push(prev);
        cur = prev as f64;
    }
    marks.sort_unstable();
    marks.into_iter().filter(|&i| interior(i)).map(refine).collect()
}

fn frame_perturbation(frame: &[f64], period: f64) -> (f64, f64) {
    let peaks = cycle_peaks(frame, period);
    if peaks.len() < MIN_PERIODS + 1 {
        return (0.0, 0.0);
    }
    let periods: Vec<f64> = peaks.windows(2).map(|p| p[1].0 - p[0].0).collect();
    let mean_period = periods.iter().sum::<f64>() / periods.len() as f64;
    let jitter = periods
        .windows(2)
        .map(|t| (t[1] - t[0]).abs())
        .sum::<f64>()
        / (periods.len() - 1) as f64
        / mean_period;
    let ratios: Vec<f64> = peaks
        .windows(2)
        .filter(|p| p[0].1 > 0.0 && p[1].1 > 0.0)
        .map(|p| (20.0 * (p[1].1 / p[0].1).log10()).abs())
        .collect();
    let shimmer = if ratios.is_empty() {
        0.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    (jitter, shimmer)
}

/// Local jitter (relative) and local shimmer (dB) per frame; 0 on unvoiced
/// frames and on frames with fewer than three detected pitch periods.
pub fn extract_perturbation(w: &Waveform, v: &VoicingTrack) -> Result<(Vec<f64>, Vec<f64>)> {
    let spec = &v.frame_spec;
    let n = spec.n_frames(w.len());
    if n != v.n_frames() {
        return Err(crate::PaapError::arg(format!(
            "voicing track has {} frames, waveform implies {n}",
            v.n_frames()
        )));
    }
    let sr = w.sample_rate_hz as f64;
    Ok((0..n)
        .map(|i| {
            if !v.voiced[i] {
                return (0.0, 0.0);
            }
            let mut frame = frame_samples(&w.samples, spec, i);
            remove_mean(&mut frame);
            frame_perturbation(&frame, sr / v.f0_hz[i])
        })
        .unzip())
}
