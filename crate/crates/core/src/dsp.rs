//! Shared numerical primitives: framing, STFT, mel filterbank, linear
//! prediction and the DCT.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio::Waveform;
use crate::error::{PaapError, Result};

/// Framing parameters. The analysis window is always a periodic Hann window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub hop: usize,
    pub win: usize,
    pub fft_size: usize,
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec {
            hop: 160,
            win: 512,
            fft_size: 512,
        }
    }
}

impl FrameSpec {
    pub fn new(hop: usize, win: usize, fft_size: usize) -> Result<Self> {
        let spec = FrameSpec { hop, win, fft_size };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hop == 0 || self.hop > self.win || self.win > self.fft_size {
            return Err(PaapError::arg(format!(
                "frame spec requires 0 < hop <= win <= fft_size, got hop={} win={} fft_size={}",
                self.hop, self.win, self.fft_size
            )));
        }
        Ok(())
    }

    /// Number of frames for a signal of `len` samples under center padding.
    pub fn n_frames(&self, len: usize) -> usize {
        1 + len / self.hop
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Center frequency in Hz of FFT bin `k`.
    pub fn bin_hz(&self, k: usize, sample_rate_hz: u32) -> f64 {
        k as f64 * sample_rate_hz as f64 / self.fft_size as f64
    }

    /// Periodic Hann window of length `win`.
    pub fn window(&self) -> Vec<f64> {
        hann(self.win)
    }
}

pub(crate) fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Index into a signal of length `len` under repeated reflection (edge not repeated).
fn reflect_index(j: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = j.rem_euclid(period);
    if m < len as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Raw (unwindowed) samples of frame `i`, centered at sample `i * hop`.
pub(crate) fn frame_samples(x: &[f64], spec: &FrameSpec, i: usize) -> Vec<f64> {
    let start = (i * spec.hop) as isize - (spec.win / 2) as isize;
    (0..spec.win)
        .map(|k| x[reflect_index(start + k as isize, x.len())])
        .collect()
}

/// Magnitude spectrogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    /// `n_frames` rows of `fft_size / 2 + 1` magnitudes.
    pub frames: Vec<Vec<f64>>,
    pub spec: FrameSpec,
    pub sample_rate_hz: u32,
}

impl Spectrogram {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn bin_hz(&self, k: usize) -> f64 {
        self.spec.bin_hz(k, self.sample_rate_hz)
    }

    /// Inclusive bin range whose center frequencies fall in `[lo_hz, hi_hz]`.
    pub(crate) fn bin_range(&self, lo_hz: f64, hi_hz: f64) -> std::ops::RangeInclusive<usize> {
        let df = self.sample_rate_hz as f64 / self.spec.fft_size as f64;
        let last = self.spec.n_bins() - 1;
        let lo = ((lo_hz / df).ceil().max(0.0) as usize).min(last);
        let hi = ((hi_hz / df).floor().max(0.0) as usize).min(last);
        lo..=hi
    }
}

/// Short-time Fourier transform magnitudes with reflect center padding.
pub fn stft(w: &Waveform, spec: &FrameSpec) -> Result<Spectrogram> {
    spec.validate()?;
    if w.is_empty() {
        return Err(PaapError::arg("cannot take the STFT of an empty waveform"));
    }
    let window = spec.window();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(spec.fft_size);
    let n_bins = spec.n_bins();
    let mut buf = vec![Complex::new(0.0, 0.0); spec.fft_size];
    let frames = (0..spec.n_frames(w.len()))
        .map(|i| {
            let raw = frame_samples(&w.samples, spec, i);
            buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            for (k, (s, h)) in raw.iter().zip(&window).enumerate() {
                buf[k] = Complex::new(s * h, 0.0);
            }
            fft.process(&mut buf);
            buf[..n_bins].iter().map(|c| c.norm()).collect()
        })
        .collect();
    Ok(Spectrogram {
        frames,
        spec: *spec,
        sample_rate_hz: w.sample_rate_hz,
    })
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters equally spaced on the mel scale, `n_mels` rows by
/// `fft_size / 2 + 1` columns. Each triangle peaks at 1.
pub fn mel_filterbank(
    n_mels: usize,
    fmin_hz: f64,
    fmax_hz: f64,
    spec: &FrameSpec,
    sr: u32,
) -> Result<Vec<Vec<f64>>> {
    if n_mels == 0 {
        return Err(PaapError::arg("n_mels must be at least 1"));
    }
    let nyquist = sr as f64 / 2.0;
    if !(fmin_hz >= 0.0 && fmin_hz < fmax_hz && fmax_hz <= nyquist) {
        return Err(PaapError::arg(format!(
            "mel band edges must satisfy 0 <= fmin < fmax <= {nyquist}, got [{fmin_hz}, {fmax_hz}]"
        )));
    }
    let (mel_lo, mel_hi) = (hz_to_mel(fmin_hz), hz_to_mel(fmax_hz));
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bins: Vec<f64> = (0..spec.n_bins()).map(|k| spec.bin_hz(k, sr)).collect();
    Ok((0..n_mels)
        .map(|m| {
            let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
            bins.iter()
                .map(|&f| {
                    if f > left && f <= center {
                        (f - left) / (center - left)
                    } else if f > center && f < right {
                        (right - f) / (right - center)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect())
}

/// Result of the Levinson-Durbin recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct LpcSolution {
    /// Predictor coefficients `a` with `x[n] ~ sum_k a[k] x[n-1-k]`. Always
    /// `p` long; orders past a truncation point are zero.
    pub coeffs: Vec<f64>,
    /// Final prediction-error energy.
    pub gain: f64,
    pub reflection: Vec<f64>,
    /// Set when the recursion stopped early because a reflection coefficient
    /// reached `|k| >= 1` or became non-finite; holds the last stable order.
    pub truncated_at: Option<usize>,
}

/// Solves the order-`p` Toeplitz normal equations from `p + 1` autocorrelation lags.
pub fn levinson_durbin(autocorr: &[f64]) -> Result<LpcSolution> {
    let r0 = *autocorr
        .first()
        .ok_or_else(|| PaapError::arg("autocorrelation must have at least one lag"))?;
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(PaapError::DegenerateSignal(format!(
            "zero-lag autocorrelation must be positive, got {r0}"
        )));
    }
    let p = autocorr.len() - 1;
    let mut a = vec![0.0; p];
    let mut prev = vec![0.0; p];
    let mut reflection = Vec::with_capacity(p);
    let mut err = r0;
    let mut truncated_at = None;
    for i in 0..p {
        let acc = autocorr[i + 1] - (0..i).map(|j| a[j] * autocorr[i - j]).sum::<f64>();
        let k = acc / err;
        if !k.is_finite() || k.abs() >= 1.0 {
            truncated_at = Some(i);
            break;
        }
        prev[..i].copy_from_slice(&a[..i]);
        for j in 0..i {
            a[j] = prev[j] - k * prev[i - 1 - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        reflection.push(k);
    }
    Ok(LpcSolution {
        coeffs: a,
        gain: err,
        reflection,
        truncated_at,
    })
}

/// Orthonormal DCT-II, first `n_out` coefficients. Computed through a
/// length-`2n` FFT of the mirrored input.
pub fn dct2(x: &[f64], n_out: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if n == 0 || n_out == 0 || n_out > n {
        return Err(PaapError::arg(format!(
            "dct2 needs 1 <= n_out <= n, got n={n} n_out={n_out}"
        )));
    }
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .chain(x.iter().rev())
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    FftPlanner::<f64>::new()
        .plan_fft_forward(2 * n)
        .process(&mut buf);
    let nf = n as f64;
    Ok((0..n_out)
        .map(|k| {
            let twiddle = Complex::from_polar(1.0, -PI * k as f64 / (2.0 * nf));
            let sum = (twiddle * buf[k]).re / 2.0;
            let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            scale * sum
        })
        .collect())
}

/// Biased autocorrelation `r[k] = sum_n x[n] x[n + k]` for `k = 0..=max_lag`.
pub(crate) fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|k| {
            if k >= x.len() {
                0.0
            } else {
                x[..x.len() - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn sine(freq: f64, n: usize) -> Waveform {
        Waveform::new(
            (0..n)
                .map(|i| (2.0 * PI * freq * i as f64 / 16000.0).sin())
                .collect(),
            16000,
        )
        .unwrap()
    }

    #[test]
    fn frame_count_follows_center_padding() {
        let spec = FrameSpec::default();
        let s = stft(&sine(100.0, 16000), &spec).unwrap();
        assert_eq!(s.n_frames(), 101);
        assert!(s.frames.iter().all(|f| f.len() == 257));
        let short = stft(&sine(100.0, 3), &spec).unwrap();
        assert_eq!(short.n_frames(), 1);
    }

    #[test]
    fn empty_waveform_is_rejected() {
        let w = Waveform::new(vec![], 16000).unwrap();
        assert!(matches!(stft(&w, &FrameSpec::default()), Err(PaapError::Argument(_))));
    }

    #[test]
    fn zero_signal_has_zero_magnitudes() {
        let w = Waveform::new(vec![0.0; 2000], 16000).unwrap();
        let s = stft(&w, &FrameSpec::default()).unwrap();
        assert!(s.frames.iter().flatten().all(|&m| m == 0.0));
    }

    #[test]
    fn khz_sine_peaks_at_bin_32() {
        // oracle: direct DFT at a few candidate bins
        let w = sine(1000.0, 16000);
        let spec = FrameSpec::default();
        let s = stft(&w, &spec).unwrap();
        let window = spec.window();
        for i in 5..s.n_frames() - 5 {
            let peak = (0..257)
                .max_by(|&a, &b| s.frames[i][a].total_cmp(&s.frames[i][b]))
                .unwrap();
            assert_eq!(peak, 32);
            let raw = frame_samples(&w.samples, &spec, i);
            let direct = |k: usize| {
                let (re, im) = raw.iter().zip(&window).enumerate().fold(
                    (0.0, 0.0),
                    |(re, im), (n, (x, h))| {
                        let ph = -2.0 * PI * (k * n) as f64 / 512.0;
                        (re + x * h * ph.cos(), im + x * h * ph.sin())
                    },
                );
                (re * re + im * im).sqrt()
            };
            for k in [31, 32, 33] {
                assert!((direct(k) - s.frames[i][k]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn parseval_per_frame() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let w = Waveform::new((0..4000).map(|_| rng.random_range(-1.0..1.0)).collect(), 16000)
            .unwrap();
        let spec = FrameSpec::default();
        let s = stft(&w, &spec).unwrap();
        let window = spec.window();
        for (i, mags) in s.frames.iter().enumerate() {
            let energy: f64 = frame_samples(&w.samples, &spec, i)
                .iter()
                .zip(&window)
                .map(|(x, h)| (x * h).powi(2))
                .sum();
            // one-sided spectrum: interior bins stand for two conjugate bins
            let spectral: f64 = mags
                .iter()
                .enumerate()
                .map(|(k, m)| if k == 0 || k == 256 { m * m } else { 2.0 * m * m })
                .sum::<f64>()
                / 512.0;
            assert!((spectral - energy).abs() <= 1e-6 * energy);
        }
    }

    #[test]
    fn silence_prefix_shifts_frames() {
        let spec = FrameSpec::default();
        let w = sine(700.0, 8000);
        let k = 7;
        let mut padded = vec![0.0; k * spec.hop];
        padded.extend_from_slice(&w.samples);
        let a = stft(&w, &spec).unwrap();
        let b = stft(&Waveform::new(padded, 16000).unwrap(), &spec).unwrap();
        for i in 3..a.n_frames() - 3 {
            for (x, y) in a.frames[i].iter().zip(&b.frames[i + k]) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mel_filterbank_covers_band() {
        let spec = FrameSpec::default();
        let fb = mel_filterbank(26, 20.0, 8000.0, &spec, 16000).unwrap();
        assert_eq!(fb.len(), 26);
        for k in 0..257 {
            let f = spec.bin_hz(k, 16000);
            if f > 20.0 && f < 8000.0 {
                assert!(fb.iter().any(|row| row[k] > 0.0), "bin {k} uncovered");
            }
        }
        assert!(fb.iter().flatten().all(|&v| v >= 0.0));
        let centers: Vec<f64> = fb
            .iter()
            .map(|row| {
                let total: f64 = row.iter().sum();
                row.iter().enumerate().map(|(k, v)| spec.bin_hz(k, 16000) * v).sum::<f64>() / total
            })
            .collect();
        assert!(centers.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn single_mel_filter_peaks_at_mel_midpoint() {
        let spec = FrameSpec::new(160, 512, 4096).unwrap();
        let fb = mel_filterbank(1, 100.0, 4000.0, &spec, 16000).unwrap();
        let peak = (0..fb[0].len())
            .max_by(|&a, &b| fb[0][a].total_cmp(&fb[0][b]))
            .unwrap();
        let mid = mel_to_hz((hz_to_mel(100.0) + hz_to_mel(4000.0)) / 2.0);
        assert!((spec.bin_hz(peak, 16000) - mid).abs() <= 16000.0 / 4096.0);
    }

    #[test]
    fn mel_filterbank_rejects_bad_edges() {
        let spec = FrameSpec::default();
        assert!(mel_filterbank(26, 500.0, 100.0, &spec, 16000).is_err());
        assert!(mel_filterbank(26, 0.0, 9000.0, &spec, 16000).is_err());
        assert!(mel_filterbank(0, 0.0, 8000.0, &spec, 16000).is_err());
    }

    #[test]
    fn levinson_on_delta_autocorrelation() {
        let sol = levinson_durbin(&[2.5, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(sol.coeffs, vec![0.0; 3]);
        assert_eq!(sol.gain, 2.5);
        assert!(matches!(levinson_durbin(&[0.0, 1.0]), Err(PaapError::DegenerateSignal(_))));
    }

    #[test]
    fn levinson_recovers_ar1() {
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut x = vec![0.0; 200_000];
        for n in 1..x.len() {
            x[n] = 0.9 * x[n - 1] + noise.sample(&mut rng);
        }
        let sol = levinson_durbin(&autocorrelation(&x, 4)).unwrap();
        assert!((sol.coeffs[0] - 0.9).abs() < 0.01, "{:?}", sol.coeffs);
        assert!(sol.coeffs[1..].iter().all(|c| c.abs() < 0.01));
    }

    #[test]
    fn levinson_truncates_on_unstable_reflection() {
        // r = [1, 1, 1]: perfectly predictable, k1 = 1
        let sol = levinson_durbin(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(sol.truncated_at, Some(0));
        assert_eq!(sol.coeffs, vec![0.0, 0.0]);
    }

    /// Gaussian elimination with partial pivoting on the full Toeplitz system.
    fn toeplitz_solve(r: &[f64]) -> Vec<f64> {
        let p = r.len() - 1;
        let mut m: Vec<Vec<f64>> = (0..p)
            .map(|i| {
                let mut row: Vec<f64> = (0..p).map(|j| r[i.abs_diff(j)]).collect();
                row.push(r[i + 1]);
                row
            })
            .collect();
        for c in 0..p {
            let piv = (c..p).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
            m.swap(c, piv);
            for rr in c + 1..p {
                let f = m[rr][c] / m[c][c];
                for cc in c..=p {
                    m[rr][cc] -= f * m[c][cc];
                }
            }
        }
        let mut a = vec![0.0; p];
        for i in (0..p).rev() {
            let s: f64 = (i + 1..p).map(|j| m[i][j] * a[j]).sum();
            a[i] = (m[i][p] - s) / m[i][i];
        }
        a
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn levinson_matches_direct_solve(seed in any::<u64>(), order in 1usize..13) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = autocorrelation(&x, order);
            let sol = levinson_durbin(&r).unwrap();
            prop_assert!(sol.truncated_at.is_none());
            prop_assert!(sol.gain >= 0.0);
            let direct = toeplitz_solve(&r);
            for (a, b) in sol.coeffs.iter().zip(&direct) {
                prop_assert!((a - b).abs() < 1e-8, "{} vs {}", a, b);
            }
        }
    }

    fn naive_dct(x: &[f64]) -> Vec<f64> {
        let n = x.len() as f64;
        (0..x.len())
            .map(|k| {
                let s: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * (PI * (i as f64 + 0.5) * k as f64 / n).cos())
                    .sum();
                s * if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() }
            })
            .collect()
    }

    #[test]
    fn dct_of_constant_is_dc_only() {
        let y = dct2(&[3.0; 10], 10).unwrap();
        assert!((y[0] - 3.0 * 10f64.sqrt()).abs() < 1e-12);
        assert!(y[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn dct_of_basis_vector_is_indicator() {
        let n = 12;
        for k in 0..n {
            let scale = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            let basis: Vec<f64> = (0..n)
                .map(|i| scale * (PI * (i as f64 + 0.5) * k as f64 / n as f64).cos())
                .collect();
            let y = dct2(&basis, n).unwrap();
            for (j, v) in y.iter().enumerate() {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dct_matches_direct_sum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let x: Vec<f64> = (0..8).map(|_| rng.random_range(-5.0..5.0)).collect();
            let fast = dct2(&x, 8).unwrap();
            for (a, b) in fast.iter().zip(naive_dct(&x)) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        assert!(dct2(&[1.0, 2.0], 3).is_err());
        assert!(dct2(&[], 0).is_err());
    }
}
