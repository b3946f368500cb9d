//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any fails. Criterion 8 reruns 1–7 and compares the
//! report files byte for byte.

use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use paap_core::analysis::ReportAccumulator;
use paap_core::estimator::network_forward;
use paap_core::features::col;
use paap_core::lld::{extract_formants, extract_perturbation, semitone};
use paap_core::loss::WeightMode;
use paap_core::weights::{BIAS_ROW, N_ROWS};
use paap_core::{
    argmax_phonemes, augment_bias, extract_all, extract_f0, fit_weights, improvement_percent,
    lstm_forward, mae_per_param, mix_at_snr, paap_loss, per_phoneme_improvement, synth,
    to_frame_logits, weights, APWeights, AcousticParamMatrix, Direction, DspBackend,
    EstimatorWeights, FrameSpec, LstmLayer, NeuralBackend, PaapLossConfig, ParamBackend,
    PhonemeLogits, PhonemeVocab, NUM_PARAMS, NUM_PHONEMES, PARAM_NAMES, SAMPLE_RATE_HZ,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit_s: u64, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took <= Duration::from_secs(limit_s), || format!("took {took:.2?}, limit {limit_s} s"))
}

fn spec() -> FrameSpec {
    FrameSpec::default()
}

fn random_matrix(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> AcousticParamMatrix {
    AcousticParamMatrix::new(
        (0..n).map(|_| std::array::from_fn(|_| rng.random_range(lo..hi))).collect(),
        spec(),
    )
    .unwrap()
}

fn logits(values: Vec<[f64; NUM_PHONEMES]>) -> PhonemeLogits {
    PhonemeLogits { values, vocab: PhonemeVocab::default(), frame_spec: spec() }
}

// 1. Regularized least squares against an SVD least-squares oracle.
fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_oracle = 0.0f64;
    let mut worst_truth = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(40..=200);
        let d = random_matrix(n, -1.0, 1.0, &mut rng);
        let y: Vec<[f64; NUM_PHONEMES]> =
            (0..n).map(|_| std::array::from_fn(|_| rng.random_range(-3.0..3.0))).collect();
        let fitted = fit_weights(&[d.clone()], &[logits(y.clone())], 0.0).map_err(|e| e.to_string())?;
        let x = augment_bias(&d);
        let xm = DMatrix::from_fn(n, N_ROWS, |i, j| x[i][j]);
        let ym = DMatrix::from_fn(n, NUM_PHONEMES, |i, j| y[i][j]);
        let oracle = xm.clone().svd(true, true).solve(&ym, 1e-14).map_err(|e| e.to_string())?;
        for r in 0..N_ROWS {
            for c in 0..NUM_PHONEMES {
                worst_oracle = worst_oracle.max((fitted.values[r][c] - oracle[(r, c)]).abs());
            }
        }

        let truth = DMatrix::from_fn(N_ROWS, NUM_PHONEMES, |_, _| rng.random_range(-2.0..2.0));
        let yt = &xm * &truth;
        let yt_rows = (0..n).map(|i| std::array::from_fn(|c| yt[(i, c)])).collect();
        let planted = fit_weights(&[d], &[logits(yt_rows)], 0.0).map_err(|e| e.to_string())?;
        for r in 0..N_ROWS {
            for c in 0..NUM_PHONEMES {
                worst_truth = worst_truth.max((planted.values[r][c] - truth[(r, c)]).abs());
            }
        }
    }
    ensure(worst_oracle <= 1e-8, || format!("oracle max-abs {worst_oracle:e}"))?;
    ensure(worst_truth <= 1e-8, || format!("planted max-abs {worst_truth:e}"))?;
    within(10, start)?;
    Ok(format!("oracle max-abs {worst_oracle:.3e}, planted max-abs {worst_truth:.3e}"))
}

// 2. Loss: worked example, identity, bias row, concatenation.
fn criterion_2() -> Check {
    let start = Instant::now();
    let cfg = PaapLossConfig::default();
    let mut e = [[0.0; NUM_PARAMS]; 2];
    e[0][0] = 1.0;
    e[0][1] = 2.0;
    e[1][1] = 1.0;
    let c = AcousticParamMatrix::new(vec![[0.0; NUM_PARAMS]; 2], spec()).unwrap();
    let e = AcousticParamMatrix::new(e.to_vec(), spec()).unwrap();
    let mut w = APWeights { values: [[0.0; NUM_PHONEMES]; N_ROWS], vocab: PhonemeVocab::default(), ridge_lambda: 0.0 };
    w.values[0][0] = 0.5;
    w.values[1][0] = 0.25;
    w.values[0][1] = 1.0;
    w.values[1][1] = 2.0;
    w.values[BIAS_ROW][0] = 7.0;
    w.values[BIAS_ROW][1] = -3.0;
    let worked = paap_loss(&e, &c, &[0, 1], &w, &cfg).map_err(|e| e.to_string())?;
    ensure(worked == 1.75, || format!("worked example gave {worked}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut rand_w = w.clone();
    for row in rand_w.values.iter_mut() {
        row.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    }
    let mut log = String::new();
    for trial in 0..50 {
        let n1 = rng.random_range(1..40);
        let n2 = rng.random_range(1..40);
        let (e1, c1) = (random_matrix(n1, -5.0, 5.0, &mut rng), random_matrix(n1, -5.0, 5.0, &mut rng));
        let (e2, c2) = (random_matrix(n2, -5.0, 5.0, &mut rng), random_matrix(n2, -5.0, 5.0, &mut rng));
        let i1: Vec<usize> = (0..n1).map(|_| rng.random_range(0..NUM_PHONEMES)).collect();
        let i2: Vec<usize> = (0..n2).map(|_| rng.random_range(0..NUM_PHONEMES)).collect();
        let ident = paap_loss(&e1, &e1, &i1, &rand_w, &cfg).unwrap();
        ensure(ident == 0.0, || format!("trial {trial}: identity loss {ident}"))?;

        let base = paap_loss(&e1, &c1, &i1, &rand_w, &cfg).unwrap();
        let mut bumped = rand_w.clone();
        bumped.values[BIAS_ROW].iter_mut().for_each(|b| *b += rng.random_range(-100.0..100.0));
        let moved = paap_loss(&e1, &c1, &i1, &bumped, &cfg).unwrap();
        ensure(moved.to_bits() == base.to_bits(), || format!("trial {trial}: bias changed {base} -> {moved}"))?;

        let l2 = paap_loss(&e2, &c2, &i2, &rand_w, &cfg).unwrap();
        let cat = paap_loss(
            &AcousticParamMatrix::new([e1.values.clone(), e2.values.clone()].concat(), spec()).unwrap(),
            &AcousticParamMatrix::new([c1.values.clone(), c2.values.clone()].concat(), spec()).unwrap(),
            &[i1.clone(), i2.clone()].concat(),
            &rand_w,
            &cfg,
        )
        .unwrap();
        let weighted = (base * n1 as f64 + l2 * n2 as f64) / (n1 + n2) as f64;
        ensure((cat - weighted).abs() <= 1e-12 * cat.abs().max(1.0), || {
            format!("trial {trial}: concatenated {cat} vs weighted {weighted}")
        })?;
        let _ = writeln!(log, "{base:?} {l2:?} {cat:?}");
    }
    within(1, start)?;
    Ok(format!("worked example = {worked}\n{log}"))
}

// 3. MAE and improvement.
fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut log = String::new();
    for trial in 0..50 {
        let (e, c) = (random_matrix(4, -10.0, 10.0, &mut rng), random_matrix(4, -10.0, 10.0, &mut rng));
        let mae = mae_per_param(&e, &c).map_err(|e| e.to_string())?;
        for k in 0..NUM_PARAMS {
            let mut s = 0.0;
            for i in 0..4 {
                s += (e.values[i][k] - c.values[i][k]).abs();
            }
            let naive = s / 4.0;
            ensure((mae[k] - naive).abs() <= 1e-12, || format!("trial {trial} col {k}: {} vs {naive}", mae[k]))?;
        }
        let _ = writeln!(log, "{:?}", mae[0]);
    }
    let endpoints = [improvement_percent(1.0, 1.0), improvement_percent(1.0, 2.0), improvement_percent(0.0, 2.0)];
    ensure(endpoints == [Some(0.0), Some(50.0), Some(100.0)], || format!("endpoints {endpoints:?}"))?;

    let vocab = PhonemeVocab::default();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(5..120);
        let (e, b, c) = (
            random_matrix(n, -10.0, 10.0, &mut rng),
            random_matrix(n, -10.0, 10.0, &mut rng),
            random_matrix(n, -10.0, 10.0, &mut rng),
        );
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..NUM_PHONEMES)).collect();
        let global = mae_per_param(&e, &c).unwrap();
        let rows = per_phoneme_improvement(&e, &b, &c, &idx, &vocab).unwrap();
        for k in 0..NUM_PARAMS {
            let recomposed: f64 =
                rows.iter().filter_map(|r| r.mae_enhanced[k].map(|m| m * r.frames as f64)).sum::<f64>() / n as f64;
            worst = worst.max((recomposed - global[k]).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("decomposition error {worst:e}"))?;
    Ok(format!("endpoints {endpoints:?}, decomposition max error {worst:.3e}\n{log}"))
}

// 4. Descriptors on analytic signals.
fn criterion_4() -> Check {
    let start = Instant::now();
    let mut log = String::new();
    let sine = synth::sine(440.0, 0.5, 16000, 16000);
    let d = extract_all(&sine, &spec()).map_err(|e| e.to_string())?;
    let n = d.n_frames();
    for (i, row) in d.values.iter().enumerate().take(n - 4).skip(4) {
        ensure((row[col::F0_SEMITONE] - 48.0).abs() <= 0.1, || format!("frame {i}: F0 {}", row[col::F0_SEMITONE]))?;
        ensure(row[col::JITTER] <= 0.005, || format!("frame {i}: jitter {}", row[col::JITTER]))?;
        ensure(row[col::SHIMMER] <= 0.05, || format!("frame {i}: shimmer {}", row[col::SHIMMER]))?;
        ensure(row[col::SPECTRAL_FLUX] <= 1e-4, || format!("frame {i}: flux {}", row[col::SPECTRAL_FLUX]))?;
    }
    let _ = writeln!(log, "sine frame 50: {:?}", d.values[50]);

    let vowel = synth::vowel(&[500.0, 1500.0, 2500.0], 120.0, 0.5, 16000, 4);
    let v = extract_f0(&vowel, &spec()).unwrap();
    let formants = extract_formants(&vowel, &spec(), &v).unwrap();
    for (i, f) in formants.iter().enumerate().take(formants.len() - 4).skip(4) {
        ensure((f.freq[0] - 500.0).abs() <= 50.0, || format!("frame {i}: F1 {}", f.freq[0]))?;
        ensure((f.freq[1] - 1500.0).abs() <= 75.0, || format!("frame {i}: F2 {}", f.freq[1]))?;
    }
    let _ = writeln!(log, "vowel frame 50: {:?}", formants[50]);
    let (jit, _) = extract_perturbation(&sine, &extract_f0(&sine, &spec()).unwrap()).unwrap();
    let _ = writeln!(log, "sine jitter 50: {:?} semitone {:?}", jit[50], semitone(440.0));

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let len = rng.random_range(1..=12000);
        let w = synth::white_noise(0.1, len, rng.random());
        let d = extract_all(&w, &spec()).map_err(|e| e.to_string())?;
        ensure(d.n_frames() == 1 + len / 160, || format!("length {len}: {} frames", d.n_frames()))?;
        let _ = writeln!(log, "{len} {}", d.n_frames());
    }
    within(30, start)?;
    Ok(log)
}

/// Gate-by-gate recurrence written independently of the library.
fn lstm_oracle(x: &[Vec<f64>], l: &LstmLayer) -> Vec<Vec<f64>> {
    let h = l.hidden;
    let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
    let mut hp = vec![0.0; h];
    let mut cp = vec![0.0; h];
    let mut out = Vec::new();
    for xt in x {
        let gate = |g: usize, k: usize, hp: &[f64]| {
            let row = g * h + k;
            let mut z = l.b_ih[row] as f64 + l.b_hh[row] as f64;
            for (c, xv) in xt.iter().enumerate() {
                z += l.w_ih[row * l.input + c] as f64 * xv;
            }
            for (c, hv) in hp.iter().enumerate() {
                z += l.w_hh[row * h + c] as f64 * hv;
            }
            z
        };
        let mut hn = vec![0.0; h];
        let mut cn = vec![0.0; h];
        for k in 0..h {
            cn[k] = sig(gate(1, k, &hp)) * cp[k] + sig(gate(0, k, &hp)) * gate(2, k, &hp).tanh();
            hn[k] = sig(gate(3, k, &hp)) * cn[k].tanh();
        }
        out.push(hn.clone());
        hp = hn;
        cp = cn;
    }
    out
}

// 5. Estimator.
fn criterion_5() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let n = rng.random_range(1..=8);
        let h = rng.random_range(1..=4);
        let input = rng.random_range(1..=6);
        let layer = EstimatorWeights::random(h, input, 1.0, case).layers[0][0].clone();
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..input).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let got = lstm_forward(&x, &layer, Direction::Forward).map_err(|e| e.to_string())?;
        let want = lstm_oracle(&x, &layer);
        for (g, w) in got.iter().flatten().zip(want.iter().flatten()) {
            worst = worst.max((g - w).abs());
        }
    }
    ensure(worst <= 1e-6, || format!("oracle max-abs {worst:e}"))?;

    let mut zero = EstimatorWeights::zeros(8, 5);
    zero.proj_b.iter_mut().enumerate().for_each(|(k, b)| *b = k as f32 - 12.0);
    let x: Vec<Vec<f64>> = (0..6).map(|_| (0..5).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let out = network_forward(&x, &zero).unwrap();
    ensure(
        out.iter().all(|row| row.iter().zip(&zero.proj_b).all(|(a, &b)| *a == b as f64)),
        || "zero network does not output the projection bias".into(),
    )?;

    let neural = NeuralBackend::new(EstimatorWeights::random(32, spec().n_bins(), 0.05, 55), spec()).unwrap();
    let dsp = DspBackend::default();
    let mut log = format!("oracle max-abs {worst:.3e}\n");
    for u in 0..10 {
        let utt = synth::utterance(rng.random_range(0.5..1.0), 500 + u);
        let a = neural.estimate(&utt.waveform).map_err(|e| e.to_string())?;
        let b = dsp.estimate(&utt.waveform).map_err(|e| e.to_string())?;
        ensure(a.n_frames() == b.n_frames() && a.param_names() == b.param_names(), || {
            format!("utterance {u}: neural {} frames, dsp {}", a.n_frames(), b.n_frames())
        })?;
        let _ = writeln!(log, "{u} {} {:?}", a.n_frames(), a.values[0][0]);
    }
    within(20, start)?;
    Ok(log)
}

// 6. SNR mixing.
fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut log = String::new();
    for _ in 0..50 {
        let n = rng.random_range(800..16000);
        let clean = synth::utterance(n as f64 / 16000.0 + 0.25, rng.random()).waveform;
        let noise = synth::white_noise(rng.random_range(0.01..1.0), clean.len() + rng.random_range(0..500), rng.random());
        let snr = rng.random_range(0.0..=40.0);
        let mixed = mix_at_snr(&clean, &noise, snr).map_err(|e| e.to_string())?;
        let p_clean: f64 = clean.samples.iter().map(|v| v * v).sum();
        let p_noise: f64 = mixed.samples.iter().zip(&clean.samples).map(|(m, c)| (m - c) * (m - c)).sum();
        let measured = 10.0 * (p_clean / p_noise).log10();
        worst = worst.max((measured - snr).abs());
        let _ = writeln!(log, "{snr:?} {measured:?}");
    }
    ensure(worst <= 1e-6, || format!("max SNR error {worst:e} dB"))?;
    Ok(format!("max SNR error {worst:.3e} dB\n{log}"))
}

// 7. End to end on a synthetic corpus.
fn criterion_7() -> Check {
    let start = Instant::now();
    let vocab = PhonemeVocab::default();
    let mut clean_d = Vec::new();
    let mut degraded_d = Vec::new();
    let mut targets = Vec::new();
    for u in 0..10u64 {
        let utt = synth::utterance(1.0 + 0.05 * u as f64, 700 + u);
        let noise = synth::noise(utt.waveform.len(), 900 + u);
        let degraded = mix_at_snr(&utt.waveform, &noise, 10.0).map_err(|e| e.to_string())?;
        let dc = extract_all(&utt.waveform, &spec()).map_err(|e| e.to_string())?;
        let db = extract_all(&degraded, &spec()).map_err(|e| e.to_string())?;
        let p = to_frame_logits(&utt.alignment, dc.n_frames(), &spec(), SAMPLE_RATE_HZ).map_err(|e| e.to_string())?;
        clean_d.push(dc);
        degraded_d.push(db);
        targets.push(p);
    }
    let w = fit_weights(&clean_d, &targets, weights::DEFAULT_RIDGE_LAMBDA).map_err(|e| e.to_string())?;
    let literal = PaapLossConfig::default();
    let absolute = PaapLossConfig { weight_mode: WeightMode::Absolute, ..literal };
    let mut positive_literal = 0;
    let mut positive_absolute = 0;
    let mut log = String::new();
    let mut acc = ReportAccumulator::new(vocab.len());
    for u in 0..10 {
        let idx = argmax_phonemes(&targets[u]);
        let ident = paap_loss(&clean_d[u], &clean_d[u], &idx, &w, &literal).unwrap();
        ensure(ident == 0.0, || format!("utterance {u}: loss(clean, clean) = {ident}"))?;
        let l = paap_loss(&degraded_d[u], &clean_d[u], &idx, &w, &literal).unwrap();
        let a = paap_loss(&degraded_d[u], &clean_d[u], &idx, &w, &absolute).unwrap();
        positive_literal += usize::from(l > 0.0);
        positive_absolute += usize::from(a > 0.0);
        let _ = writeln!(log, "utterance {u}: literal {l:?} absolute {a:?}");
        acc.add(&clean_d[u], &degraded_d[u], &clean_d[u], &idx).unwrap();
    }
    ensure(positive_literal >= 9, || format!("literal loss > 0 on {positive_literal}/10"))?;
    ensure(positive_absolute == 10, || format!("absolute loss > 0 on {positive_absolute}/10"))?;

    let report = acc.finish(&vocab).map_err(|e| e.to_string())?;
    let mut measured = 0;
    let mut zero_baseline = 0;
    for row in report.phonemes.iter().filter(|r| r.frames > 0) {
        for k in 0..NUM_PARAMS {
            match row.improvement[k] {
                Some(v) => {
                    ensure(v == 100.0, || format!("{} {}: {v}%", row.phoneme, PARAM_NAMES[k]))?;
                    measured += 1;
                }
                None => {
                    ensure(row.mae_baseline[k] == Some(0.0), || {
                        format!("{} {}: missing improvement", row.phoneme, PARAM_NAMES[k])
                    })?;
                    zero_baseline += 1;
                }
            }
        }
    }
    within(60, start)?;
    let _ = writeln!(log, "{}", report.to_json());
    Ok(format!(
        "literal {positive_literal}/10, absolute {positive_absolute}/10, {measured} cells at 100%, \
         {zero_baseline} cells with zero baseline error\n{log}"
    ))
}

type Criterion = (&'static str, fn() -> Check);

const CRITERIA: [Criterion; 7] = [
    ("least-squares weights match oracle and planted weights", criterion_1),
    ("loss worked example, identity, bias invariance, additivity", criterion_2),
    ("MAE oracle, improvement endpoints, per-phoneme decomposition", criterion_3),
    ("descriptors on analytic signals and frame counts", criterion_4),
    ("estimator oracle, zero network, backend shapes", criterion_5),
    ("mixing hits the requested SNR", criterion_6),
    ("end-to-end loss and analysis on a synthetic corpus", criterion_7),
];

fn run(f: fn() -> Check) -> Check {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    }
}

fn summary(detail: &str) -> &str {
    detail.lines().next().unwrap_or("")
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut failed = 0;
    let mut first_reports = Vec::new();
    for (i, (name, f)) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        let result = run(*f);
        let took = start.elapsed();
        match &result {
            Ok(detail) => println!("criterion {}: PASS  {name} ({took:.2?}; {})", i + 1, summary(detail)),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({took:.2?}; {why})", i + 1);
            }
        }
        let path = dir.path().join(format!("run1_criterion{}.txt", i + 1));
        let body = result.unwrap_or_else(|e| format!("FAIL {e}"));
        std::fs::write(&path, &body).expect("write report");
        first_reports.push(path);
    }

    let mut mismatched = Vec::new();
    for (i, (_, f)) in CRITERIA.iter().enumerate() {
        let body = run(*f).unwrap_or_else(|e| format!("FAIL {e}"));
        let path = dir.path().join(format!("run2_criterion{}.txt", i + 1));
        std::fs::write(&path, &body).expect("write report");
        if std::fs::read(&path).unwrap() != std::fs::read(&first_reports[i]).unwrap() {
            mismatched.push(i + 1);
        }
    }
    if mismatched.is_empty() {
        println!("criterion 8: PASS  repeated runs give byte-identical reports (7 files)");
    } else {
        failed += 1;
        println!("criterion 8: FAIL  reports differ between runs for criteria {mismatched:?}");
    }

    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 8 acceptance criteria passed");
}
