//! `paap`: extract descriptors, ingest alignments, fit weights, score and analyze.

mod config;
mod error;
mod inputs;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use paap_core::loss::batch_from_sums;
use paap_core::{
    emit_report, fit_weights, mix_at_snr, paap_loss, to_frame_logits, write_wav, APWeights,
    AcousticParamMatrix, PaapError, ParamBackend, ReportAccumulator, ReportFormat, SampleFormat,
    WeightMode, SAMPLE_RATE_HZ,
};
use serde::Serialize;

use config::{Backend, Overrides, RunConfig, CONFIG_ENV};
use error::CliError;
use inputs::{in_utterance, is_wav, load_audio, load_features, load_phonemes, make_backend, match_inputs, par_map};

#[derive(Parser, Debug)]
#[command(name = "paap", version, about = "Phoneme-aligned acoustic parameter toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// TOML or JSON config file; flags override its values.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    hop: Option<usize>,
    #[arg(long, global = true)]
    win: Option<usize>,
    #[arg(long, global = true)]
    fft_size: Option<usize>,
    /// JSON array of 41 phoneme labels replacing the default vocabulary.
    #[arg(long, global = true)]
    vocab: Option<PathBuf>,
}

/// Backend flags for subcommands that may read WAV inputs.
#[derive(Args, Debug)]
struct BackendArgs {
    #[arg(long, value_enum)]
    backend: Option<Backend>,
    /// Estimator weight file for the neural backend.
    #[arg(long)]
    estimator_weights: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-frame descriptors for a WAV file or a directory of them.
    Extract {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        backend: Option<Backend>,
        /// Estimator weight file for the neural backend.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Output format when --in is a directory.
        #[arg(long, value_enum, default_value_t = FeatureFormat::Csv)]
        format: FeatureFormat,
    },
    /// Converts an alignment JSON into a frame-level logits binary.
    AlignIngest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, required_unless_present_any = ["audio", "features"], conflicts_with_all = ["audio", "features"])]
        frames: Option<usize>,
        /// Take the frame count from this WAV file.
        #[arg(long, conflicts_with = "features")]
        audio: Option<PathBuf>,
        /// Take the frame count from this feature file.
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fits acoustic-phonetic weights on clean features and alignments.
    FitWeights {
        /// Directory of clean .wav, .csv or .bin feature files.
        #[arg(long)]
        features: PathBuf,
        /// Directory of .json alignments or .bin logits, matched by file stem.
        #[arg(long)]
        logits: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Phoneme-weighted loss of enhanced against clean speech.
    Loss {
        #[arg(long)]
        enhanced: PathBuf,
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        alignment: PathBuf,
        /// Fitted weight file.
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, value_enum)]
        weight_mode: Option<ModeArg>,
        #[arg(long)]
        aux_scale: Option<f64>,
        /// Corpus value of the enhancement model's own loss, to report the combined objective.
        #[arg(long)]
        original_loss: Option<f64>,
        /// Also write the JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Per-parameter and per-phoneme improvement of enhanced over baseline.
    Analyze {
        #[arg(long)]
        enhanced: PathBuf,
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        alignments: PathBuf,
        /// Report path; `.json` selects JSON, anything else CSV.
        #[arg(long)]
        out: PathBuf,
        /// Directory for bar and scatter plot series.
        #[arg(long)]
        plot_data: Option<PathBuf>,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Mixes clean speech with noise at a target SNR.
    Mix {
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        noise: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        snr_db: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = WavFormat::F32)]
        format: WavFormat,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FeatureFormat {
    Csv,
    Bin,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WavFormat {
    F32,
    Pcm16,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Literal,
    Absolute,
}

impl From<ModeArg> for WeightMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Literal => WeightMode::Literal,
            ModeArg::Absolute => WeightMode::Absolute,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("paap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn overrides(g: &GlobalArgs) -> Overrides {
    Overrides {
        hop: g.hop,
        win: g.win,
        fft_size: g.fft_size,
        vocab: g.vocab.clone(),
        jobs: g.jobs,
        ..Default::default()
    }
}

fn with_backend(mut o: Overrides, b: &BackendArgs) -> Overrides {
    o.backend = b.backend;
    o.estimator_weights = b.estimator_weights.clone();
    o
}

fn run(cli: Cli) -> Result<(), CliError> {
    let base = overrides(&cli.global);
    let config_path = cli.global.config.as_deref();
    match cli.command {
        Command::Extract { input, out, backend, weights, format } => {
            let o = Overrides { backend, estimator_weights: weights, ..base };
            extract(&RunConfig::resolve(config_path, o)?, &input, &out, format)
        }
        Command::AlignIngest { input, frames, audio, features, out } => {
            let cfg = RunConfig::resolve(config_path, base)?;
            align_ingest(&cfg, &input, frames, audio.as_deref(), features.as_deref(), &out)
        }
        Command::FitWeights { features, logits, lambda, out, backend } => {
            let o = Overrides { ridge_lambda: lambda, ..with_backend(base, &backend) };
            fit(&RunConfig::resolve(config_path, o)?, &features, &logits, &out)
        }
        Command::Loss { enhanced, clean, alignment, weights, weight_mode, aux_scale, original_loss, out, backend } => {
            let o = Overrides {
                weight_mode: weight_mode.map(Into::into),
                aux_scale,
                ..with_backend(base, &backend)
            };
            let cfg = RunConfig::resolve(config_path, o)?;
            loss(&cfg, [&enhanced, &clean, &alignment], &weights, original_loss, out.as_deref())
        }
        Command::Analyze { enhanced, baseline, clean, alignments, out, plot_data, backend } => {
            let cfg = RunConfig::resolve(config_path, with_backend(base, &backend))?;
            analyze(&cfg, [&enhanced, &baseline, &clean, &alignments], &out, plot_data.as_deref())
        }
        Command::Mix { clean, noise, snr_db, out, format } => {
            RunConfig::resolve(config_path, base)?;
            mix(&clean, &noise, snr_db, &out, format)
        }
    }
}

fn backend_if_needed(cfg: &RunConfig, paths: &[&Path]) -> Result<Option<Box<dyn ParamBackend>>, CliError> {
    let needs = paths.iter().any(|p| is_wav(p) || p.is_dir());
    if needs {
        make_backend(cfg).map(Some)
    } else {
        Ok(None)
    }
}

fn features_with(
    cfg: &RunConfig,
    backend: &Option<Box<dyn ParamBackend>>,
    path: &Path,
) -> paap_core::Result<AcousticParamMatrix> {
    match backend {
        Some(b) => load_features(path, cfg, b.as_ref()),
        None => AcousticParamMatrix::load(path, cfg.frame),
    }
}

fn extract(cfg: &RunConfig, input: &Path, out: &Path, format: FeatureFormat) -> Result<(), CliError> {
    let backend = make_backend(cfg)?;
    let comment = cfg.digest_comment();
    if input.is_file() {
        let d = backend.estimate(&load_audio(input)?)?;
        return Ok(d.save(out, Some(&comment))?);
    }
    let files: Vec<(String, PathBuf)> = inputs::index_dir(input, &["wav"])?.into_iter().collect();
    std::fs::create_dir_all(out).map_err(|e| PaapError::Io { path: out.to_path_buf(), source: e })?;
    let ext = match format {
        FeatureFormat::Csv => "csv",
        FeatureFormat::Bin => "bin",
    };
    par_map(cfg.jobs, &files, |(stem, path)| {
        let d = backend.estimate(&load_audio(path)?).map_err(|e| in_utterance(stem, e))?;
        d.save(out.join(format!("{stem}.{ext}")), Some(&comment))
    })?;
    Ok(())
}

fn align_ingest(
    cfg: &RunConfig,
    input: &Path,
    frames: Option<usize>,
    audio: Option<&Path>,
    features: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    let n_frames = match (frames, audio, features) {
        (Some(n), _, _) => n,
        (_, Some(a), _) => cfg.frame.n_frames(load_audio(a)?.len()),
        (_, _, Some(f)) => AcousticParamMatrix::load(f, cfg.frame)?.n_frames(),
        _ => unreachable!("clap requires one frame source"),
    };
    let doc = paap_core::parse_alignment(input, &cfg.vocab)?;
    to_frame_logits(&doc, n_frames, &cfg.frame, SAMPLE_RATE_HZ)?.save(out)?;
    Ok(())
}

fn fit(cfg: &RunConfig, features: &Path, logits: &Path, out: &Path) -> Result<(), CliError> {
    let backend = backend_if_needed(cfg, &[features])?;
    let pairs = match_inputs(&[("features", features, false), ("logits", logits, true)])?;
    let loaded = par_map(cfg.jobs, &pairs, |(stem, paths)| {
        let d = features_with(cfg, &backend, &paths[0]).map_err(|e| in_utterance(stem, e))?;
        let p = paap_core::PhonemeLogits::load(&paths[1], &cfg.vocab, cfg.frame, d.n_frames(), SAMPLE_RATE_HZ)
            .map_err(|e| in_utterance(stem, e))?;
        Ok((d, p))
    })?;
    let (d_list, p_list): (Vec<_>, Vec<_>) = loaded.into_iter().unzip();
    let w = fit_weights(&d_list, &p_list, cfg.ridge_lambda)?;
    w.save(out, Some(cfg.digest()))?;
    Ok(())
}

#[derive(Serialize)]
struct UtteranceLoss<'a> {
    name: &'a str,
    frames: usize,
    loss: f64,
}

#[derive(Serialize)]
struct LossOutput<'a> {
    config_digest: &'a str,
    weight_mode: &'static str,
    utterances: Vec<UtteranceLoss<'a>>,
    corpus_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    aux_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    original_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    combined: Option<f64>,
}

fn loss(
    cfg: &RunConfig,
    [enhanced, clean, alignment]: [&PathBuf; 3],
    weights: &Path,
    original_loss: Option<f64>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let w = APWeights::load(weights)?;
    let backend = backend_if_needed(cfg, &[enhanced, clean])?;
    let items = match_inputs(&[("enhanced", enhanced, false), ("clean", clean, false), ("alignment", alignment, true)])?;
    let per_utt = par_map(cfg.jobs, &items, |(stem, paths)| {
        let run = || {
            let d_e = features_with(cfg, &backend, &paths[0])?;
            let d_c = features_with(cfg, &backend, &paths[1])?;
            let idx = load_phonemes(&paths[2], cfg, &w.vocab, d_c.n_frames())?;
            let mean = paap_loss(&d_e, &d_c, &idx, &w, &cfg.loss)?;
            Ok((mean * d_c.n_frames() as f64, d_c.n_frames()))
        };
        run().map_err(|e| in_utterance(stem, e))
    })?;
    let (sums, frames): (Vec<f64>, Vec<usize>) = per_utt.into_iter().unzip();
    let batch = batch_from_sums(&sums, &frames);
    let combined = original_loss.map(|o| cfg.loss.combined(o, batch.corpus_mean));
    let output = LossOutput {
        config_digest: cfg.digest(),
        weight_mode: cfg.loss.weight_mode.as_str(),
        utterances: items
            .iter()
            .zip(&batch.per_utterance)
            .zip(&batch.frames)
            .map(|(((name, _), &loss), &frames)| UtteranceLoss { name, frames, loss })
            .collect(),
        corpus_loss: batch.corpus_mean,
        aux_scale: original_loss.map(|_| cfg.loss.aux_scale),
        original_loss,
        combined,
    };
    let mut text = serde_json::to_string_pretty(&output).expect("loss output serializes");
    text.push('\n');
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(path, &text).map_err(|e| PaapError::Io { path: path.to_path_buf(), source: e })?;
    }
    Ok(())
}

fn analyze(
    cfg: &RunConfig,
    [enhanced, baseline, clean, alignments]: [&PathBuf; 4],
    out: &Path,
    plot_data: Option<&Path>,
) -> Result<(), CliError> {
    let backend = backend_if_needed(cfg, &[enhanced, baseline, clean])?;
    let items = match_inputs(&[
        ("enhanced", enhanced, false),
        ("baseline", baseline, false),
        ("clean", clean, false),
        ("alignments", alignments, true),
    ])?;
    let loaded = par_map(cfg.jobs, &items, |(stem, paths)| {
        let run = || {
            let d_e = features_with(cfg, &backend, &paths[0])?;
            let d_b = features_with(cfg, &backend, &paths[1])?;
            let d_c = features_with(cfg, &backend, &paths[2])?;
            let idx = load_phonemes(&paths[3], cfg, &cfg.vocab, d_c.n_frames())?;
            Ok((d_e, d_b, d_c, idx))
        };
        run().map_err(|e| in_utterance(stem, e))
    })?;
    // Sequential, in stem order, so sums do not depend on the thread count.
    let mut acc = ReportAccumulator::new(cfg.vocab.len());
    for ((stem, _), (d_e, d_b, d_c, idx)) in items.iter().zip(&loaded) {
        acc.add(d_e, d_b, d_c, idx).map_err(|e| in_utterance(stem, e))?;
    }
    let mut report = acc.finish(&cfg.vocab)?;
    report.config_digest = Some(cfg.digest().to_string());
    emit_report(&report, out, ReportFormat::from_path(out))?;
    if let Some(dir) = plot_data {
        report.write_plot_data(dir)?;
    }
    Ok(())
}

fn mix(clean: &Path, noise: &Path, snr_db: f64, out: &Path, format: WavFormat) -> Result<(), CliError> {
    let mixed = mix_at_snr(&load_audio(clean)?, &load_audio(noise)?, snr_db)?;
    let format = match format {
        WavFormat::F32 => SampleFormat::Float32,
        WavFormat::Pcm16 => SampleFormat::Pcm16,
    };
    write_wav(out, &mixed, format)?;
    Ok(())
}
