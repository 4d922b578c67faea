//! `train`, `eval`, `spectra`, `lissajous` and `sweep`.
//!
//! Every command returns the text it wants on stdout. Training progress is
//! passed to a callback so the binary can print it as it happens.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use peps_core::encoders::EncoderSpec;
use peps_core::metrics::{psd_slope, radial_psd};
use peps_core::model::{
    check_compatible, score, train_with, Evaluation, LogEntry, MetricReport, Model, ModelCheckpoint, TrainLog,
    INFERENCE_CHUNK,
};
use peps_core::projection::{lissajous_curve, lissajous_gap, LISSAJOUS_TOLERANCE};
use peps_core::signals::{Image, SdfVolume, Signal, TextureSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, SignalSource, TaskKind};
use crate::error::{write, Result};
use crate::io;

/// Checkpoint file name inside a run directory.
pub const CHECKPOINT_FILE: &str = "checkpoint.pepsckpt";
pub const LOG_FILE: &str = "log.csv";
pub const METRICS_FILE: &str = "metrics.csv";

/// Worker threads for inference: `PEPS_THREADS` if set, else the available cores.
pub fn thread_count() -> peps_core::Result<usize> {
    match std::env::var("PEPS_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(peps_core::Error::Config(format!("PEPS_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// [`Model::predict`] with its fixed chunks spread over [`thread_count`] threads.
///
/// Chunk boundaries do not depend on the thread count, so neither do the results.
pub fn predict_parallel(model: &Model, coords: &[f64]) -> peps_core::Result<Vec<f64>> {
    let chunks: Vec<&[f64]> = coords.chunks(INFERENCE_CHUNK * model.dims()).collect();
    let threads = thread_count()?.min(chunks.len());
    if threads <= 1 {
        return model.predict(coords);
    }
    let per = chunks.len().div_ceil(threads);
    let parts: Vec<peps_core::Result<Vec<Vec<f64>>>> = std::thread::scope(|s| {
        let handles: Vec<_> = chunks
            .chunks(per)
            .map(|group| s.spawn(move || group.iter().map(|c| model.predict_chunk(c)).collect()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("inference thread panicked")).collect()
    });
    let mut out = Vec::with_capacity(coords.len() / model.dims() * model.output_dim());
    for part in parts {
        out.extend(part?.into_iter().flatten());
    }
    Ok(out)
}

/// Predict every lattice point of `signal` in parallel and score it.
pub fn evaluate_parallel(model: &Model, signal: &Signal) -> peps_core::Result<Evaluation> {
    check_compatible(model, signal)?;
    let prediction = predict_parallel(model, &signal.lattice())?;
    let report = score(signal, &prediction)?;
    Ok(Evaluation { prediction, report })
}

/// Initialize from the config seed and train.
pub fn fit(cfg: &ExperimentConfig, signal: &Signal, progress: &mut dyn FnMut(&LogEntry)) -> Result<(Model, TrainLog)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let mut model = Model::new(cfg.model.clone(), &mut rng)?;
    let log = train_with(&mut model, signal, &cfg.train, progress, &evaluate_parallel)?;
    Ok((model, log))
}

fn report_text(report: &MetricReport) -> String {
    let mut s = String::new();
    for (name, v) in &report.entries {
        let unit = if *name == "psnr" { " dB" } else { "" };
        let _ = writeln!(s, "{name}: {v:.6}{unit}");
    }
    s
}

/// Result of [`cmd_train`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub log: TrainLog,
    pub checkpoint: PathBuf,
    pub summary: String,
}

/// Train one experiment into `out` (default: the config's output directory).
///
/// Writes the checkpoint, `log.csv` (step, loss, lr, metric) and
/// `metrics.csv`. With `param_count_only` only the summary is produced.
pub fn cmd_train(
    cfg: &ExperimentConfig,
    out: Option<&Path>,
    param_count_only: bool,
    progress: &mut dyn FnMut(&LogEntry),
) -> Result<TrainOutcome> {
    let mut summary = cfg.summary()?;
    let dir = out.unwrap_or(&cfg.output_dir);
    let checkpoint = dir.join(CHECKPOINT_FILE);
    if param_count_only {
        return Ok(TrainOutcome {
            log: TrainLog {
                metric_name: if cfg.task == TaskKind::Sdf { "iou" } else { "psnr" },
                entries: Vec::new(),
                final_report: MetricReport { entries: Vec::new() },
            },
            checkpoint,
            summary,
        });
    }
    let signal = cfg.load_signal()?;
    let (model, log) = fit(cfg, &signal, progress)?;
    io::save_checkpoint(&checkpoint, &ModelCheckpoint::capture(&model, &cfg.train))?;
    write(&dir.join(LOG_FILE), log.to_csv().as_bytes())?;
    write(&dir.join(METRICS_FILE), log.final_report.to_csv().as_bytes())?;
    summary.push_str(&report_text(&log.final_report));
    let _ = writeln!(summary, "wrote {}", dir.display());
    Ok(TrainOutcome { log, checkpoint, summary })
}

fn prediction_image(like: &Image, prediction: &[f64]) -> peps_core::Result<Image> {
    Image::new(like.width(), like.height(), like.channels(), prediction.to_vec())
}

/// Write the reconstruction next to the metrics; returns its path.
fn write_reconstruction(dir: &Path, signal: &Signal, prediction: &[f64]) -> Result<PathBuf> {
    Ok(match signal {
        Signal::Image(img) => {
            let path = dir.join("reconstruction.png");
            io::save_image(&path, &prediction_image(img, prediction)?)?;
            path
        }
        Signal::TextureSet(set) => {
            let stacked = prediction_image(&set.stacked(), prediction)?;
            let mut layers = Vec::new();
            for (i, name) in set.names().iter().enumerate() {
                layers.push((name.clone(), stacked.channel_range(3 * i, 3)?.clamped()));
            }
            let path = dir.join("reconstruction");
            io::save_texture_set(&path, &TextureSet::new(layers)?)?;
            path
        }
        Signal::Sdf(vol) => {
            let path = dir.join("reconstruction.sdfv");
            io::save_volume(&path, &SdfVolume::new(vol.resolution(), prediction.to_vec())?)?;
            path
        }
    })
}

/// Result of [`cmd_eval`].
#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub report: MetricReport,
    pub reconstruction: PathBuf,
    pub summary: String,
}

/// Reconstruct `signal` with a checkpoint and score it.
///
/// `out` defaults to an `eval` directory next to the checkpoint.
pub fn cmd_eval(checkpoint: &Path, signal: &str, out: Option<&Path>) -> Result<EvalOutcome> {
    let model = io::load_checkpoint(checkpoint)?.to_model()?;
    let source = SignalSource::parse(signal, Path::new(""))?;
    let signal = source.load()?;
    let eval = evaluate_parallel(&model, &signal)?;
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => checkpoint.parent().unwrap_or(Path::new(".")).join("eval"),
    };
    write(&dir.join(METRICS_FILE), eval.report.to_csv().as_bytes())?;
    let reconstruction = write_reconstruction(&dir, &signal, &eval.prediction)?;
    let mut summary = report_text(&eval.report);
    let _ = writeln!(summary, "wrote {}", dir.display());
    Ok(EvalOutcome {
        report: eval.report,
        reconstruction,
        summary,
    })
}

/// Result of [`cmd_spectra`].
#[derive(Debug, Clone)]
pub struct SpectraOutcome {
    /// `None` when the spectrum is flat or empty.
    pub alpha: Option<f64>,
    pub file: PathBuf,
    pub summary: String,
    pub warning: Option<String>,
}

/// Radially averaged power spectrum of an image, as `radius power` lines, plus its fitted `alpha`.
pub fn cmd_spectra(image: &str, out: Option<&Path>) -> Result<SpectraOutcome> {
    let source = SignalSource::parse(image, Path::new(""))?;
    let img = match source.load()? {
        Signal::Image(img) => img,
        Signal::TextureSet(set) => set.stacked(),
        Signal::Sdf(_) => return Err(peps_core::Error::Config(format!("`{image}` is a volume, not an image")).into()),
    };
    let spec = radial_psd(&img);
    let file = out.map_or_else(|| PathBuf::from("spectrum.txt"), Path::to_path_buf);
    write(&file, spec.to_text().as_bytes())?;
    let (alpha, warning) = match psd_slope(&spec, None) {
        Ok(a) => (Some(a), None),
        Err(e @ (peps_core::Error::Degenerate(_) | peps_core::Error::Input(_))) => {
            (None, Some(format!("degenerate spectrum, alpha undefined: {e}")))
        }
        Err(e) => return Err(e.into()),
    };
    let mut summary = String::new();
    match alpha {
        Some(a) => {
            let _ = writeln!(summary, "alpha: {a:.4}");
        }
        None => summary.push_str("alpha: undefined\n"),
    }
    let _ = writeln!(summary, "wrote {}", file.display());
    Ok(SpectraOutcome {
        alpha,
        file,
        summary,
        warning,
    })
}

/// Result of [`cmd_lissajous`].
#[derive(Debug, Clone)]
pub struct LissajousOutcome {
    pub file: PathBuf,
    /// Largest gap to the `--compare` point and whether the curves differ.
    pub comparison: Option<(f64, bool)>,
    pub summary: String,
}

/// Sample `(sin(x phi), sin(y phi))` over `[0, phi_max]`, one `sx sy` line per sample.
pub fn cmd_lissajous(
    point: [f64; 2],
    phi_max: f64,
    samples: usize,
    compare: Option<[f64; 2]>,
    out: Option<&Path>,
) -> Result<LissajousOutcome> {
    let curve = lissajous_curve(point, 0.0, phi_max, samples)?;
    let mut text = String::with_capacity(curve.len() * 24);
    for [a, b] in &curve {
        let _ = writeln!(text, "{a} {b}");
    }
    let file = out.map_or_else(|| PathBuf::from("lissajous.txt"), Path::to_path_buf);
    write(&file, text.as_bytes())?;
    let mut summary = String::new();
    let comparison = match compare {
        Some(q) => {
            let gap = lissajous_gap(point, q, phi_max, samples)?;
            let distinct = gap > LISSAJOUS_TOLERANCE;
            let _ = writeln!(summary, "gap: {gap:e}");
            let _ = writeln!(summary, "verdict: {}", if distinct { "distinct" } else { "same curve" });
            Some((gap, distinct))
        }
        None => None,
    };
    let _ = writeln!(summary, "wrote {}", file.display());
    Ok(LissajousOutcome {
        file,
        comparison,
        summary,
    })
}

/// Replace the resolution and/or feature size of the single grid inside `spec`.
pub fn resize_grid(spec: &EncoderSpec, resolution: Option<usize>, feat: Option<usize>) -> peps_core::Result<EncoderSpec> {
    let axes = |r: &[usize]| resolution.map_or_else(|| r.to_vec(), |n| vec![n; r.len()]);
    Ok(match spec {
        EncoderSpec::Grid {
            resolution: r,
            feat_dim,
            boundary,
        } => EncoderSpec::Grid {
            resolution: axes(r),
            feat_dim: feat.unwrap_or(*feat_dim),
            boundary: *boundary,
        },
        EncoderSpec::ConcatGrid { resolution: r, feat_dim } => EncoderSpec::ConcatGrid {
            resolution: axes(r),
            feat_dim: feat.unwrap_or(*feat_dim),
        },
        EncoderSpec::Lpe {
            resolution: r,
            feat_dim,
            local_frequencies,
        } => EncoderSpec::Lpe {
            resolution: axes(r),
            feat_dim: feat.unwrap_or(*feat_dim),
            local_frequencies: *local_frequencies,
        },
        EncoderSpec::Hash {
            resolution: r,
            table_size,
            feat_dim,
        } => EncoderSpec::Hash {
            resolution: axes(r),
            table_size: *table_size,
            feat_dim: feat.unwrap_or(*feat_dim),
        },
        EncoderSpec::Peps {
            inner,
            schedule,
            aggregator,
            include_origin,
        } => EncoderSpec::Peps {
            inner: Box::new(resize_grid(inner, resolution, feat)?),
            schedule: schedule.clone(),
            aggregator: *aggregator,
            include_origin: *include_origin,
        },
        other => {
            return Err(peps_core::Error::Config(format!(
                "sweeps need a single grid encoder, got {}",
                other.kind_name()
            )))
        }
    })
}

/// One trained sweep configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub resolution: Option<usize>,
    pub feat_dim: Option<usize>,
    pub params: usize,
    /// PSNR for images, IoU for volumes.
    pub metric: f64,
}

/// Result of [`cmd_sweep`].
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub metric_name: &'static str,
    pub rows: Vec<SweepRow>,
    pub table: String,
}

/// Train every (resolution, feat_dim) pair and tabulate parameters against quality.
///
/// An empty list keeps the config's value for that axis. The table is also
/// written to `sweep.csv` in `out` (default: the config's output directory).
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    resolutions: &[usize],
    feat_dims: &[usize],
    out: Option<&Path>,
    progress: &mut dyn FnMut(&SweepRow),
) -> Result<SweepOutcome> {
    let signal = cfg.load_signal()?;
    let rs: Vec<Option<usize>> = if resolutions.is_empty() { vec![None] } else { resolutions.iter().map(|&r| Some(r)).collect() };
    let ks: Vec<Option<usize>> = if feat_dims.is_empty() { vec![None] } else { feat_dims.iter().map(|&k| Some(k)).collect() };
    let metric_name = if cfg.task == TaskKind::Sdf { "iou" } else { "psnr" };
    let mut rows = Vec::new();
    for &r in &rs {
        for &k in &ks {
            let mut run = cfg.clone();
            run.model.encoder = resize_grid(&cfg.model.encoder, r, k)?;
            run.model.mlp.input_dim = run.model.encoder.output_dim()?;
            run.model.validate()?;
            let (model, log) = fit(&run, &signal, &mut |_| {})?;
            let row = SweepRow {
                resolution: r,
                feat_dim: k,
                params: model.param_count(),
                metric: log.final_report.headline().1,
            };
            progress(&row);
            rows.push(row);
        }
    }
    let show = |v: Option<usize>| v.map_or_else(|| "-".to_string(), |v| v.to_string());
    let mut table = format!("resolution,feat_dim,params,{metric_name}\n");
    for row in &rows {
        let _ = writeln!(table, "{},{},{},{}", show(row.resolution), show(row.feat_dim), row.params, row.metric);
    }
    let dir = out.unwrap_or(&cfg.output_dir);
    write(&dir.join("sweep.csv"), table.as_bytes())?;
    Ok(SweepOutcome {
        metric_name,
        rows,
        table,
    })
}
