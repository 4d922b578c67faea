//! Experiment configs: `[task]`, `[encoder]`, `[aggregator]`, `[mlp]`, `[train]`, `[output]`.
//!
//! ```text
//! [task]
//! kind = image                      # image | texture_set | sdf
//! signal = builtin:dead-leaves:64   # or a file / directory path
//!
//! [encoder]
//! kind = bi_grid
//! resolution = 16, 16
//! feat_dim = 17
//!
//! [aggregator]                      # optional; wraps the encoder in PEPS
//! kind = pink
//! alpha = 1
//! frequencies = 3
//! ```
//!
//! For an `ntc` encoder the aggregator wraps the fine and coarse grids.
//! Relative signal paths resolve against the config file's directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use peps_core::aggregators::AggregatorKind;
use peps_core::encoders::EncoderSpec;
use peps_core::kv::{Document, Section};
use peps_core::model::{MlpConfig, ModelSpec, TrainConfig};
use peps_core::projection::FrequencySchedule;
use peps_core::signals::procedural::{brownian_field, dead_leaves, white_noise};
use peps_core::signals::{analytic_sdf, SdfShape, Signal, TextureSet};

use crate::error::{read, Error, Result};
use crate::io;
use crate::presets;

/// What is being fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Image,
    TextureSet,
    Sdf,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Image => "image",
            TaskKind::TextureSet => "texture_set",
            TaskKind::Sdf => "sdf",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "image" => TaskKind::Image,
            "texture_set" => TaskKind::TextureSet,
            "sdf" => TaskKind::Sdf,
            _ => return None,
        })
    }
}

/// Generated signals, `builtin:<name>:<size>[:<seed>]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    DeadLeaves,
    WhiteNoise,
    Brownian,
    /// Three generated layers named `albedo`, `height` and `mask`.
    TextureSet,
    Torus,
    Sphere,
    Box,
}

const BUILTINS: [(&str, Builtin); 7] = [
    ("dead-leaves", Builtin::DeadLeaves),
    ("white-noise", Builtin::WhiteNoise),
    ("brownian", Builtin::Brownian),
    ("texture-set", Builtin::TextureSet),
    ("torus", Builtin::Torus),
    ("sphere", Builtin::Sphere),
    ("box", Builtin::Box),
];

impl Builtin {
    fn task(self) -> TaskKind {
        match self {
            Builtin::DeadLeaves | Builtin::WhiteNoise | Builtin::Brownian => TaskKind::Image,
            Builtin::TextureSet => TaskKind::TextureSet,
            Builtin::Torus | Builtin::Sphere | Builtin::Box => TaskKind::Sdf,
        }
    }

    /// Torus: center 0.5, ring 0.3, tube 0.1. Sphere: radius 0.3. Box: half extents 0.25.
    pub fn shape(self) -> Option<SdfShape> {
        let center = [0.5; 3];
        Some(match self {
            Builtin::Torus => SdfShape::Torus {
                center,
                major: 0.3,
                minor: 0.1,
            },
            Builtin::Sphere => SdfShape::Sphere { center, radius: 0.3 },
            Builtin::Box => SdfShape::Box {
                center,
                half_extents: [0.25; 3],
            },
            _ => return None,
        })
    }
}

/// Where the ground truth comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SignalSource {
    Builtin { kind: Builtin, size: usize, seed: u64 },
    /// Image file, `.sdfv` volume or texture-set directory.
    Path(PathBuf),
}

impl SignalSource {
    /// Parse a builtin spec or a path relative to `base`.
    pub fn parse(spec: &str, base: &Path) -> peps_core::Result<Self> {
        let Some(rest) = spec.strip_prefix("builtin:") else {
            return Ok(SignalSource::Path(base.join(spec)));
        };
        let parts: Vec<&str> = rest.split(':').collect();
        let bad = || peps_core::Error::Config(format!("`{spec}`: expected builtin:<name>:<size>[:<seed>]"));
        let (name, size, seed) = match parts.as_slice() {
            [n, s] => (*n, s.parse().map_err(|_| bad())?, 1),
            [n, s, seed] => (*n, s.parse().map_err(|_| bad())?, seed.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        let kind = BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, k)| *k).ok_or_else(|| {
            let names: Vec<&str> = BUILTINS.iter().map(|(n, _)| *n).collect();
            peps_core::Error::Config(format!("unknown builtin signal `{name}`, expected one of {}", names.join(", ")))
        })?;
        if size < 2 {
            return Err(peps_core::Error::Config(format!("`{spec}`: size must be at least 2")));
        }
        Ok(SignalSource::Builtin { kind, size, seed })
    }

    /// Task implied by the source: directories are texture sets, `.sdfv` files volumes.
    pub fn infer_task(&self) -> TaskKind {
        match self {
            SignalSource::Builtin { kind, .. } => kind.task(),
            SignalSource::Path(p) if p.is_dir() => TaskKind::TextureSet,
            SignalSource::Path(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("sdfv")) => TaskKind::Sdf,
            SignalSource::Path(_) => TaskKind::Image,
        }
    }

    /// Values per coordinate, reading only the manifest for texture sets.
    pub fn channels(&self, task: TaskKind) -> Result<usize> {
        Ok(match (self, task) {
            (SignalSource::Path(p), TaskKind::TextureSet) => 3 * io::read_manifest(p)?.len(),
            (_, TaskKind::TextureSet) => 9,
            (_, TaskKind::Image) => 3,
            (_, TaskKind::Sdf) => 1,
        })
    }

    /// Load with the task inferred from the source.
    pub fn load(&self) -> Result<Signal> {
        self.load_as(self.infer_task())
    }

    /// Load a path as `task`; builtins ignore it.
    pub fn load_as(&self, task: TaskKind) -> Result<Signal> {
        let signal = match self {
            SignalSource::Builtin { kind, size, seed } => {
                let (n, s) = (*size, *seed);
                match kind {
                    Builtin::DeadLeaves => Signal::image(dead_leaves(n, s)?)?,
                    Builtin::WhiteNoise => Signal::image(white_noise(n, s)?)?,
                    Builtin::Brownian => Signal::image(brownian_field(n, s)?)?,
                    Builtin::TextureSet => Signal::TextureSet(TextureSet::new(vec![
                        ("albedo".into(), dead_leaves(n, s)?),
                        ("height".into(), brownian_field(n, s + 1)?),
                        ("mask".into(), dead_leaves(n, s + 2)?),
                    ])?),
                    shape => Signal::Sdf(analytic_sdf(shape.shape().expect("volume builtin"), n)?),
                }
            }
            SignalSource::Path(p) => match task {
                TaskKind::TextureSet => Signal::TextureSet(io::load_texture_set(p)?),
                TaskKind::Sdf => Signal::Sdf(io::load_volume(p)?),
                TaskKind::Image => Signal::image(io::load_image(p)?).map_err(|e| Error::in_file(p, e))?,
            },
        };
        Ok(signal)
    }

    /// Spec string, for reports.
    pub fn describe(&self) -> String {
        match self {
            SignalSource::Builtin { kind, size, seed } => {
                let name = BUILTINS.iter().find(|(_, k)| k == kind).map_or("?", |(n, _)| n);
                format!("builtin:{name}:{size}:{seed}")
            }
            SignalSource::Path(p) => p.display().to_string(),
        }
    }
}

/// A full experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Preset name or config file stem.
    pub name: String,
    pub task: TaskKind,
    pub signal: SignalSource,
    /// Divide volume distances by their largest magnitude before training.
    pub normalize_sdf: bool,
    pub model: ModelSpec,
    pub train: TrainConfig,
    pub output_dir: PathBuf,
}

const SECTIONS: [&str; 6] = ["task", "encoder", "aggregator", "mlp", "train", "output"];

fn read_aggregator(s: &Section) -> peps_core::Result<Option<(AggregatorKind, FrequencySchedule, bool)>> {
    let kind = match s.get("kind").unwrap_or("concat") {
        "none" => return Ok(None),
        "concat" => AggregatorKind::Concat,
        "pink" => {
            let alpha: f64 = s.parse_or("alpha", 1.0)?;
            if !(alpha.is_finite() && alpha >= 0.0) {
                return Err(s.error("alpha", "alpha must be finite and non-negative"));
            }
            AggregatorKind::Pink { alpha }
        }
        "sum_all" => AggregatorKind::SumAll,
        "sum_per_frequency" => AggregatorKind::SumPerFrequency,
        other => return Err(s.error("kind", format!("unknown aggregator `{other}`"))),
    };
    let schedule = match s.list::<f64>("phi")? {
        Some(phi) => FrequencySchedule::custom(phi).map_err(|e| s.error("phi", e))?,
        None => FrequencySchedule::power_of_two(s.parse_or("frequencies", 3)?),
    };
    Ok(Some((kind, schedule, s.parse_or("include_origin", true)?)))
}

fn wrap(inner: EncoderSpec, (kind, schedule, include_origin): &(AggregatorKind, FrequencySchedule, bool)) -> EncoderSpec {
    EncoderSpec::Peps {
        inner: Box::new(inner),
        schedule: schedule.clone(),
        aggregator: *kind,
        include_origin: *include_origin,
    }
}

impl ExperimentConfig {
    /// `preset:<name>` or a config file path.
    pub fn load(arg: &str) -> Result<Self> {
        if let Some(name) = arg.strip_prefix("preset:") {
            let text = presets::preset(name).ok_or_else(|| {
                peps_core::Error::Config(format!("unknown preset `{name}`, expected one of {}", presets::NAMES.join(", ")))
            })?;
            return Ok(Self::parse(&text, Path::new("."), name)?);
        }
        let path = Path::new(arg);
        let text = String::from_utf8(read(path)?).map_err(|e| Error::format(path, e.utf8_error().valid_up_to(), "config is not UTF-8"))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let name = path.file_stem().map_or("experiment".into(), |s| s.to_string_lossy().into_owned());
        Self::parse(&text, base, &name).map_err(|e| Error::in_file(path, e))
    }

    /// Parse and validate; every error names its line.
    pub fn parse(text: &str, base: &Path, name: &str) -> peps_core::Result<Self> {
        let doc = Document::parse(text)?;
        let task_sec = doc.require("task")?;
        let kind: String = task_sec.require("kind")?;
        let task = TaskKind::from_name(&kind)
            .ok_or_else(|| task_sec.error("kind", format!("unknown task `{kind}`, expected image, texture_set or sdf")))?;
        let spec: String = task_sec.require("signal")?;
        let signal = SignalSource::parse(&spec, base).map_err(|e| task_sec.error("signal", e))?;
        if matches!(signal, SignalSource::Builtin { .. }) && signal.infer_task() != task {
            return Err(task_sec.error(
                "signal",
                format!("`{spec}` is a {} signal, the task is {kind}", signal.infer_task().name()),
            ));
        }
        let normalize_sdf: bool = task_sec.parse_or("normalize_sdf", false)?;
        if normalize_sdf && task != TaskKind::Sdf {
            return Err(task_sec.error("normalize_sdf", "only applies to sdf tasks"));
        }

        let enc_sec = doc.require("encoder")?;
        let mut encoder = EncoderSpec::read_kv(enc_sec, "")?;
        if encoder.dims() != if task == TaskKind::Sdf { 3 } else { 2 } {
            return Err(enc_sec.error("kind", format!("a {}-d encoder cannot fit a {kind} task", encoder.dims())));
        }
        if let Some(agg_sec) = doc.section("aggregator") {
            if let Some(agg) = read_aggregator(agg_sec)? {
                encoder = match encoder {
                    EncoderSpec::Ntc {
                        fine,
                        coarse,
                        image_size,
                        tiled_frequencies,
                    } => EncoderSpec::Ntc {
                        fine: Box::new(wrap(*fine, &agg)),
                        coarse: Box::new(wrap(*coarse, &agg)),
                        image_size,
                        tiled_frequencies,
                    },
                    other => wrap(other, &agg),
                };
                encoder.validate().map_err(|e| agg_sec.error("kind", e))?;
            }
        }

        let mlp_sec = doc.section("mlp");
        let explicit = match mlp_sec {
            Some(s) => s.parse::<usize>("output_dim")?,
            None => None,
        };
        let channels = match explicit {
            Some(c) => c,
            None => signal.channels(task).map_err(|e| match e {
                Error::Core(c) | Error::File { source: c, .. } => c,
                io => peps_core::Error::Config(format!("cannot count the signal channels: {io}")),
            })?,
        };
        let input_dim = encoder.output_dim()?;
        let mlp = match mlp_sec {
            Some(s) => MlpConfig::read_kv(s, input_dim, Some(channels))?,
            None => MlpConfig::new(input_dim, channels),
        };
        let model = ModelSpec { encoder, mlp };
        model.validate()?;

        let train_sec = doc.require("train")?;
        let train = TrainConfig::read_kv(train_sec)?;
        train.validate().map_err(|e| train_sec.error("batch_size", e))?;

        let output_dir = match doc.section("output") {
            Some(s) => base.join(s.require::<String>("dir")?),
            None => Path::new("runs").join(name),
        };
        doc.check_all_used(&SECTIONS)?;
        Ok(Self {
            name: name.to_string(),
            task,
            signal,
            normalize_sdf,
            model,
            train,
            output_dir,
        })
    }

    /// Load the ground truth, normalizing volumes when asked.
    pub fn load_signal(&self) -> Result<Signal> {
        let signal = self.signal.load_as(self.task)?;
        if signal.channels() != self.model.mlp.output_dim {
            return Err(peps_core::Error::Config(format!(
                "{} has {} channels but [mlp] output_dim is {}",
                self.signal.describe(),
                signal.channels(),
                self.model.mlp.output_dim
            ))
            .into());
        }
        Ok(match signal {
            Signal::Sdf(v) if self.normalize_sdf => {
                let m = v.max_abs();
                if m > 0.0 {
                    Signal::Sdf(v.scaled(1.0 / m)?)
                } else {
                    Signal::Sdf(v)
                }
            }
            s => s,
        })
    }

    /// Encoder, MLP input size and parameter total.
    pub fn summary(&self) -> peps_core::Result<String> {
        let mut s = String::new();
        let enc = &self.model.encoder;
        let mlp = &self.model.mlp;
        let _ = writeln!(s, "experiment: {}", self.name);
        let _ = writeln!(s, "task: {} ({})", self.task.name(), self.signal.describe());
        let _ = writeln!(s, "encoder: {} ({} parameters)", enc.kind_name(), enc.param_count()?);
        let _ = writeln!(
            s,
            "mlp: {} -> {}x{} {} -> {} ({} parameters)",
            mlp.input_dim,
            mlp.hidden_layers,
            mlp.hidden_width,
            mlp.activation.name(),
            mlp.output_dim,
            mlp.param_count()
        );
        let _ = writeln!(s, "mlp input dim: {}", mlp.input_dim);
        let _ = writeln!(s, "parameters: {}", self.model.param_count()?);
        let _ = writeln!(s, "steps: {}", self.train.total_steps());
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[task]\nkind = image\nsignal = builtin:dead-leaves:16\n\n[encoder]\nkind = bi_grid\nresolution = 4, 4\nfeat_dim = 8\n\n[train]\nepochs = 2\nbatches_per_epoch = 3\nbatch_size = 64\n";

    #[test]
    fn pink_aggregator_wraps_the_encoder() {
        let text = format!("{BASE}\n[aggregator]\nkind = pink\nalpha = 1\nfrequencies = 3\n");
        let cfg = ExperimentConfig::parse(&text, Path::new("."), "t").unwrap();
        assert_eq!(cfg.model.mlp.input_dim, 22);
        assert_eq!(cfg.model.mlp.output_dim, 3);
        assert_eq!(cfg.train.total_steps(), 6);
        assert!(cfg.summary().unwrap().contains("mlp input dim: 22"));
    }

    #[test]
    fn errors_name_lines() {
        let text = BASE.replace("feat_dim = 8", "feat_dim = eight");
        let err = ExperimentConfig::parse(&text, Path::new("."), "t").unwrap_err();
        assert!(err.to_string().contains("line 8"), "{err}");
        let err = ExperimentConfig::parse(&format!("{BASE}typo = 1\n"), Path::new("."), "t").unwrap_err();
        assert!(err.to_string().contains("line 14"), "{err}");
        let sdf = BASE.replace("kind = image", "kind = sdf");
        assert!(matches!(ExperimentConfig::parse(&sdf, Path::new("."), "t"), Err(peps_core::Error::Config(_))));
    }

    #[test]
    fn builtin_specs() {
        let s = SignalSource::parse("builtin:torus:8:3", Path::new(".")).unwrap();
        assert_eq!(s.infer_task(), TaskKind::Sdf);
        assert_eq!(s.describe(), "builtin:torus:8:3");
        assert!(SignalSource::parse("builtin:teapot:8", Path::new(".")).is_err());
        assert_eq!(SignalSource::parse("builtin:texture-set:8", Path::new(".")).unwrap().load().unwrap().channels(), 9);
    }
}
