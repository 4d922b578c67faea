use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{evaluate, loss_node, Evaluation, LossKind, MetricReport, Model};
use crate::error::{bail, Result};
use crate::kv::Section;
use crate::numerics::{cosine_lr, Adam, AdamConfig, ParamGroup, Tape};
use crate::signals::{sample_coordinates, Signal};
use crate::Error;

/// Learning-rate schedule over the whole run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    #[allow(missing_docs)]
    Constant,
    /// Cosine decay to `min_factor` times the base rate.
    Cosine {
        #[allow(missing_docs)]
        min_factor: f64,
    },
}

/// Optimization settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    #[allow(missing_docs)]
    pub loss: LossKind,
    /// Rate of the MLP, and of the encoder when `grid_lr` is unset.
    pub base_lr: f64,
    #[allow(missing_docs)]
    pub grid_lr: Option<f64>,
    #[allow(missing_docs)]
    pub schedule: Schedule,
    #[allow(missing_docs)]
    pub batch_size: usize,
    #[allow(missing_docs)]
    pub epochs: usize,
    #[allow(missing_docs)]
    pub batches_per_epoch: usize,
    /// Seeds initialization and batch sampling.
    pub seed: u64,
    /// Full-lattice metric every this many steps; 0 logs it only at the end.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::L1,
            base_lr: 0.01,
            grid_lr: None,
            schedule: Schedule::Constant,
            batch_size: 4096,
            epochs: 1,
            batches_per_epoch: 1000,
            seed: 0,
            log_every: 0,
        }
    }
}

impl TrainConfig {
    /// Optimizer steps in the run.
    pub fn total_steps(&self) -> usize {
        self.epochs * self.batches_per_epoch
    }

    #[allow(missing_docs)]
    pub fn validate(&self) -> Result<()> {
        let rate_ok = |r: f64| r.is_finite() && r > 0.0;
        if !rate_ok(self.base_lr) || !self.grid_lr.is_none_or(rate_ok) {
            bail!(Config, "learning rates must be positive and finite");
        }
        if self.batch_size == 0 || self.epochs == 0 || self.batches_per_epoch == 0 {
            bail!(Config, "batch_size, epochs and batches_per_epoch must be positive");
        }
        if let Schedule::Cosine { min_factor } = self.schedule {
            if !(0.0..=1.0).contains(&min_factor) {
                bail!(Config, "min_factor must lie in [0,1], got {}", min_factor);
            }
        }
        Ok(())
    }

    /// Schedule multiplier at `step`.
    pub fn lr_factor(&self, step: usize) -> Result<f64> {
        match self.schedule {
            Schedule::Constant => Ok(1.0),
            Schedule::Cosine { min_factor } => cosine_lr(step, self.total_steps(), 1.0, min_factor),
        }
    }

    /// Rate for `group` at `step`.
    pub fn lr(&self, group: ParamGroup, step: usize) -> Result<f64> {
        let base = match group {
            ParamGroup::Encoder => self.grid_lr.unwrap_or(self.base_lr),
            ParamGroup::Network => self.base_lr,
        };
        Ok(base * self.lr_factor(step)?)
    }

    #[allow(missing_docs)]
    pub fn write_kv(&self, s: &mut Section) {
        s.set("loss", self.loss.name());
        s.set("lr", self.base_lr);
        if let Some(g) = self.grid_lr {
            s.set("grid_lr", g);
        }
        match self.schedule {
            Schedule::Constant => s.set("schedule", "constant"),
            Schedule::Cosine { min_factor } => {
                s.set("schedule", "cosine");
                s.set("min_factor", min_factor);
            }
        }
        s.set("batch_size", self.batch_size);
        s.set("epochs", self.epochs);
        s.set("batches_per_epoch", self.batches_per_epoch);
        s.set("seed", self.seed);
        s.set("log_every", self.log_every);
    }

    /// Missing keys take the [`Default`] values.
    pub fn read_kv(s: &Section) -> Result<Self> {
        let d = Self::default();
        let loss = match s.get("loss") {
            None => d.loss,
            Some(name) => LossKind::from_name(name).ok_or_else(|| s.error("loss", format!("unknown loss `{name}`")))?,
        };
        let schedule = match s.get("schedule").unwrap_or("constant") {
            "constant" => Schedule::Constant,
            "cosine" => Schedule::Cosine {
                min_factor: s.parse_or("min_factor", 0.0)?,
            },
            other => return Err(s.error("schedule", format!("unknown schedule `{other}`"))),
        };
        let cfg = Self {
            loss,
            base_lr: s.parse_or("lr", d.base_lr)?,
            grid_lr: s.parse("grid_lr")?,
            schedule,
            batch_size: s.parse_or("batch_size", d.batch_size)?,
            epochs: s.parse_or("epochs", d.epochs)?,
            batches_per_epoch: s.parse_or("batches_per_epoch", d.batches_per_epoch)?,
            seed: s.parse_or("seed", d.seed)?,
            log_every: s.parse_or("log_every", d.log_every)?,
        };
        cfg.validate().map_err(|e| s.error("lr", e))?;
        Ok(cfg)
    }
}

/// One line of the metric log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    /// Steps completed.
    pub step: usize,
    /// Batch loss of the last step; NaN before any step.
    pub loss: f64,
    /// Base rate used by the last step.
    pub lr: f64,
    /// Full-lattice PSNR or IoU, when computed.
    pub metric: Option<f64>,
}

/// Per-step log and final metrics of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainLog {
    /// `psnr` or `iou`.
    pub metric_name: &'static str,
    #[allow(missing_docs)]
    pub entries: Vec<LogEntry>,
    /// Metrics of the f32-rounded final parameters.
    pub final_report: MetricReport,
}

impl TrainLog {
    /// `step,loss,lr,<metric>` lines with a header; missing metrics are blank.
    pub fn to_csv(&self) -> String {
        use core::fmt::Write as _;
        let mut s = format!("step,loss,lr,{}\n", self.metric_name);
        for e in &self.entries {
            let _ = write!(s, "{},{},{},", e.step, e.loss, e.lr);
            if let Some(m) = e.metric {
                let _ = write!(s, "{m}");
            }
            s.push('\n');
        }
        s
    }
}

/// Stream selecting batch coordinates, independent of the initialization stream.
pub(crate) fn batch_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn diverged(model: &Model, step: usize, lr: f64, detail: &str) -> Error {
    let mut norms = [0.0f64; 2];
    for (_, p) in model.store().iter() {
        let i = usize::from(p.group() == ParamGroup::Network);
        norms[i] += p.grad().iter().map(|g| g * g).sum::<f64>();
    }
    Error::Diverged {
        step,
        lr,
        grad_norm: model.store().grad_norm(),
        detail: format!(
            "{detail}; encoder grad norm {}, network grad norm {}",
            libm::sqrt(norms[0]),
            libm::sqrt(norms[1])
        ),
    }
}

/// Fit `model` to `signal` with Adam.
///
/// Each step draws `batch_size` coordinates (pixel centers for images,
/// uniform points for volumes) and interpolates the ground truth there.
/// Every log entry is passed to `on_log` as it is produced. The final
/// parameters are rounded through `f32` before the closing evaluation so
/// the reported metrics match a reloaded checkpoint.
pub fn train(
    model: &mut Model,
    signal: &Signal,
    cfg: &TrainConfig,
    on_log: &mut dyn FnMut(&LogEntry),
) -> Result<TrainLog> {
    train_with(model, signal, cfg, on_log, &evaluate)
}

/// [`train`] with a custom full-signal evaluator, e.g. one that spreads the
/// inference chunks over threads.
pub fn train_with(
    model: &mut Model,
    signal: &Signal,
    cfg: &TrainConfig,
    on_log: &mut dyn FnMut(&LogEntry),
    evaluator: &dyn Fn(&Model, &Signal) -> Result<Evaluation>,
) -> Result<TrainLog> {
    cfg.validate()?;
    super::check_compatible(model, signal)?;
    let metric_name = match signal {
        Signal::Sdf(_) => "iou",
        _ => "psnr",
    };
    let total = cfg.total_steps();
    let mut rng = batch_rng(cfg.seed);
    let mut adam = Adam::new(model.store(), AdamConfig::default());
    let mut entries = Vec::new();
    let domain = signal.domain();
    for step in 0..total {
        let coords = sample_coordinates(&mut rng, cfg.batch_size, domain);
        let gt = signal.sample_batch(&coords);
        let mut tape = Tape::new();
        let pred = model.forward(&mut tape, &coords, cfg.batch_size)?;
        let loss = loss_node(&mut tape, cfg.loss, pred, &gt)?;
        let loss_value = tape.value(loss)[0];
        let lr = cfg.lr(ParamGroup::Network, step)?;
        model.store_mut().zero_grad();
        if !loss_value.is_finite() {
            let _ = tape.backward(loss, model.store_mut());
            return Err(diverged(model, step, lr, &format!("loss is {loss_value}")));
        }
        tape.backward(loss, model.store_mut())?;
        let (enc_lr, net_lr) = (cfg.lr(ParamGroup::Encoder, step)?, lr);
        adam.step(model.store_mut(), |g| match g {
            ParamGroup::Encoder => enc_lr,
            ParamGroup::Network => net_lr,
        })?;
        let done = step + 1;
        let metric = if cfg.log_every > 0 && done % cfg.log_every == 0 && done < total {
            Some(evaluator(model, signal)?.report.headline().1)
        } else {
            None
        };
        let entry = LogEntry {
            step: done,
            loss: loss_value,
            lr,
            metric,
        };
        if done < total {
            on_log(&entry);
        }
        entries.push(entry);
    }
    model.store_mut().round_to_f32();
    let final_report = evaluator(model, signal)?.report;
    let closing = LogEntry {
        step: total,
        loss: entries.last().map_or(f64::NAN, |e| e.loss),
        lr: entries.last().map_or(cfg.base_lr, |e| e.lr),
        metric: Some(final_report.headline().1),
    };
    on_log(&closing);
    match entries.last_mut() {
        Some(last) => *last = closing,
        None => entries.push(closing),
    }
    Ok(TrainLog {
        metric_name,
        entries,
        final_report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::EncoderSpec;
    use crate::kv::Document;
    use crate::model::ModelSpec;
    use crate::signals::Image;

    fn constant_signal() -> Signal {
        Signal::image(Image::filled(8, 8, 3, 0.4).unwrap()).unwrap()
    }

    fn small_model(seed: u64) -> Model {
        let mut spec = ModelSpec::new(EncoderSpec::grid(&[4, 4], 2), 3).unwrap();
        spec.mlp.hidden_layers = 1;
        spec.mlp.hidden_width = 8;
        Model::new(spec, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    fn cfg(steps: usize) -> TrainConfig {
        TrainConfig {
            batch_size: 64,
            batches_per_epoch: steps,
            loss: LossKind::L2,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn constant_image_is_learned() {
        let mut m = small_model(0);
        let log = train(&mut m, &constant_signal(), &cfg(200), &mut |_| {}).unwrap();
        assert!(log.final_report.get("psnr").unwrap() > 40.0, "{:?}", log.final_report);
        assert_eq!(log.entries.len(), 200);
    }

    #[test]
    fn same_seed_same_log() {
        let run = || {
            let mut m = small_model(5);
            train(&mut m, &constant_signal(), &cfg(20), &mut |_| {}).unwrap().to_csv()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn nan_target_diverges() {
        let vol = crate::signals::SdfVolume::new(1, alloc::vec![0.5]).unwrap();
        let mut spec = ModelSpec::new(EncoderSpec::grid(&[2, 2, 2], 1), 1).unwrap();
        spec.mlp.hidden_layers = 0;
        let mut sdf = Model::new(spec, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let bad = TrainConfig {
            base_lr: 1e300,
            ..cfg(5)
        };
        let err = train(&mut sdf, &Signal::Sdf(vol), &bad, &mut |_| {}).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. } | Error::NumericFault { .. }), "{err}");
    }

    #[test]
    fn cosine_schedule_ends_at_min() {
        let c = TrainConfig {
            schedule: Schedule::Cosine { min_factor: 0.1 },
            grid_lr: Some(0.5),
            ..cfg(10)
        };
        assert_eq!(c.lr(ParamGroup::Network, 0).unwrap(), 0.01);
        assert!((c.lr(ParamGroup::Encoder, 10).unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn kv_round_trip_and_errors() {
        let c = TrainConfig {
            schedule: Schedule::Cosine { min_factor: 0.01 },
            grid_lr: Some(0.1),
            loss: LossKind::Mape,
            ..cfg(7)
        };
        let mut s = Section::new("train");
        c.write_kv(&mut s);
        let mut doc = Document::new();
        doc.push(s);
        let back = Document::parse(&doc.to_text()).unwrap();
        assert_eq!(TrainConfig::read_kv(back.require("train").unwrap()).unwrap(), c);
        let bad = Document::parse("[train]\nbatch_size = 0\n").unwrap();
        let err = TrainConfig::read_kv(bad.require("train").unwrap()).unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
    }
}
