//! MLP head, losses, training loop and checkpoints.
//!
//! A [`Model`] is an encoder followed by an MLP, with every parameter in one
//! [`ParamStore`]. Encoder tensors are registered first. Inference runs in
//! fixed chunks of [`INFERENCE_CHUNK`] rows so results do not depend on how
//! callers split the work.

mod checkpoint;
mod loss;
mod mlp;
mod train;

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::encoders::{Encoder, EncoderSpec};
use crate::error::{bail, Result};
use crate::kv::{Document, Section};
use crate::metrics;
use crate::numerics::{NodeId, ParamStore, Tape};
use crate::signals::{Image, Signal};

pub use checkpoint::{ModelCheckpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use loss::{loss_node, loss_value, LossKind, MAPE_EPSILON};
pub use mlp::{mlp_forward, Activation, Mlp, MlpConfig};
pub use train::{train, train_with, LogEntry, Schedule, TrainConfig, TrainLog};

/// Rows per inference pass.
pub const INFERENCE_CHUNK: usize = 4096;

/// Encoder plus MLP shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    #[allow(missing_docs)]
    pub encoder: EncoderSpec,
    /// `input_dim` must equal the encoder output size.
    pub mlp: MlpConfig,
}

impl ModelSpec {
    /// MLP with default shape on top of `encoder`.
    pub fn new(encoder: EncoderSpec, output_dim: usize) -> Result<Self> {
        let mlp = MlpConfig::new(encoder.output_dim()?, output_dim);
        Ok(Self { encoder, mlp })
    }

    #[allow(missing_docs)]
    pub fn validate(&self) -> Result<()> {
        let d = self.encoder.output_dim()?;
        if d != self.mlp.input_dim {
            bail!(Config, "encoder emits {} features but the MLP expects {}", d, self.mlp.input_dim);
        }
        self.mlp.validate()
    }

    /// Encoder plus MLP scalars.
    pub fn param_count(&self) -> Result<usize> {
        Ok(self.encoder.param_count()? + self.mlp.param_count())
    }

    /// Append `[encoder]` and `[mlp]` sections.
    pub fn write_doc(&self, doc: &mut Document) {
        let mut enc = Section::new("encoder");
        self.encoder.write_kv(&mut enc, "");
        doc.push(enc);
        let mut mlp = Section::new("mlp");
        self.mlp.write_kv(&mut mlp);
        doc.push(mlp);
    }

    /// Read `[encoder]` and `[mlp]`; `default_output` fills a missing `output_dim`.
    pub fn read_doc(doc: &Document, default_output: Option<usize>) -> Result<Self> {
        let encoder = EncoderSpec::read_kv(doc.require("encoder")?, "")?;
        let input_dim = encoder.output_dim()?;
        let mlp = match doc.section("mlp") {
            Some(s) => MlpConfig::read_kv(s, input_dim, default_output)?,
            None => match default_output {
                Some(o) => MlpConfig::new(input_dim, o),
                None => return Err(doc.require("mlp").unwrap_err()),
            },
        };
        Ok(Self { encoder, mlp })
    }
}

/// Trainable encoder and MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: ModelSpec,
    encoder: Encoder,
    mlp: Mlp,
    store: ParamStore,
}

impl Model {
    /// Build and initialize; the encoder draws from `rng` before the MLP.
    pub fn new(spec: ModelSpec, rng: &mut impl Rng) -> Result<Self> {
        spec.validate()?;
        let mut store = ParamStore::new();
        let encoder = spec.encoder.build(&mut store, rng)?;
        let mlp = Mlp::new(&mut store, spec.mlp.clone(), rng)?;
        Ok(Self {
            spec,
            encoder,
            mlp,
            store,
        })
    }

    #[allow(missing_docs)]
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    #[allow(missing_docs)]
    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    #[allow(missing_docs)]
    pub fn mlp(&self) -> &Mlp {
        &self.mlp
    }

    #[allow(missing_docs)]
    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    #[allow(missing_docs)]
    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    /// Scalar parameter count.
    pub fn param_count(&self) -> usize {
        self.store.scalar_count()
    }

    /// Coordinate dimensionality.
    pub fn dims(&self) -> usize {
        self.encoder.dims()
    }

    /// Values per coordinate.
    pub fn output_dim(&self) -> usize {
        self.mlp.config().output_dim
    }

    /// Record encoder and MLP for `rows` coordinates.
    pub fn forward(&self, tape: &mut Tape, coords: &[f64], rows: usize) -> Result<NodeId> {
        let features = self.encoder.forward(tape, &self.store, coords, rows)?;
        self.mlp.forward(tape, &self.store, features)
    }

    /// Predictions for at most [`INFERENCE_CHUNK`] coordinates.
    pub fn predict_chunk(&self, coords: &[f64]) -> Result<Vec<f64>> {
        let d = self.dims();
        if !coords.len().is_multiple_of(d) {
            bail!(Input, "coordinate buffer of {} values is not a multiple of {}", coords.len(), d);
        }
        let rows = coords.len() / d;
        if rows == 0 {
            return Ok(Vec::new());
        }
        let mut tape = Tape::new();
        let out = self.forward(&mut tape, coords, rows)?;
        Ok(tape.take_value(out))
    }

    /// Predictions for any number of coordinates, flattened row-major.
    pub fn predict(&self, coords: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(coords.len() / self.dims().max(1) * self.output_dim());
        for chunk in coords.chunks(INFERENCE_CHUNK * self.dims()) {
            out.extend(self.predict_chunk(chunk)?);
        }
        Ok(out)
    }
}

/// Named metric values.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    /// `(name, value)` in report order.
    pub entries: Vec<(&'static str, f64)>,
}

impl MetricReport {
    #[allow(missing_docs)]
    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }

    /// Metric reported in training logs (`psnr` or `iou`).
    pub fn headline(&self) -> (&'static str, f64) {
        self.entries[0]
    }

    /// Header line and value line, comma separated.
    pub fn to_csv(&self) -> String {
        use core::fmt::Write as _;
        let mut s = String::new();
        let names: Vec<&str> = self.entries.iter().map(|(n, _)| *n).collect();
        let _ = writeln!(s, "{}", names.join(","));
        for (i, (_, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{v}");
        }
        s.push('\n');
        s
    }
}

/// Full-lattice reconstruction and its metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Raw predictions in lattice order.
    pub prediction: Vec<f64>,
    #[allow(missing_docs)]
    pub report: MetricReport,
}

/// Config error unless `model` maps `signal` coordinates to its channel count.
pub fn check_compatible(model: &Model, signal: &Signal) -> Result<()> {
    if model.dims() != signal.dims() || model.output_dim() != signal.channels() {
        bail!(
            Config,
            "model maps {}-d coordinates to {} values, signal has {}-d coordinates and {} channels",
            model.dims(),
            model.output_dim(),
            signal.dims(),
            signal.channels()
        );
    }
    Ok(())
}

/// Metrics of a lattice-ordered prediction against `signal`.
///
/// Images are clamped to `[0,1]` and scored with PSNR, SSIM (skipped below
/// the window size), LSD and LPSD; volumes with the IoU of their interiors.
pub fn score(signal: &Signal, prediction: &[f64]) -> Result<MetricReport> {
    let gt = signal.lattice_values();
    if prediction.len() != gt.len() {
        bail!(Input, "prediction has {} values, signal {}", prediction.len(), gt.len());
    }
    let entries = match signal {
        Signal::Sdf(_) => alloc::vec![("iou", metrics::iou_of_signs(prediction, &gt))],
        Signal::Image(_) | Signal::TextureSet(_) => {
            let truth = match signal {
                Signal::Image(i) => i.clone(),
                Signal::TextureSet(t) => t.stacked(),
                Signal::Sdf(_) => unreachable!(),
            };
            let recon = Image::new(truth.width(), truth.height(), truth.channels(), prediction.to_vec())?.clamped();
            let mut e = alloc::vec![("psnr", metrics::psnr(&recon, &truth, 1.0)?)];
            if truth.width().min(truth.height()) >= metrics::SSIM_WINDOW {
                e.push(("ssim", metrics::ssim(&recon, &truth)?));
            }
            e.push(("lsd", metrics::lsd(&recon, &truth)?));
            e.push(("lpsd", metrics::lpsd(&recon, &truth)?));
            e
        }
    };
    Ok(MetricReport { entries })
}

/// Predict every lattice point of `signal` and score it.
pub fn evaluate(model: &Model, signal: &Signal) -> Result<Evaluation> {
    check_compatible(model, signal)?;
    let prediction = model.predict(&signal.lattice())?;
    let report = score(signal, &prediction)?;
    Ok(Evaluation { prediction, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregators::AggregatorKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec() -> ModelSpec {
        let enc = EncoderSpec::peps(EncoderSpec::grid(&[4, 4], 2), 2, AggregatorKind::Pink { alpha: 1.0 });
        let mut s = ModelSpec::new(enc, 3).unwrap();
        s.mlp.hidden_layers = 2;
        s.mlp.hidden_width = 8;
        s
    }

    #[test]
    fn param_count_matches_store() {
        let s = spec();
        let m = Model::new(s.clone(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(m.param_count(), s.param_count().unwrap());
    }

    #[test]
    fn chunking_does_not_change_predictions() {
        let m = Model::new(spec(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let coords: Vec<f64> = (0..2 * 37).map(|i| (i as f64 * 0.137) % 1.0).collect();
        let all = m.predict(&coords).unwrap();
        let mut parts = Vec::new();
        for c in coords.chunks(2 * 5) {
            parts.extend(m.predict_chunk(c).unwrap());
        }
        assert_eq!(all.len(), 37 * 3);
        for (a, b) in all.iter().zip(&parts) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_doc_round_trip() {
        let s = spec();
        let mut doc = Document::new();
        s.write_doc(&mut doc);
        let back = ModelSpec::read_doc(&Document::parse(&doc.to_text()).unwrap(), None).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn mismatched_signal_is_rejected() {
        let m = Model::new(spec(), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let vol = crate::signals::SdfVolume::new(2, alloc::vec![1.0; 8]).unwrap();
        assert!(matches!(evaluate(&m, &Signal::Sdf(vol)), Err(crate::Error::Config(_))));
    }
}
