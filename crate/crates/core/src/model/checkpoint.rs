use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Model, ModelSpec, TrainConfig};
use crate::error::Result;
use crate::kv::{Document, Section};
use crate::Error;

/// First eight bytes of every checkpoint.
pub const CHECKPOINT_MAGIC: [u8; 8] = *b"PEPSCKPT";
/// Layout version written and accepted.
pub const CHECKPOINT_VERSION: u32 = 1;

/// Model description, training echo and `f32` parameters.
///
/// Layout, little endian:
///
/// ```text
/// magic    8 bytes  "PEPSCKPT"
/// version  u32
/// text_len u32      length of the UTF-8 description
/// text     [encoder], [mlp] and [train] sections
/// count    u64      number of parameters
/// payload  count x f32
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    #[allow(missing_docs)]
    pub spec: ModelSpec,
    #[allow(missing_docs)]
    pub train: TrainConfig,
    /// Parameters in store order.
    pub params: Vec<f32>,
}

fn format_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        offset,
        reason: reason.into(),
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(format_err(
                self.pos,
                format!("truncated {what}: need {n} bytes, {} left", self.bytes.len() - self.pos),
            ));
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

impl ModelCheckpoint {
    /// Snapshot of `model` with its values rounded to `f32`.
    pub fn capture(model: &Model, train: &TrainConfig) -> Self {
        Self {
            spec: model.spec().clone(),
            train: train.clone(),
            params: model.store().flat_values().into_iter().map(|v| v as f32).collect(),
        }
    }

    /// Text description embedded in the file.
    pub fn description(&self) -> String {
        let mut doc = Document::new();
        self.spec.write_doc(&mut doc);
        let mut t = Section::new("train");
        self.train.write_kv(&mut t);
        doc.push(t);
        doc.to_text()
    }

    /// Serialize.
    pub fn to_bytes(&self) -> Vec<u8> {
        let text = self.description();
        let mut out = Vec::with_capacity(24 + text.len() + 4 * self.params.len());
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(text.len() as u32).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    /// Parse; every failure names the byte offset it was detected at.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8, "magic")? != CHECKPOINT_MAGIC {
            return Err(format_err(0, "bad magic, not a checkpoint"));
        }
        let version = r.u32("version")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let text_len = r.u32("description length")? as usize;
        let text_at = r.pos;
        let text = core::str::from_utf8(r.take(text_len, "description")?)
            .map_err(|e| format_err(text_at + e.valid_up_to(), "description is not UTF-8"))?;
        let describe = |e: Error| format_err(text_at, format!("bad description: {e}"));
        let doc = Document::parse(text).map_err(describe)?;
        let spec = ModelSpec::read_doc(&doc, None).map_err(describe)?;
        let train = TrainConfig::read_kv(doc.require("train").map_err(describe)?).map_err(describe)?;
        doc.check_all_used(&["encoder", "mlp", "train"]).map_err(describe)?;
        let count_at = r.pos;
        let count = r.u64("parameter count")?;
        let expected = spec.param_count().map_err(describe)?;
        if count != expected as u64 {
            return Err(format_err(
                count_at,
                format!("header lists {count} parameters, the described model has {expected}"),
            ));
        }
        let payload = r.take(expected * 4, "parameter payload")?;
        if r.pos != bytes.len() {
            return Err(format_err(r.pos, "trailing bytes after payload"));
        }
        let params = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Ok(Self { spec, train, params })
    }

    /// Rebuild the model with the stored parameters.
    pub fn to_model(&self) -> Result<Model> {
        let mut model = Model::new(self.spec.clone(), &mut ChaCha8Rng::seed_from_u64(0))?;
        let flat: Vec<f64> = self.params.iter().map(|&p| f64::from(p)).collect();
        model
            .store_mut()
            .load_flat(&flat)
            .map_err(|e| format_err(0, e.to_string()))?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregators::AggregatorKind;
    use crate::encoders::EncoderSpec;
    use crate::model::LossKind;

    fn checkpoint() -> (Model, ModelCheckpoint) {
        let enc = EncoderSpec::peps(EncoderSpec::grid(&[3, 5], 4), 2, AggregatorKind::Pink { alpha: 1.0 });
        let mut spec = ModelSpec::new(enc, 3).unwrap();
        spec.mlp.hidden_width = 16;
        let model = Model::new(spec, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let train = TrainConfig {
            loss: LossKind::L2,
            grid_lr: Some(0.05),
            ..TrainConfig::default()
        };
        let ck = ModelCheckpoint::capture(&model, &train);
        (model, ck)
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let (_, ck) = checkpoint();
        let bytes = ck.to_bytes();
        let back = ModelCheckpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn reload_predicts_like_rounded_model() {
        let (mut model, ck) = checkpoint();
        model.store_mut().round_to_f32();
        let loaded = ModelCheckpoint::from_bytes(&ck.to_bytes()).unwrap().to_model().unwrap();
        let coords: Vec<f64> = (0..40).map(|i| (i as f64 * 0.073) % 1.0).collect();
        assert_eq!(model.predict(&coords).unwrap(), loaded.predict(&coords).unwrap());
    }

    #[test]
    fn untrained_checkpoint_is_the_initialization() {
        let (model, ck) = checkpoint();
        let init: Vec<f32> = model.store().flat_values().iter().map(|&v| v as f32).collect();
        assert_eq!(ck.params, init);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let (_, ck) = checkpoint();
        let bytes = ck.to_bytes();
        for cut in [0, 5, 10, 30, bytes.len() - 1] {
            assert!(matches!(ModelCheckpoint::from_bytes(&bytes[..cut]), Err(Error::Format { .. })), "cut {cut}");
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(ModelCheckpoint::from_bytes(&bad), Err(Error::Format { offset: 0, .. })));
        let mut v2 = bytes.clone();
        v2[8..12].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(
            ModelCheckpoint::from_bytes(&v2),
            Err(Error::UnsupportedVersion { found: 2, expected: 1 })
        ));
        let mut extra = bytes;
        extra.push(0);
        assert!(ModelCheckpoint::from_bytes(&extra).is_err());
    }
}
