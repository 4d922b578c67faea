use alloc::boxed::Box;
use alloc::vec::Vec;

use super::Encoder;
use crate::error::{bail, Result};
use crate::numerics::{NodeId, ParamStore, Tape};
use crate::projection::{ape_into, FrequencySchedule};

/// The `count` highest power-of-two frequencies resolvable on an image of `image_size` pixels.
///
/// The top angular coefficient is `2^floor(log2 N) pi`, a period of two pixels.
pub fn tiled_schedule(image_size: usize, count: usize) -> Result<FrequencySchedule> {
    if image_size < 2 {
        bail!(Config, "tiled encoding needs an image size of at least 2, got {}", image_size);
    }
    let top = (usize::BITS - 1 - image_size.leading_zeros()) as i32;
    if count as i32 > top {
        bail!(Config, "image size {} supports at most {} tiled frequencies", image_size, top);
    }
    let phi = ((top - count as i32 + 1)..=top)
        .map(|i| libm::ldexp(core::f64::consts::PI, i))
        .collect();
    FrequencySchedule::custom(phi)
}

/// Fine encoder ++ coarse encoder ++ raw encoding at the highest frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct NtcEncoder {
    pub(crate) fine: Box<Encoder>,
    pub(crate) coarse: Box<Encoder>,
    pub(crate) tiled: FrequencySchedule,
}

impl NtcEncoder {
    /// Compose; both encoders must take the same dimensionality.
    pub fn new(fine: Encoder, coarse: Encoder, tiled: FrequencySchedule) -> Result<Self> {
        if fine.dims() != coarse.dims() {
            bail!(Config, "fine and coarse encoders disagree on dimensionality");
        }
        Ok(Self {
            fine: Box::new(fine),
            coarse: Box::new(coarse),
            tiled,
        })
    }

    #[allow(missing_docs)]
    pub fn fine(&self) -> &Encoder {
        &self.fine
    }

    #[allow(missing_docs)]
    pub fn coarse(&self) -> &Encoder {
        &self.coarse
    }

    #[allow(missing_docs)]
    pub fn tiled_schedule(&self) -> &FrequencySchedule {
        &self.tiled
    }

    #[allow(missing_docs)]
    pub fn dims(&self) -> usize {
        self.fine.dims()
    }

    #[allow(missing_docs)]
    pub fn output_dim(&self) -> usize {
        self.fine.output_dim() + self.coarse.output_dim() + 2 * self.tiled.len() * self.dims()
    }

    pub(crate) fn forward(&self, tape: &mut Tape, store: &ParamStore, coords: &[f64], rows: usize) -> Result<NodeId> {
        let fine = self.fine.forward_unchecked(tape, store, coords, rows)?;
        let coarse = self.coarse.forward_unchecked(tape, store, coords, rows)?;
        let width = 2 * self.tiled.len() * self.dims();
        if width == 0 {
            return tape.concat_cols(&[fine, coarse]);
        }
        let mut pe = Vec::with_capacity(rows * width);
        for x in coords.chunks_exact(self.dims()) {
            ape_into(x, &self.tiled, &mut pe)?;
        }
        let pe = tape.constant(rows, width, pe)?;
        tape.concat_cols(&[fine, coarse, pe])
    }
}
