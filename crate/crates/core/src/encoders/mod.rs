//! Learned positional encoders and the PEPS wrapper.
//!
//! An [`EncoderSpec`] describes an encoder; [`EncoderSpec::build`] allocates
//! its parameters in a [`ParamStore`] and returns an [`Encoder`]. Encoders
//! record their batch evaluation on a [`Tape`] so gradients reach the grids.
//!
//! Lattice convention: in clamp mode `x` in `[0,1]` maps to `x (r-1)`, so
//! node `i` sits at `i/(r-1)`. Axis 0 of a coordinate is axis 0 of the grid
//! and the most significant index of both storage and corner order.

mod grid;
mod hash;
mod lpe;
mod multires;
mod ntc;
mod peps;
mod spec;

use alloc::vec::Vec;

pub use grid::{Boundary, FeatureGrid, GRID_INIT_SCALE};
pub use hash::{spatial_hash, HashGrid, HashIndexing, HASH_PRIMES};
pub use lpe::{lpe_default_frequencies, LocalPeGrid};
pub use multires::{Level, MultiRes};
pub use ntc::{tiled_schedule, NtcEncoder};
pub use peps::PepsEncoder;
pub use spec::EncoderSpec;

use crate::error::{bail, Result};
use crate::numerics::{NodeId, ParamStore, Tape};
use crate::projection::{ape_into, FrequencySchedule};

/// A built encoder bound to parameters in a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub enum Encoder {
    /// Passes coordinates through.
    Identity {
        #[allow(missing_docs)]
        dims: usize,
    },
    /// Raw sin/cos positional encoding.
    Pe {
        #[allow(missing_docs)]
        dims: usize,
        #[allow(missing_docs)]
        schedule: FrequencySchedule,
    },
    /// Bilinear / trilinear dense grid.
    Grid(FeatureGrid),
    /// Corner latents concatenated without interpolation.
    ConcatGrid(FeatureGrid),
    #[allow(missing_docs)]
    Hash(HashGrid),
    /// Multi-resolution grid or hash stack.
    Multi(MultiRes),
    /// Grid latent times local positional encoding.
    Lpe(LocalPeGrid),
    /// Two grids plus tiled positional encoding.
    Ntc(NtcEncoder),
    #[allow(missing_docs)]
    Peps(PepsEncoder),
}

impl Encoder {
    /// Input dimensionality.
    pub fn dims(&self) -> usize {
        match self {
            Encoder::Identity { dims } | Encoder::Pe { dims, .. } => *dims,
            Encoder::Grid(g) | Encoder::ConcatGrid(g) => g.dims(),
            Encoder::Hash(h) => h.dims(),
            Encoder::Multi(m) => m.dims(),
            Encoder::Lpe(l) => l.grid().dims(),
            Encoder::Ntc(n) => n.dims(),
            Encoder::Peps(p) => p.dims(),
        }
    }

    /// Length of the feature vector produced per coordinate.
    pub fn output_dim(&self) -> usize {
        match self {
            Encoder::Identity { dims } => *dims,
            Encoder::Pe { dims, schedule } => 2 * schedule.len() * dims,
            Encoder::Grid(g) => g.feat_dim(),
            Encoder::ConcatGrid(g) => (1 << g.dims()) * g.feat_dim(),
            Encoder::Hash(h) => h.feat_dim(),
            Encoder::Multi(m) => m.output_dim(),
            Encoder::Lpe(l) => l.grid().feat_dim(),
            Encoder::Ntc(n) => n.output_dim(),
            Encoder::Peps(p) => p.output_dim(),
        }
    }

    /// Record the encoding of `rows` coordinates (row-major, `rows x dims`).
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, coords: &[f64], rows: usize) -> Result<NodeId> {
        if coords.len() != rows * self.dims() {
            bail!(
                Config,
                "expected {} coordinates of dimension {}, got {} values",
                rows,
                self.dims(),
                coords.len()
            );
        }
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            bail!(Input, "coordinate value {} at flat index {} is not finite", coords[i], i);
        }
        self.forward_unchecked(tape, store, coords, rows)
    }

    pub(crate) fn forward_unchecked(&self, tape: &mut Tape, store: &ParamStore, coords: &[f64], rows: usize) -> Result<NodeId> {
        match self {
            Encoder::Identity { dims } => tape.constant(rows, *dims, coords.to_vec()),
            Encoder::Pe { dims, schedule } => {
                let width = 2 * schedule.len() * dims;
                let mut out = Vec::with_capacity(rows * width);
                for x in coords.chunks_exact(*dims) {
                    ape_into(x, schedule, &mut out)?;
                }
                tape.constant(rows, width, out)
            }
            Encoder::Grid(g) => g.forward(tape, store, coords, rows),
            Encoder::ConcatGrid(g) => g.forward_concat(tape, store, coords, rows),
            Encoder::Hash(h) => h.forward(tape, store, coords, rows),
            Encoder::Multi(m) => m.forward(tape, store, coords, rows),
            Encoder::Lpe(l) => l.forward(tape, store, coords, rows),
            Encoder::Ntc(n) => n.forward(tape, store, coords, rows),
            Encoder::Peps(p) => p.forward(tape, store, coords, rows),
        }
    }

    /// Features of many coordinates, row-major `rows x output_dim`.
    pub fn encode_batch(&self, store: &ParamStore, coords: &[f64]) -> Result<Vec<f64>> {
        let rows = coords.len() / self.dims().max(1);
        let mut tape = Tape::new();
        let out = self.forward(&mut tape, store, coords, rows)?;
        Ok(tape.take_value(out))
    }

    /// Features of one coordinate.
    pub fn encode(&self, store: &ParamStore, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dims() {
            bail!(Config, "coordinate has {} components, encoder expects {}", x.len(), self.dims());
        }
        self.encode_batch(store, x)
    }
}

/// Multilinear interpolation of `grid` at `x`.
pub fn grid_sample(store: &ParamStore, grid: &FeatureGrid, x: &[f64]) -> Result<Vec<f64>> {
    grid.sample(store, x)
}

/// The `2^d` corner latents around `x`, concatenated in corner order.
pub fn concat_grid_sample(store: &ParamStore, grid: &FeatureGrid, x: &[f64]) -> Result<Vec<f64>> {
    grid.concat_sample(store, x)
}

/// Multilinear interpolation through a hashed table.
pub fn hash_sample(store: &ParamStore, grid: &HashGrid, x: &[f64]) -> Result<Vec<f64>> {
    grid.sample(store, x)
}

/// Per-level samples concatenated coarse to fine.
pub fn multires_sample(store: &ParamStore, levels: &MultiRes, x: &[f64]) -> Result<Vec<f64>> {
    levels.sample(store, x)
}

/// `grid_sample(x) * LocalPE(x)`.
pub fn lpe_encode(store: &ParamStore, lpe: &LocalPeGrid, x: &[f64]) -> Result<Vec<f64>> {
    lpe.sample(store, x)
}

/// Fine ++ coarse ++ tiled encoding of `x`.
pub fn ntc_encode(store: &ParamStore, ntc: &NtcEncoder, x: &[f64]) -> Result<Vec<f64>> {
    Encoder::Ntc(ntc.clone()).encode(store, x)
}

/// Aggregated samples of the shared inner encoder at the points of interest of `x`.
pub fn peps_encode(store: &ParamStore, peps: &PepsEncoder, x: &[f64]) -> Result<Vec<f64>> {
    Encoder::Peps(peps.clone()).encode(store, x)
}

impl PepsEncoder {
    /// Reference evaluation: every latent materialized, then aggregated.
    ///
    /// Grid and hash inner encoders normally take a fused path that only
    /// reads the kept channels; this one is the slow equivalent.
    pub fn encode_materialized(&self, store: &ParamStore, coords: &[f64]) -> Result<Vec<f64>> {
        let rows = coords.len() / self.dims();
        let mut tape = Tape::new();
        let out = self.forward_materialized(&mut tape, store, coords, rows)?;
        Ok(tape.take_value(out))
    }
}
