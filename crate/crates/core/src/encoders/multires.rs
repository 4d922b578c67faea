use alloc::vec::Vec;

use super::grid::FeatureGrid;
use super::hash::HashGrid;
use crate::error::{bail, Result};
use crate::numerics::{NodeId, ParamStore, Tape};

/// One level of a multi-resolution stack.
#[derive(Debug, Clone, PartialEq)]
pub enum Level {
    #[allow(missing_docs)]
    Grid(FeatureGrid),
    #[allow(missing_docs)]
    Hash(HashGrid),
}

impl Level {
    #[allow(missing_docs)]
    pub fn feat_dim(&self) -> usize {
        match self {
            Level::Grid(g) => g.feat_dim(),
            Level::Hash(h) => h.feat_dim(),
        }
    }

    #[allow(missing_docs)]
    pub fn dims(&self) -> usize {
        match self {
            Level::Grid(g) => g.dims(),
            Level::Hash(h) => h.dims(),
        }
    }

    /// Interpolated latent at `x`.
    pub fn sample(&self, store: &ParamStore, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Level::Grid(g) => g.sample(store, x),
            Level::Hash(h) => h.sample(store, x),
        }
    }

    fn forward(&self, tape: &mut Tape, store: &ParamStore, coords: &[f64], rows: usize) -> Result<NodeId> {
        match self {
            Level::Grid(g) => g.forward(tape, store, coords, rows),
            Level::Hash(h) => h.forward(tape, store, coords, rows),
        }
    }
}

/// Levels sampled at the same coordinate and concatenated coarse to fine.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiRes {
    levels: Vec<Level>,
}

impl MultiRes {
    /// Stack sharing one latent size and dimensionality.
    pub fn new(levels: Vec<Level>) -> Result<Self> {
        let Some(first) = levels.first() else {
            bail!(Config, "a multi-resolution stack needs at least one level");
        };
        if levels.iter().any(|l| l.feat_dim() != first.feat_dim()) {
            bail!(Config, "all levels must share the same feature dimension");
        }
        if levels.iter().any(|l| l.dims() != first.dims()) {
            bail!(Config, "all levels must share the same dimensionality");
        }
        Ok(Self { levels })
    }

    #[allow(missing_docs)]
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    #[allow(missing_docs)]
    pub fn dims(&self) -> usize {
        self.levels[0].dims()
    }

    /// `levels * k`.
    pub fn output_dim(&self) -> usize {
        self.levels.len() * self.levels[0].feat_dim()
    }

    /// Concatenated per-level samples.
    pub fn sample(&self, store: &ParamStore, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.output_dim());
        for l in &self.levels {
            out.extend(l.sample(store, x)?);
        }
        Ok(out)
    }

    pub(crate) fn forward(&self, tape: &mut Tape, store: &ParamStore, coords: &[f64], rows: usize) -> Result<NodeId> {
        let parts = self
            .levels
            .iter()
            .map(|l| l.forward(tape, store, coords, rows))
            .collect::<Result<Vec<_>>>()?;
        tape.concat_cols(&parts)
    }
}
