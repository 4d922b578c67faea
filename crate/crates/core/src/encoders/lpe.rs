use alloc::vec::Vec;

use super::grid::{cells_of, FeatureGrid};
use crate::error::Result;
use crate::numerics::{NodeId, ParamStore, Tape};
use crate::projection::{ape_into, FrequencySchedule};

/// Number of local frequencies needed to cover `k` channels in `d` dimensions.
pub fn lpe_default_frequencies(feat_dim: usize, dims: usize) -> usize {
    feat_dim.div_ceil(2 * dims).max(1)
}

/// Grid latent multiplied by the positional encoding of the offset inside its cell.
///
/// The local encoding has `2 L d` values; channel `j` of the latent is
/// multiplied by local value `j mod 2Ld`, so short encodings repeat and long
/// ones are truncated.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPeGrid {
    grid: FeatureGrid,
    local: FrequencySchedule,
}

impl LocalPeGrid {
    #[allow(missing_docs)]
    pub fn new(grid: FeatureGrid, local: FrequencySchedule) -> Self {
        Self { grid, local }
    }

    #[allow(missing_docs)]
    pub fn grid(&self) -> &FeatureGrid {
        &self.grid
    }

    #[allow(missing_docs)]
    pub fn local_schedule(&self) -> &FrequencySchedule {
        &self.local
    }

    /// Local encoding of `x`, fitted to the latent length.
    pub fn local_pe(&self, x: &[f64]) -> Result<Vec<f64>> {
        let cells = cells_of(x, self.grid.resolution(), self.grid.boundary());
        let offsets: Vec<f64> = cells[..self.grid.dims()].iter().map(|c| c.t).collect();
        let mut pe = Vec::new();
        ape_into(&offsets, &self.local, &mut pe)?;
        let k = self.grid.feat_dim();
        if pe.is_empty() {
            return Ok(alloc::vec![1.0; k]);
        }
        Ok((0..k).map(|j| pe[j % pe.len()]).collect())
    }

    /// `grid_sample(x) * LocalPE(x)`.
    pub fn sample(&self, store: &ParamStore, x: &[f64]) -> Result<Vec<f64>> {
        let lat = self.grid.sample(store, x)?;
        let pe = self.local_pe(x)?;
        Ok(lat.iter().zip(&pe).map(|(a, b)| a * b).collect())
    }

    pub(crate) fn forward(&self, tape: &mut Tape, store: &ParamStore, coords: &[f64], rows: usize) -> Result<NodeId> {
        let lat = self.grid.forward(tape, store, coords, rows)?;
        let mut pe = Vec::with_capacity(rows * self.grid.feat_dim());
        for x in coords.chunks_exact(self.grid.dims()) {
            pe.extend(self.local_pe(x)?);
        }
        let pe = tape.constant(rows, self.grid.feat_dim(), pe)?;
        tape.mul(lat, pe)
    }
}
