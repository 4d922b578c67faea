use alloc::vec::Vec;

use rand::Rng;

use super::grid::{blend, cells_of, check_dims, for_each_corner, init_table, validate_lattice, Boundary};
use crate::error::{bail, Result};
use crate::numerics::{Gather, NodeId, ParamId, ParamStore, Tap, Tape};

/// Per-axis multipliers of the spatial hash.
pub const HASH_PRIMES: [u32; 3] = [1, 2_654_435_761, 805_459_861];

/// Spatial hash of a lattice corner: XOR of `v_a * pi_a` (wrapping, 32 bit), reduced mod `T`.
pub fn spatial_hash(coords: &[usize], table_size: usize) -> usize {
    let h = coords
        .iter()
        .zip(HASH_PRIMES)
        .fold(0u32, |acc, (&c, p)| acc ^ (c as u32).wrapping_mul(p));
    h as usize % table_size
}

/// How lattice corners are mapped to table rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HashIndexing {
    /// Row-major dense indexing when the lattice fits in the table, hashing otherwise.
    #[default]
    Auto,
    /// Always hash, even when the lattice would fit.
    Hashed,
}

/// Multilinear lattice whose corner latents live in a hashed `(T, k)` table.
#[derive(Debug, Clone, PartialEq)]
pub struct HashGrid {
    resolution: Vec<usize>,
    table_size: usize,
    feat_dim: usize,
    dense: bool,
    param: ParamId,
}

impl HashGrid {
    /// Table initialized uniformly in `[-1e-4, 1e-4]`.
    pub fn new(
        store: &mut ParamStore,
        resolution: &[usize],
        table_size: usize,
        feat_dim: usize,
        indexing: HashIndexing,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        validate_lattice(resolution, feat_dim)?;
        if table_size == 0 || table_size > u32::MAX as usize {
            bail!(Config, "hash table size must be in 1..=2^32-1, got {}", table_size);
        }
        let param = init_table(store, &[table_size, feat_dim], rng)?;
        let nodes: usize = resolution.iter().product();
        Ok(Self {
            resolution: resolution.to_vec(),
            table_size,
            feat_dim,
            dense: indexing == HashIndexing::Auto && nodes <= table_size,
            param,
        })
    }

    #[allow(missing_docs)]
    pub fn dims(&self) -> usize {
        self.resolution.len()
    }

    #[allow(missing_docs)]
    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    /// `T`.
    pub fn table_size(&self) -> usize {
        self.table_size
    }

    #[allow(missing_docs)]
    pub fn feat_dim(&self) -> usize {
        self.feat_dim
    }

    /// Storage tensor of shape `(T, k)`.
    pub fn param(&self) -> ParamId {
        self.param
    }

    /// True when corners are indexed densely instead of hashed.
    pub fn is_dense(&self) -> bool {
        self.dense
    }

    /// Table row of a lattice corner.
    pub fn slot(&self, coords: &[usize]) -> usize {
        if self.dense {
            coords.iter().zip(&self.resolution).fold(0, |acc, (&c, &r)| acc * r + c)
        } else {
            spatial_hash(coords, self.table_size)
        }
    }

    /// Interpolation taps of `x` into the table.
    pub fn taps(&self, x: &[f64], out: &mut Vec<Tap>) {
        let cells = cells_of(x, &self.resolution, Boundary::Clamp);
        for_each_corner(&cells[..self.dims()], |c, w| {
            out.push(Tap {
                index: self.slot(c) as u32,
                weight: w,
            })
        });
    }

    /// Multilinear interpolation of the hashed corner latents.
    pub fn sample(&self, store: &ParamStore, x: &[f64]) -> Result<Vec<f64>> {
        check_dims(x, self.dims())?;
        let mut taps = Vec::new();
        self.taps(x, &mut taps);
        Ok(blend(store, self.param, self.feat_dim, &taps))
    }

    pub(crate) fn forward(&self, tape: &mut Tape, store: &ParamStore, coords: &[f64], rows: usize) -> Result<NodeId> {
        let mut g = Gather::new(self.param, self.feat_dim, rows, self.feat_dim);
        let mut taps = Vec::with_capacity(8);
        for (r, x) in coords.chunks_exact(self.dims()).enumerate() {
            taps.clear();
            self.taps(x, &mut taps);
            g.push(r, 0, 0, self.feat_dim, &taps);
        }
        tape.gather(store, g)
    }
}
