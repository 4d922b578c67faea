use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Result};
use crate::numerics::{Gather, ParamGroup, ParamId, ParamStore, ParamTensor, Tap, Tape, NodeId};

/// Half-width of the uniform initialization of grid and hash-table latents.
pub const GRID_INIT_SCALE: f64 = 1e-4;

/// How coordinates outside the lattice interior find their neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// `x` in `[0,1]` maps to `x (r-1)`; inputs are clamped and edge
    /// neighbours are repeated.
    #[default]
    Clamp,
    /// Periodic lattice: `x` maps to `frac(x) r` and neighbours wrap around.
    Wrap,
}

impl Boundary {
    /// Config spelling.
    pub fn name(self) -> &'static str {
        match self {
            Boundary::Clamp => "clamp",
            Boundary::Wrap => "wrap",
        }
    }
}

/// Lower and upper lattice neighbour along one axis plus the fractional offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct AxisCell {
    pub lo: usize,
    pub hi: usize,
    pub t: f64,
}

/// Lattice coordinates within this distance of a node are treated as the node,
/// so that `i/(r-1)` lands exactly despite rounding in the division.
const NODE_SNAP: f64 = 1e-9;

fn snap(u: f64) -> f64 {
    let n = libm::round(u);
    if libm::fabs(u - n) <= NODE_SNAP {
        n
    } else {
        u
    }
}

pub(crate) fn axis_cell(x: f64, r: usize, boundary: Boundary) -> AxisCell {
    match boundary {
        Boundary::Clamp => {
            let u = snap(x.clamp(0.0, 1.0) * (r - 1) as f64);
            let lo = (libm::floor(u) as usize).min(r - 1);
            AxisCell {
                lo,
                hi: (lo + 1).min(r - 1),
                t: u - lo as f64,
            }
        }
        Boundary::Wrap => {
            let u = snap((x - libm::floor(x)) * r as f64);
            let f = libm::floor(u);
            AxisCell {
                lo: (f as usize) % r,
                hi: (f as usize + 1) % r,
                t: u - f,
            }
        }
    }
}

/// Visit the `2^d` cell corners in lexicographic offset order (axis 0 most
/// significant) with their multilinear weights.
pub(crate) fn for_each_corner(cells: &[AxisCell], mut f: impl FnMut(&[usize], f64)) {
    let d = cells.len();
    let mut coords = [0usize; 3];
    for c in 0..(1usize << d) {
        let mut w = 1.0;
        for (a, cell) in cells.iter().enumerate() {
            let upper = (c >> (d - 1 - a)) & 1 == 1;
            coords[a] = if upper { cell.hi } else { cell.lo };
            w *= if upper { cell.t } else { 1.0 - cell.t };
        }
        f(&coords[..d], w);
    }
}

pub(crate) fn cells_of(x: &[f64], resolution: &[usize], boundary: Boundary) -> [AxisCell; 3] {
    let mut cells = [AxisCell { lo: 0, hi: 0, t: 0.0 }; 3];
    for (a, (&xa, &r)) in x.iter().zip(resolution).enumerate() {
        cells[a] = axis_cell(xa, r, boundary);
    }
    cells
}

pub(crate) fn validate_lattice(resolution: &[usize], feat_dim: usize) -> Result<()> {
    if !(1..=3).contains(&resolution.len()) {
        bail!(Config, "lattices support 1 to 3 dimensions, got {}", resolution.len());
    }
    if resolution.contains(&0) {
        bail!(Config, "lattice resolution must be positive, got {:?}", resolution);
    }
    if feat_dim == 0 {
        bail!(Config, "feature dimension must be positive");
    }
    Ok(())
}

pub(crate) fn init_table(store: &mut ParamStore, shape: &[usize], rng: &mut impl Rng) -> Result<ParamId> {
    let n: usize = shape.iter().product();
    let values = (0..n).map(|_| rng.gen_range(-GRID_INIT_SCALE..=GRID_INIT_SCALE)).collect();
    Ok(store.add(ParamTensor::from_values(shape, values, ParamGroup::Encoder)?))
}

pub(crate) fn check_dims(x: &[f64], dims: usize) -> Result<()> {
    if x.len() != dims {
        bail!(Config, "coordinate has {} components, encoder expects {}", x.len(), dims);
    }
    Ok(())
}

/// Weighted sum of table rows, accumulated in tap order.
pub(crate) fn blend(store: &ParamStore, table: ParamId, width: usize, taps: &[Tap]) -> Vec<f64> {
    let values = store.get(table).values();
    let mut out = alloc::vec![0.0; width];
    for tap in taps {
        let row = &values[tap.index as usize * width..(tap.index as usize + 1) * width];
        out.iter_mut().zip(row).for_each(|(o, &v)| *o += tap.weight * v);
    }
    out
}

/// Dense lattice of learnable latents, storage shape `(r_1, .., r_d, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    resolution: Vec<usize>,
    strides: Vec<usize>,
    feat_dim: usize,
    boundary: Boundary,
    param: ParamId,
}

impl FeatureGrid {
    /// Grid with latents drawn uniformly from `[-1e-4, 1e-4]`.
    pub fn new(store: &mut ParamStore, resolution: &[usize], feat_dim: usize, boundary: Boundary, rng: &mut impl Rng) -> Result<Self> {
        validate_lattice(resolution, feat_dim)?;
        let mut shape = resolution.to_vec();
        shape.push(feat_dim);
        let param = init_table(store, &shape, rng)?;
        Ok(Self::over(resolution, feat_dim, boundary, param))
    }

    /// Wrap an existing `(r_1, .., r_d, k)` tensor.
    pub fn from_param(store: &ParamStore, param: ParamId, boundary: Boundary) -> Result<Self> {
        let shape = store.get(param).shape();
        if shape.len() < 2 {
            bail!(Config, "grid storage needs at least one lattice axis and a feature axis");
        }
        let (res, k) = shape.split_at(shape.len() - 1);
        validate_lattice(res, k[0])?;
        Ok(Self::over(res, k[0], boundary, param))
    }

    fn over(resolution: &[usize], feat_dim: usize, boundary: Boundary, param: ParamId) -> Self {
        let mut strides = alloc::vec![1; resolution.len()];
        for a in (0..resolution.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * resolution[a + 1];
        }
        Self {
            resolution: resolution.to_vec(),
            strides,
            feat_dim,
            boundary,
            param,
        }
    }

    /// Spatial dimensionality `d`.
    pub fn dims(&self) -> usize {
        self.resolution.len()
    }

    #[allow(missing_docs)]
    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    /// Latent length `k`.
    pub fn feat_dim(&self) -> usize {
        self.feat_dim
    }

    #[allow(missing_docs)]
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Storage tensor.
    pub fn param(&self) -> ParamId {
        self.param
    }

    /// Row of the lattice node at `coords`.
    pub fn node_index(&self, coords: &[usize]) -> usize {
        coords.iter().zip(&self.strides).map(|(c, s)| c * s).sum()
    }

    /// Lattice coordinate of node `i` along `axis` in clamp mode.
    pub fn node_coordinate(&self, axis: usize, i: usize) -> f64 {
        let r = self.resolution[axis];
        if r == 1 {
            0.0
        } else {
            i as f64 / (r - 1) as f64
        }
    }

    /// Interpolation taps of `x`, one per cell corner.
    pub fn taps(&self, x: &[f64], out: &mut Vec<Tap>) {
        let cells = cells_of(x, &self.resolution, self.boundary);
        for_each_corner(&cells[..self.dims()], |c, w| {
            out.push(Tap {
                index: self.node_index(c) as u32,
                weight: w,
            })
        });
    }

    /// Multilinear interpolation of the surrounding `2^d` latents.
    pub fn sample(&self, store: &ParamStore, x: &[f64]) -> Result<Vec<f64>> {
        check_dims(x, self.dims())?;
        let mut taps = Vec::new();
        self.taps(x, &mut taps);
        Ok(blend(store, self.param, self.feat_dim, &taps))
    }

    /// The `2^d` corner latents concatenated in corner order, without interpolation.
    pub fn concat_sample(&self, store: &ParamStore, x: &[f64]) -> Result<Vec<f64>> {
        check_dims(x, self.dims())?;
        let mut taps = Vec::new();
        self.taps(x, &mut taps);
        let values = store.get(self.param).values();
        let k = self.feat_dim;
        Ok(taps
            .iter()
            .flat_map(|t| values[t.index as usize * k..(t.index as usize + 1) * k].iter().copied())
            .collect())
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

    pub(crate) fn forward_concat(&self, tape: &mut Tape, store: &ParamStore, coords: &[f64], rows: usize) -> Result<NodeId> {
        let k = self.feat_dim;
        let corners = 1 << self.dims();
        let mut g = Gather::new(self.param, k, rows, corners * k);
        let mut taps = Vec::with_capacity(8);
        for (r, x) in coords.chunks_exact(self.dims()).enumerate() {
            taps.clear();
            self.taps(x, &mut taps);
            for (c, tap) in taps.iter().enumerate() {
                g.push(r, c * k, 0, k, &[Tap { index: tap.index, weight: 1.0 }]);
            }
        }
        tape.gather(store, g)
    }
}
