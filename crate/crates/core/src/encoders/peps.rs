use alloc::boxed::Box;
use alloc::vec::Vec;

use super::Encoder;
use crate::aggregators::AggregatorSpec;
use crate::error::{bail, Result};
use crate::numerics::{Gather, NodeId, ParamStore, Tap, Tape};
use crate::projection::project_into;

/// A shared inner encoder evaluated at every point of interest, then aggregated.
#[derive(Debug, Clone, PartialEq)]
pub struct PepsEncoder {
    pub(crate) inner: Box<Encoder>,
    pub(crate) aggregator: AggregatorSpec,
}

impl PepsEncoder {
    /// Wrap `inner`; the aggregator's latent size must match its output.
    pub fn new(inner: Encoder, aggregator: AggregatorSpec) -> Result<Self> {
        if aggregator.d_lat() != inner.output_dim() {
            bail!(
                Config,
                "aggregator expects latents of length {}, inner encoder produces {}",
                aggregator.d_lat(),
                inner.output_dim()
            );
        }
        Ok(Self {
            inner: Box::new(inner),
            aggregator,
        })
    }

    #[allow(missing_docs)]
    pub fn inner(&self) -> &Encoder {
        &self.inner
    }

    #[allow(missing_docs)]
    pub fn aggregator(&self) -> &AggregatorSpec {
        &self.aggregator
    }

    #[allow(missing_docs)]
    pub fn dims(&self) -> usize {
        self.inner.dims()
    }

    #[allow(missing_docs)]
    pub fn output_dim(&self) -> usize {
        self.aggregator.output_dim()
    }

    /// Points of interest for every row, point-major within a row.
    fn points(&self, coords: &[f64], rows: usize) -> Result<Vec<f64>> {
        let d = self.dims();
        let mut pts = Vec::with_capacity(rows * self.aggregator.points() * d);
        for x in coords.chunks_exact(d) {
            project_into(x, self.aggregator.schedule(), self.aggregator.include_origin(), &mut pts)?;
        }
        Ok(pts)
    }

    pub(crate) fn forward(&self, tape: &mut Tape, store: &ParamStore, coords: &[f64], rows: usize) -> Result<NodeId> {
        match &*self.inner {
            Encoder::Grid(_) | Encoder::Hash(_) => self.forward_fused(tape, store, coords, rows),
            _ => self.forward_materialized(tape, store, coords, rows),
        }
    }

    /// Evaluate the inner encoder on all points, then recombine columns.
    pub(crate) fn forward_materialized(&self, tape: &mut Tape, store: &ParamStore, coords: &[f64], rows: usize) -> Result<NodeId> {
        let p = self.aggregator.points();
        let pts = self.points(coords, rows)?;
        let lat = self.inner.forward_unchecked(tape, store, &pts, rows * p)?;
        // Row-major storage makes the (rows*p, d_lat) latents a (rows, p*d_lat) concatenation.
        let flat = tape.reshape(lat, rows, p * self.aggregator.d_lat())?;
        if self.aggregator.kind() == crate::aggregators::AggregatorKind::Concat {
            return Ok(flat);
        }
        tape.column_map(flat, self.aggregator.column_map())
    }

    /// Interpolating inner grids read only the channels the aggregator keeps.
    fn forward_fused(&self, tape: &mut Tape, store: &ParamStore, coords: &[f64], rows: usize) -> Result<NodeId> {
        let (table, width) = match &*self.inner {
            Encoder::Grid(g) => (g.param(), g.feat_dim()),
            Encoder::Hash(h) => (h.param(), h.feat_dim()),
            _ => unreachable!("fused path only for single-table encoders"),
        };
        let p = self.aggregator.points();
        let d = self.dims();
        let plan = self.aggregator.plan();
        let out_dim = self.aggregator.output_dim();
        let pts = self.points(coords, rows)?;
        let mut g = Gather::new(table, width, rows, out_dim);
        let mut taps: Vec<Tap> = Vec::with_capacity(p * 8);
        let mut ranges = Vec::with_capacity(p);
        for (r, row_pts) in pts.chunks_exact(p * d).enumerate() {
            taps.clear();
            ranges.clear();
            for x in row_pts.chunks_exact(d) {
                let start = taps.len();
                match &*self.inner {
                    Encoder::Grid(grid) => grid.taps(x, &mut taps),
                    Encoder::Hash(hash) => hash.taps(x, &mut taps),
                    _ => unreachable!(),
                }
                ranges.push(start..taps.len());
            }
            let mut offset = 0;
            for seg in &plan {
                for &(point, src) in &seg.sources {
                    g.push(r, offset, src, seg.len, &taps[ranges[point].clone()]);
                }
                offset += seg.len;
            }
        }
        tape.gather(store, g)
    }
}
