use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::tensor::{ParamId, ParamStore};
use crate::error::{bail, Result};
use crate::Error;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

/// One weighted row of a parameter table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    /// Row of the table.
    pub index: u32,
    /// Multiplier applied to the row.
    pub weight: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    row: u32,
    out_col: u32,
    src_col: u32,
    len: u32,
    taps_start: u32,
    taps_end: u32,
}

/// Sparse weighted lookup into a parameter table viewed as `rows x row_width`.
///
/// Each segment adds `sum_t w_t * table[index_t, (src_col + j) mod row_width]`
/// into `out[row, out_col + j]` for `j < len`. Grid interpolation, hash
/// lookups, concatenation grids and partial (circular) latent slices are all
/// expressed this way, so only the requested channels are ever read.
#[derive(Debug, Clone)]
pub struct Gather {
    table: ParamId,
    row_width: usize,
    rows: usize,
    cols: usize,
    segments: Vec<Segment>,
    taps: Vec<Tap>,
}

impl Gather {
    /// Empty gather producing a `rows x cols` output from `table`.
    pub fn new(table: ParamId, row_width: usize, rows: usize, cols: usize) -> Self {
        Self {
            table,
            row_width,
            rows,
            cols,
            segments: Vec::new(),
            taps: Vec::new(),
        }
    }

    /// Add a segment; see the type docs for its meaning.
    pub fn push(&mut self, row: usize, out_col: usize, src_col: usize, len: usize, taps: &[Tap]) {
        debug_assert!(row < self.rows && out_col + len <= self.cols && len <= self.row_width);
        let start = self.taps.len() as u32;
        self.taps.extend_from_slice(taps);
        self.segments.push(Segment {
            row: row as u32,
            out_col: out_col as u32,
            src_col: (src_col % self.row_width) as u32,
            len: len as u32,
            taps_start: start,
            taps_end: self.taps.len() as u32,
        });
    }

    fn validate(&self, store: &ParamStore) -> Result<()> {
        let (table_rows, width) = store.get(self.table).rows_cols();
        if width != self.row_width {
            bail!(Config, "gather row width {} does not match table width {}", self.row_width, width);
        }
        if let Some(t) = self.taps.iter().find(|t| t.index as usize >= table_rows) {
            bail!(Config, "gather index {} outside table of {} rows", t.index, table_rows);
        }
        Ok(())
    }
}

/// Linear column recombination: output column `j` is the sum of the listed source columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMap {
    starts: Vec<u32>,
    sources: Vec<u32>,
}

impl ColumnMap {
    /// Build from one source list per output column.
    pub fn new<I, J>(columns: I) -> Self
    where
        I: IntoIterator<Item = J>,
        J: IntoIterator<Item = usize>,
    {
        let mut starts = vec![0u32];
        let mut sources = Vec::new();
        for col in columns {
            sources.extend(col.into_iter().map(|c| c as u32));
            starts.push(sources.len() as u32);
        }
        Self { starts, sources }
    }

    /// Number of output columns.
    pub fn out_cols(&self) -> usize {
        self.starts.len() - 1
    }

    /// Sources feeding output column `j`.
    pub fn sources(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.sources[self.starts[j] as usize..self.starts[j + 1] as usize]
            .iter()
            .map(|&c| c as usize)
    }

    fn max_source(&self) -> Option<usize> {
        self.sources.iter().map(|&c| c as usize).max()
    }
}

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(ParamId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    MatMul(NodeId, NodeId),
    AddBias(NodeId, NodeId),
    Sin(NodeId),
    Cos(NodeId),
    Abs(NodeId),
    LeakyRelu(NodeId, f64),
    Gelu(NodeId),
    Silu(NodeId),
    Sum(NodeId),
    Mean(NodeId),
    Concat(Vec<NodeId>),
    Reshape(NodeId),
    Columns(NodeId, ColumnMap),
    Gather(Gather),
}

impl Op {
    fn for_each_input(&self, mut f: impl FnMut(NodeId)) {
        match self {
            Op::Constant | Op::Param(_) | Op::Gather(_) => {}
            Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::MatMul(a, b) | Op::AddBias(a, b) => {
                f(*a);
                f(*b);
            }
            Op::Scale(a, _)
            | Op::Sin(a)
            | Op::Cos(a)
            | Op::Abs(a)
            | Op::LeakyRelu(a, _)
            | Op::Gelu(a)
            | Op::Silu(a)
            | Op::Sum(a)
            | Op::Mean(a)
            | Op::Reshape(a)
            | Op::Columns(a, _) => f(*a),
            Op::Concat(parts) => parts.iter().copied().for_each(f),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Op::Constant => "constant",
            Op::Param(_) => "param",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::MatMul(..) => "matmul",
            Op::AddBias(..) => "add_bias",
            Op::Sin(_) => "sin",
            Op::Cos(_) => "cos",
            Op::Abs(_) => "abs",
            Op::LeakyRelu(..) => "leaky_relu",
            Op::Gelu(_) => "gelu",
            Op::Silu(_) => "silu",
            Op::Sum(_) => "sum",
            Op::Mean(_) => "mean",
            Op::Concat(_) => "concat",
            Op::Reshape(_) => "reshape",
            Op::Columns(..) => "column_map",
            Op::Gather(_) => "gather",
        }
    }
}

#[derive(Debug, Clone)]
struct Node {
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    op: Op,
    needs_grad: bool,
}

/// Dynamic reverse-mode tape over row-major `f64` matrices.
///
/// Record a forward pass with the builder methods, then call
/// [`Tape::backward`] on a `1 x 1` node to accumulate gradients into the
/// [`ParamStore`]. Tapes are cheap and meant to be rebuilt for every batch.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

const SQRT_2: f64 = core::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / SQRT_2))
}

fn gelu_grad(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / SQRT_2)) + x * INV_SQRT_2PI * libm::exp(-0.5 * x * x)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `c (m x n) = beta * c + a (m x k) * b (k x n)` with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    assert!(m == 0 || k == 0 || a.len() > (m - 1) * rsa + (k - 1) * csa);
    assert!(k == 0 || n == 0 || b.len() > (k - 1) * rsb + (n - 1) * csb);
    assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the asserts above bound every index the kernel touches.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl Tape {
    #[allow(missing_docs)]
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[allow(missing_docs)]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Forward value of a node, row-major.
    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id.0].value
    }

    /// `(rows, cols)` of a node.
    pub fn shape(&self, id: NodeId) -> (usize, usize) {
        let n = &self.nodes[id.0];
        (n.rows, n.cols)
    }

    /// Take ownership of a node's value (leaves a zero-length hole).
    pub fn take_value(&mut self, id: NodeId) -> Vec<f64> {
        core::mem::take(&mut self.nodes[id.0].value)
    }

    fn push(&mut self, rows: usize, cols: usize, value: Vec<f64>, op: Op, needs_grad: bool) -> NodeId {
        debug_assert_eq!(value.len(), rows * cols);
        self.nodes.push(Node {
            rows,
            cols,
            value,
            op,
            needs_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].needs_grad
    }

    /// Non-differentiable input.
    pub fn constant(&mut self, rows: usize, cols: usize, values: Vec<f64>) -> Result<NodeId> {
        if values.len() != rows * cols {
            bail!(Config, "constant of shape {}x{} given {} values", rows, cols, values.len());
        }
        Ok(self.push(rows, cols, values, Op::Constant, false))
    }

    /// Leaf holding a copy of a parameter, viewed as a matrix (last axis = columns).
    pub fn param(&mut self, store: &ParamStore, id: ParamId) -> NodeId {
        let p = store.get(id);
        let (rows, cols) = p.rows_cols();
        let needs = p.requires_grad();
        self.push(rows, cols, p.values().to_vec(), Op::Param(id), needs)
    }

    fn same_shape(&self, a: NodeId, b: NodeId, what: &str) -> Result<(usize, usize)> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            bail!(Config, "{}: shape mismatch {:?} vs {:?}", what, sa, sb);
        }
        Ok(sa)
    }

    fn zip(&mut self, a: NodeId, b: NodeId, op: Op, f: impl Fn(f64, f64) -> f64) -> Result<NodeId> {
        let (rows, cols) = self.same_shape(a, b, op.name())?;
        let value = self.nodes[a.0]
            .value
            .iter()
            .zip(&self.nodes[b.0].value)
            .map(|(&x, &y)| f(x, y))
            .collect();
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(rows, cols, value, op, needs))
    }

    fn map(&mut self, a: NodeId, op: Op, f: impl Fn(f64) -> f64) -> NodeId {
        let (rows, cols) = self.shape(a);
        let value = self.nodes[a.0].value.iter().map(|&x| f(x)).collect();
        let needs = self.needs(a);
        self.push(rows, cols, value, op, needs)
    }

    /// Elementwise `a + b`.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.zip(a, b, Op::Add(a, b), |x, y| x + y)
    }

    /// Elementwise `a - b`.
    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.zip(a, b, Op::Sub(a, b), |x, y| x - y)
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.zip(a, b, Op::Mul(a, b), |x, y| x * y)
    }

    /// `c * a` for a constant scalar `c`.
    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        self.map(a, Op::Scale(a, c), |x| c * x)
    }

    #[allow(missing_docs)]
    pub fn sin(&mut self, a: NodeId) -> NodeId {
        self.map(a, Op::Sin(a), libm::sin)
    }

    #[allow(missing_docs)]
    pub fn cos(&mut self, a: NodeId) -> NodeId {
        self.map(a, Op::Cos(a), libm::cos)
    }

    /// Elementwise absolute value; the derivative at 0 is taken as 0.
    pub fn abs(&mut self, a: NodeId) -> NodeId {
        self.map(a, Op::Abs(a), libm::fabs)
    }

    #[allow(missing_docs)]
    pub fn leaky_relu(&mut self, a: NodeId, slope: f64) -> NodeId {
        self.map(a, Op::LeakyRelu(a, slope), |x| if x > 0.0 { x } else { slope * x })
    }

    /// Exact (erf) GELU.
    pub fn gelu(&mut self, a: NodeId) -> NodeId {
        self.map(a, Op::Gelu(a), gelu)
    }

    /// `x * sigmoid(x)`.
    pub fn silu(&mut self, a: NodeId) -> NodeId {
        self.map(a, Op::Silu(a), |x| x * sigmoid(x))
    }

    /// Matrix product `a (m x k) * b (k x n)`.
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let ((m, k), (k2, n)) = (self.shape(a), self.shape(b));
        if k != k2 {
            bail!(Config, "matmul: inner dimensions {} and {} differ", k, k2);
        }
        let mut value = vec![0.0; m * n];
        gemm(m, k, n, &self.nodes[a.0].value, (k, 1), &self.nodes[b.0].value, (n, 1), 0.0, &mut value);
        let needs = self.needs(a) || self.needs(b);
        Ok(self.push(m, n, value, Op::MatMul(a, b), needs))
    }

    /// Add a `1 x n` row to every row of `a`.
    pub fn add_bias(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        let ((m, n), (br, bc)) = (self.shape(a), self.shape(bias));
        if br * bc != n {
            bail!(Config, "add_bias: bias of {} values for {} columns", br * bc, n);
        }
        let b = &self.nodes[bias.0].value;
        let mut value = self.nodes[a.0].value.clone();
        for row in value.chunks_exact_mut(n.max(1)) {
            row.iter_mut().zip(b).for_each(|(v, &bv)| *v += bv);
        }
        let needs = self.needs(a) || self.needs(bias);
        Ok(self.push(m, n, value, Op::AddBias(a, bias), needs))
    }

    /// Sum of all entries, `1 x 1`.
    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let s = self.nodes[a.0].value.iter().sum();
        let needs = self.needs(a);
        self.push(1, 1, vec![s], Op::Sum(a), needs)
    }

    /// Mean of all entries, `1 x 1`.
    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let v = &self.nodes[a.0].value;
        let s = v.iter().sum::<f64>() / v.len().max(1) as f64;
        let needs = self.needs(a);
        self.push(1, 1, vec![s], Op::Mean(a), needs)
    }

    /// Horizontal concatenation of equally tall matrices.
    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        let Some(&first) = parts.first() else {
            bail!(Config, "concat of zero parts");
        };
        let rows = self.shape(first).0;
        if let Some(bad) = parts.iter().find(|p| self.shape(**p).0 != rows) {
            bail!(Config, "concat: {} rows vs {}", self.shape(*bad).0, rows);
        }
        let cols: usize = parts.iter().map(|p| self.shape(*p).1).sum();
        let mut value = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for p in parts {
                let c = self.nodes[p.0].cols;
                value.extend_from_slice(&self.nodes[p.0].value[r * c..(r + 1) * c]);
            }
        }
        let needs = parts.iter().any(|p| self.needs(*p));
        Ok(self.push(rows, cols, value, Op::Concat(parts.to_vec()), needs))
    }

    /// Reinterpret the row-major data under a new shape with the same element count.
    pub fn reshape(&mut self, a: NodeId, rows: usize, cols: usize) -> Result<NodeId> {
        let (r, c) = self.shape(a);
        if r * c != rows * cols {
            bail!(Config, "reshape {}x{} into {}x{}", r, c, rows, cols);
        }
        let value = self.nodes[a.0].value.clone();
        let needs = self.needs(a);
        Ok(self.push(rows, cols, value, Op::Reshape(a), needs))
    }

    /// Recombine the columns of `a` per `map`.
    pub fn column_map(&mut self, a: NodeId, map: ColumnMap) -> Result<NodeId> {
        let (rows, cols) = self.shape(a);
        if map.max_source().is_some_and(|m| m >= cols) {
            bail!(Config, "column map reads past column {}", cols);
        }
        let out_cols = map.out_cols();
        let src = &self.nodes[a.0].value;
        let mut value = vec![0.0; rows * out_cols];
        for (r, out) in value.chunks_exact_mut(out_cols.max(1)).enumerate().take(rows) {
            let row = &src[r * cols..(r + 1) * cols];
            for (j, o) in out.iter_mut().enumerate() {
                *o = map.sources(j).map(|s| row[s]).sum();
            }
        }
        let needs = self.needs(a);
        Ok(self.push(rows, out_cols, value, Op::Columns(a, map), needs))
    }

    /// Evaluate a [`Gather`] against the current table values.
    pub fn gather(&mut self, store: &ParamStore, g: Gather) -> Result<NodeId> {
        g.validate(store)?;
        let table = store.get(g.table);
        let w = g.row_width;
        let values = table.values();
        let mut out = vec![0.0; g.rows * g.cols];
        for s in &g.segments {
            let base = s.row as usize * g.cols + s.out_col as usize;
            let dst = &mut out[base..base + s.len as usize];
            let src_col = s.src_col as usize;
            let first = (w - src_col).min(dst.len());
            for tap in &g.taps[s.taps_start as usize..s.taps_end as usize] {
                let row = &values[tap.index as usize * w..(tap.index as usize + 1) * w];
                let (d0, d1) = dst.split_at_mut(first);
                d0.iter_mut().zip(&row[src_col..]).for_each(|(d, &v)| *d += tap.weight * v);
                d1.iter_mut().zip(row).for_each(|(d, &v)| *d += tap.weight * v);
            }
        }
        let needs = table.requires_grad();
        Ok(self.push(g.rows, g.cols, out, Op::Gather(g), needs))
    }

    /// Reverse pass from a `1 x 1` node; gradients are added to `store`.
    pub fn backward(&self, output: NodeId, store: &mut ParamStore) -> Result<()> {
        if self.shape(output) != (1, 1) {
            return Err(Error::Contract(format!(
                "backward needs a scalar output, got shape {:?}",
                self.shape(output)
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; output.0 + 1];
        grads[output.0] = Some(vec![1.0]);

        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            self.propagate(idx, &g, &mut grads, store);
            let mut fault = None;
            node.op.for_each_input(|child| {
                if fault.is_none() {
                    if let Some(pos) = grads[child.0].as_ref().and_then(|cg| cg.iter().position(|v| v.is_nan())) {
                        fault = Some((child.0, pos));
                    }
                }
            });
            if fault.is_none() {
                if let Op::Param(id) | Op::Gather(Gather { table: id, .. }) = &node.op {
                    if let Some(pos) = store.get(*id).grad().iter().position(|v| v.is_nan()) {
                        fault = Some((idx, pos));
                    }
                }
            }
            if let Some((target, pos)) = fault {
                return Err(Error::NumericFault {
                    op: node.op.name(),
                    detail: format!("NaN gradient at element {} flowing from node {} into node {}", pos, idx, target),
                });
            }
        }
        Ok(())
    }

    fn propagate(&self, idx: usize, g: &[f64], grads: &mut [Option<Vec<f64>>], store: &mut ParamStore) {
        let node = &self.nodes[idx];
        match &node.op {
            Op::Constant => {}
            Op::Param(id) => {
                let p = store.get_mut(*id);
                if p.requires_grad() {
                    p.grad_mut().iter_mut().zip(g).for_each(|(a, b)| *a += b);
                }
            }
            Op::Add(a, b) => {
                self.acc_map(grads, *a, g, |_, gi| gi);
                self.acc_map(grads, *b, g, |_, gi| gi);
            }
            Op::Sub(a, b) => {
                self.acc_map(grads, *a, g, |_, gi| gi);
                self.acc_map(grads, *b, g, |_, gi| -gi);
            }
            Op::Mul(a, b) => {
                let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                self.acc_map(grads, *a, g, |i, gi| gi * vb[i]);
                self.acc_map(grads, *b, g, |i, gi| gi * va[i]);
            }
            Op::Scale(a, c) => self.acc_map(grads, *a, g, |_, gi| c * gi),
            Op::Sin(a) => {
                let x = &self.nodes[a.0].value;
                self.acc_map(grads, *a, g, |i, gi| gi * libm::cos(x[i]));
            }
            Op::Cos(a) => {
                let x = &self.nodes[a.0].value;
                self.acc_map(grads, *a, g, |i, gi| -gi * libm::sin(x[i]));
            }
            Op::Abs(a) => {
                let x = &self.nodes[a.0].value;
                self.acc_map(grads, *a, g, |i, gi| gi * sign(x[i]));
            }
            Op::LeakyRelu(a, slope) => {
                let x = &self.nodes[a.0].value;
                self.acc_map(grads, *a, g, |i, gi| if x[i] > 0.0 { gi } else { slope * gi });
            }
            Op::Gelu(a) => {
                let x = &self.nodes[a.0].value;
                self.acc_map(grads, *a, g, |i, gi| gi * gelu_grad(x[i]));
            }
            Op::Silu(a) => {
                let x = &self.nodes[a.0].value;
                self.acc_map(grads, *a, g, |i, gi| {
                    let s = sigmoid(x[i]);
                    gi * (s + x[i] * s * (1.0 - s))
                });
            }
            Op::Sum(a) => self.acc_fill(grads, *a, g[0]),
            Op::Mean(a) => {
                let n = self.nodes[a.0].value.len().max(1) as f64;
                self.acc_fill(grads, *a, g[0] / n);
            }
            Op::MatMul(a, b) => {
                let (m, k) = self.shape(*a);
                let n = self.shape(*b).1;
                if self.needs(*a) {
                    let vb = &self.nodes[b.0].value;
                    let slot = self.slot(grads, *a);
                    // dA += dC * B^T
                    gemm(m, n, k, g, (n, 1), vb, (1, n), 1.0, slot);
                }
                if self.needs(*b) {
                    let va = &self.nodes[a.0].value;
                    let slot = self.slot(grads, *b);
                    // dB += A^T * dC
                    gemm(k, m, n, va, (1, k), g, (n, 1), 1.0, slot);
                }
            }
            Op::AddBias(a, bias) => {
                self.acc_map(grads, *a, g, |_, gi| gi);
                if self.needs(*bias) {
                    let n = node.cols;
                    let slot = self.slot(grads, *bias);
                    for row in g.chunks_exact(n.max(1)) {
                        slot.iter_mut().zip(row).for_each(|(s, &r)| *s += r);
                    }
                }
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for p in parts {
                    let c = self.nodes[p.0].cols;
                    if self.needs(*p) {
                        let slot = self.slot(grads, *p);
                        for r in 0..node.rows {
                            let src = &g[r * node.cols + offset..r * node.cols + offset + c];
                            slot[r * c..(r + 1) * c].iter_mut().zip(src).for_each(|(s, &v)| *s += v);
                        }
                    }
                    offset += c;
                }
            }
            Op::Reshape(a) => self.acc_map(grads, *a, g, |_, gi| gi),
            Op::Columns(a, map) => {
                if self.needs(*a) {
                    let cols = self.nodes[a.0].cols;
                    let out_cols = node.cols;
                    let slot = self.slot(grads, *a);
                    for r in 0..node.rows {
                        for j in 0..out_cols {
                            let gv = g[r * out_cols + j];
                            for s in map.sources(j) {
                                slot[r * cols + s] += gv;
                            }
                        }
                    }
                }
            }
            Op::Gather(gather) => {
                let w = gather.row_width;
                let p = store.get_mut(gather.table);
                if !p.requires_grad() {
                    return;
                }
                let table_grad = p.grad_mut();
                for s in &gather.segments {
                    let base = s.row as usize * gather.cols + s.out_col as usize;
                    let src = &g[base..base + s.len as usize];
                    let src_col = s.src_col as usize;
                    let first = (w - src_col).min(src.len());
                    let (s0, s1) = src.split_at(first);
                    for tap in &gather.taps[s.taps_start as usize..s.taps_end as usize] {
                        let row = &mut table_grad[tap.index as usize * w..(tap.index as usize + 1) * w];
                        row[src_col..].iter_mut().zip(s0).for_each(|(d, &v)| *d += tap.weight * v);
                        row.iter_mut().zip(s1).for_each(|(d, &v)| *d += tap.weight * v);
                    }
                }
            }
        }
    }

    fn slot<'a>(&self, grads: &'a mut [Option<Vec<f64>>], id: NodeId) -> &'a mut Vec<f64> {
        let len = self.nodes[id.0].value.len();
        grads[id.0].get_or_insert_with(|| vec![0.0; len])
    }

    fn acc_fill(&self, grads: &mut [Option<Vec<f64>>], id: NodeId, v: f64) {
        if self.needs(id) {
            self.slot(grads, id).iter_mut().for_each(|s| *s += v);
        }
    }

    fn acc_map(&self, grads: &mut [Option<Vec<f64>>], id: NodeId, g: &[f64], f: impl Fn(usize, f64) -> f64) {
        if !self.needs(id) {
            return;
        }
        let slot = self.slot(grads, id);
        slot.iter_mut().zip(g).enumerate().for_each(|(i, (s, &gi))| *s += f(i, gi));
    }
}
