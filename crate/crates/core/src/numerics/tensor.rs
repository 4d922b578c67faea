use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};

/// Handle to a tensor inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    /// Position of the tensor in its store.
    pub fn index(self) -> usize {
        self.0
    }
}

/// Optimizer group; each group may run at its own learning rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    /// MLP weights and biases.
    Network,
    /// Encoder storage (grids, hash tables).
    Encoder,
}

/// A learnable row-major `f64` tensor with a gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    shape: Vec<usize>,
    values: Vec<f64>,
    grad: Vec<f64>,
    requires_grad: bool,
    group: ParamGroup,
}

impl ParamTensor {
    /// Zero-filled tensor.
    pub fn zeros(shape: &[usize], group: ParamGroup) -> Result<Self> {
        let len = checked_len(shape)?;
        Ok(Self::from_parts(shape, vec![0.0; len], group))
    }

    /// Tensor over existing values; `values.len()` must equal the shape product.
    pub fn from_values(shape: &[usize], values: Vec<f64>, group: ParamGroup) -> Result<Self> {
        let len = checked_len(shape)?;
        if values.len() != len {
            bail!(Config, "shape {:?} holds {} values, got {}", shape, len, values.len());
        }
        Ok(Self::from_parts(shape, values, group))
    }

    fn from_parts(shape: &[usize], values: Vec<f64>, group: ParamGroup) -> Self {
        let grad = vec![0.0; values.len()];
        Self {
            shape: shape.to_vec(),
            values,
            grad,
            requires_grad: true,
            group,
        }
    }

    /// Shape, outermost axis first.
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of scalar entries.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when the tensor holds no entries (never, for valid shapes).
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Matrix view: the last axis is the column count.
    pub fn rows_cols(&self) -> (usize, usize) {
        let cols = *self.shape.last().unwrap_or(&1);
        (self.values.len() / cols, cols)
    }

    #[allow(missing_docs)]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[allow(missing_docs)]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[allow(missing_docs)]
    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    #[allow(missing_docs)]
    pub fn grad_mut(&mut self) -> &mut [f64] {
        &mut self.grad
    }

    /// Split borrow used by optimizers.
    pub fn values_and_grad(&mut self) -> (&mut [f64], &[f64]) {
        (&mut self.values, &self.grad)
    }

    /// Reset the gradient accumulator to exactly zero.
    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }

    #[allow(missing_docs)]
    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    /// Frozen tensors are skipped by backward passes and optimizers.
    pub fn set_requires_grad(&mut self, on: bool) {
        self.requires_grad = on;
    }

    #[allow(missing_docs)]
    pub fn group(&self) -> ParamGroup {
        self.group
    }
}

fn checked_len(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.contains(&0) {
        bail!(Config, "tensor shape must be non-empty with positive extents, got {:?}", shape);
    }
    shape
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .ok_or_else(|| crate::Error::Config(alloc::format!("tensor shape {:?} overflows", shape)))
}

/// Owner of every learnable tensor of a model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<ParamTensor>,
}

impl ParamStore {
    #[allow(missing_docs)]
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a tensor and return its handle.
    pub fn add(&mut self, tensor: ParamTensor) -> ParamId {
        self.params.push(tensor);
        ParamId(self.params.len() - 1)
    }

    /// Panics on a handle from another store.
    pub fn get(&self, id: ParamId) -> &ParamTensor {
        &self.params[id.0]
    }

    #[allow(missing_docs)]
    pub fn get_mut(&mut self, id: ParamId) -> &mut ParamTensor {
        &mut self.params[id.0]
    }

    #[allow(missing_docs)]
    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &ParamTensor)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    #[allow(missing_docs)]
    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut ParamTensor> {
        self.params.iter_mut()
    }

    /// Number of tensors.
    pub fn len(&self) -> usize {
        self.params.len()
    }

    #[allow(missing_docs)]
    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total scalar parameter count.
    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(ParamTensor::len).sum()
    }

    /// Zero every gradient accumulator.
    pub fn zero_grad(&mut self) {
        self.params.iter_mut().for_each(ParamTensor::zero_grad);
    }

    /// L2 norm of the concatenated gradients.
    pub fn grad_norm(&self) -> f64 {
        libm::sqrt(self.params.iter().flat_map(|p| p.grad.iter()).map(|g| g * g).sum())
    }

    /// All values, tensors in registration order.
    pub fn flat_values(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.values.iter().copied()).collect()
    }

    /// Overwrite all values from a flat slice produced by [`Self::flat_values`].
    pub fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.scalar_count() {
            bail!(Config, "store holds {} values, payload has {}", self.scalar_count(), flat.len());
        }
        let mut rest = flat;
        for p in &mut self.params {
            let (head, tail) = rest.split_at(p.values.len());
            p.values.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    /// Round every value through `f32`, as stored in checkpoints.
    pub fn round_to_f32(&mut self) {
        for p in &mut self.params {
            p.values.iter_mut().for_each(|v| *v = *v as f32 as f64);
        }
    }
}
