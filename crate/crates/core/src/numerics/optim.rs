use alloc::vec;
use alloc::vec::Vec;

use super::tensor::{ParamGroup, ParamStore, ParamTensor};
use crate::error::{bail, Result};

/// Adam hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    #[allow(missing_docs)]
    pub beta1: f64,
    #[allow(missing_docs)]
    pub beta2: f64,
    #[allow(missing_docs)]
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
    config: AdamConfig,
}

impl AdamState {
    /// Fresh state for a tensor of `len` entries.
    pub fn new(len: usize, config: AdamConfig) -> Self {
        Self {
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            step_count: 0,
            config,
        }
    }

    /// Updates applied so far.
    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    #[allow(missing_docs)]
    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    #[allow(missing_docs)]
    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    fn update(&mut self, values: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
        if values.len() != self.first_moment.len() || grad.len() != values.len() {
            bail!(
                Config,
                "adam state holds {} entries, parameter has {} (grad {})",
                self.first_moment.len(),
                values.len(),
                grad.len()
            );
        }
        self.step_count += 1;
        let AdamConfig { beta1, beta2, epsilon } = self.config;
        let t = self.step_count.min(i32::MAX as u64) as i32;
        let c1 = 1.0 - libm::pow(beta1, t as f64);
        let c2 = 1.0 - libm::pow(beta2, t as f64);
        for (((w, &g), m), v) in values
            .iter_mut()
            .zip(grad)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *w -= lr * m_hat / (libm::sqrt(v_hat) + epsilon);
        }
        Ok(())
    }
}

/// One bias-corrected Adam update of `param` from its accumulated gradient.
pub fn adam_step(param: &mut ParamTensor, state: &mut AdamState, lr: f64) -> Result<()> {
    let (values, grad) = param.values_and_grad();
    state.update(values, grad, lr)
}

/// Adam over a whole [`ParamStore`], with a learning rate per [`ParamGroup`].
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    states: Vec<AdamState>,
}

impl Adam {
    /// One state per tensor currently in `store`.
    pub fn new(store: &ParamStore, config: AdamConfig) -> Self {
        Self {
            states: store.iter().map(|(_, p)| AdamState::new(p.len(), config)).collect(),
        }
    }

    /// Update every trainable tensor; `lr` maps a group to its rate.
    pub fn step(&mut self, store: &mut ParamStore, lr: impl Fn(ParamGroup) -> f64) -> Result<()> {
        if self.states.len() != store.len() {
            bail!(Config, "optimizer tracks {} tensors, store has {}", self.states.len(), store.len());
        }
        for (param, state) in store.iter_mut().zip(&mut self.states) {
            if param.requires_grad() {
                let rate = lr(param.group());
                adam_step(param, state, rate)?;
            }
        }
        Ok(())
    }
}

/// Cosine annealing from `base_lr` at step 0 to `min_lr` at `total_steps`.
pub fn cosine_lr(step: usize, total_steps: usize, base_lr: f64, min_lr: f64) -> Result<f64> {
    if total_steps == 0 {
        bail!(Range, "total_steps must be at least 1");
    }
    if step > total_steps {
        bail!(Range, "step {} beyond total_steps {}", step, total_steps);
    }
    let phase = core::f64::consts::PI * step as f64 / total_steps as f64;
    Ok(min_lr + 0.5 * (base_lr - min_lr) * (1.0 + libm::cos(phase)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(w: f64) -> ParamTensor {
        ParamTensor::from_values(&[1], vec![w], ParamGroup::Network).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut p = ParamTensor::from_values(&[3], vec![0.1, -2.0, 5.0], ParamGroup::Network).unwrap();
        let mut s = AdamState::new(3, AdamConfig::default());
        for _ in 0..5 {
            adam_step(&mut p, &mut s, 0.1).unwrap();
        }
        assert_eq!(p.values(), &[0.1, -2.0, 5.0]);
        assert_eq!(s.step_count(), 5);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m_hat = g, v_hat = g^2, so the first update is lr * g / (|g| + eps).
        let mut p = scalar(1.0);
        p.grad_mut()[0] = 1.0;
        let mut s = AdamState::new(1, AdamConfig::default());
        adam_step(&mut p, &mut s, 0.1).unwrap();
        let expected = 1.0 - 0.1 / (1.0 + 1e-8);
        assert!((p.values()[0] - expected).abs() < 1e-15);
        assert!((p.values()[0] - 0.9).abs() < 1e-8);
    }

    /// Scalar Adam recurrence written out independently of the implementation.
    fn oracle_quadratic(steps: usize, lr: f64) -> f64 {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let (mut w, mut m, mut v) = (0.0f64, 0.0, 0.0);
        for t in 1..=steps {
            let g = 2.0 * (w - 3.0);
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t as i32));
            let vh = v / (1.0 - b2.powi(t as i32));
            w -= lr * mh / (vh.sqrt() + eps);
        }
        w
    }

    #[test]
    fn converges_on_shifted_quadratic() {
        let mut p = scalar(0.0);
        let mut s = AdamState::new(1, AdamConfig::default());
        for _ in 0..100 {
            let w = p.values()[0];
            p.grad_mut()[0] = 2.0 * (w - 3.0);
            adam_step(&mut p, &mut s, 0.3).unwrap();
        }
        let w = p.values()[0];
        let oracle = oracle_quadratic(100, 0.3);
        assert!((w - oracle).abs() < 1e-12, "{w} vs {oracle}");
        assert!((w - 3.0).abs() < 0.1, "w = {w}");
    }

    #[test]
    fn shape_mismatch_is_config_error() {
        let mut p = scalar(1.0);
        let mut s = AdamState::new(2, AdamConfig::default());
        assert!(matches!(adam_step(&mut p, &mut s, 0.1), Err(crate::Error::Config(_))));
    }

    #[test]
    fn groups_get_their_own_rate() {
        let mut store = ParamStore::new();
        let a = store.add(scalar(1.0));
        let b = store.add(ParamTensor::from_values(&[1], vec![1.0], ParamGroup::Encoder).unwrap());
        store.get_mut(a).grad_mut()[0] = 1.0;
        store.get_mut(b).grad_mut()[0] = 1.0;
        let mut adam = Adam::new(&store, AdamConfig::default());
        adam.step(&mut store, |g| if g == ParamGroup::Encoder { 0.5 } else { 0.1 }).unwrap();
        assert!((store.get(a).values()[0] - 0.9).abs() < 1e-7);
        assert!((store.get(b).values()[0] - 0.5).abs() < 1e-7);
    }

    #[test]
    fn cosine_endpoints() {
        assert_eq!(cosine_lr(0, 100, 0.1, 0.001).unwrap(), 0.1);
        assert!((cosine_lr(100, 100, 0.1, 0.001).unwrap() - 0.001).abs() < 1e-15);
        assert!((cosine_lr(50, 100, 0.1, 0.0).unwrap() - 0.05).abs() < 1e-15);
        assert!(cosine_lr(101, 100, 0.1, 0.0).is_err());
        assert!(cosine_lr(0, 0, 0.1, 0.0).is_err());
    }
}
