use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Result};
use crate::kv::Section;
use crate::numerics::{NodeId, ParamGroup, ParamId, ParamStore, ParamTensor, Tape};

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    #[allow(missing_docs)]
    LeakyRelu { slope: f64 },
    /// Exact (erf) GELU.
    Gelu,
    #[allow(missing_docs)]
    Silu,
}

impl Activation {
    /// Config spelling.
    pub fn name(&self) -> &'static str {
        match self {
            Activation::LeakyRelu { .. } => "leaky_relu",
            Activation::Gelu => "gelu",
            Activation::Silu => "silu",
        }
    }

    fn apply(&self, tape: &mut Tape, x: NodeId) -> NodeId {
        match *self {
            Activation::LeakyRelu { slope } => tape.leaky_relu(x, slope),
            Activation::Gelu => tape.gelu(x),
            Activation::Silu => tape.silu(x),
        }
    }
}

/// MLP shape; the input size comes from the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    #[allow(missing_docs)]
    pub input_dim: usize,
    #[allow(missing_docs)]
    pub hidden_layers: usize,
    #[allow(missing_docs)]
    pub hidden_width: usize,
    #[allow(missing_docs)]
    pub output_dim: usize,
    #[allow(missing_docs)]
    pub activation: Activation,
}

impl MlpConfig {
    /// Three hidden layers of 64 with leaky ReLU (slope 0.01).
    pub fn new(input_dim: usize, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden_layers: 3,
            hidden_width: 64,
            output_dim,
            activation: Activation::LeakyRelu { slope: 0.01 },
        }
    }

    /// Layer widths from input to output.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = alloc::vec![self.input_dim];
        w.extend(core::iter::repeat_n(self.hidden_width, self.hidden_layers));
        w.push(self.output_dim);
        w
    }

    /// Weights plus biases.
    pub fn param_count(&self) -> usize {
        self.widths().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    #[allow(missing_docs)]
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            bail!(Config, "MLP input and output sizes must be positive");
        }
        if self.hidden_layers > 0 && self.hidden_width == 0 {
            bail!(Config, "hidden width must be positive");
        }
        if let Activation::LeakyRelu { slope } = self.activation {
            if !slope.is_finite() {
                bail!(Config, "leaky ReLU slope must be finite");
            }
        }
        Ok(())
    }

    /// Write everything except `input_dim`, which is derived.
    pub fn write_kv(&self, s: &mut Section) {
        s.set("hidden_layers", self.hidden_layers);
        s.set("hidden_width", self.hidden_width);
        s.set("output_dim", self.output_dim);
        s.set("activation", self.activation.name());
        if let Activation::LeakyRelu { slope } = self.activation {
            s.set("slope", slope);
        }
    }

    /// Read a section; `output_dim` falls back to `default_output` when absent.
    pub fn read_kv(s: &Section, input_dim: usize, default_output: Option<usize>) -> Result<Self> {
        let activation = match s.get("activation").unwrap_or("leaky_relu") {
            "leaky_relu" => Activation::LeakyRelu {
                slope: s.parse_or("slope", 0.01)?,
            },
            "gelu" => Activation::Gelu,
            "silu" => Activation::Silu,
            other => return Err(s.error("activation", format!("unknown activation `{other}`"))),
        };
        let output_dim = match (s.parse::<usize>("output_dim")?, default_output) {
            (Some(o), _) | (None, Some(o)) => o,
            (None, None) => s.require("output_dim")?,
        };
        let cfg = Self {
            input_dim,
            hidden_layers: s.parse_or("hidden_layers", 3)?,
            hidden_width: s.parse_or("hidden_width", 64)?,
            output_dim,
            activation,
        };
        cfg.validate().map_err(|e| s.error("hidden_width", e))?;
        Ok(cfg)
    }
}

/// Affine layers with the activation between them and a linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    config: MlpConfig,
    layers: Vec<(ParamId, ParamId)>,
}

impl Mlp {
    /// Weights and biases drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn new(store: &mut ParamStore, config: MlpConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let mut layers = Vec::new();
        for w in config.widths().windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / libm::sqrt(fan_in as f64);
            let weights = (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..bound)).collect();
            let bias = (0..fan_out).map(|_| rng.gen_range(-bound..bound)).collect();
            let wid = store.add(ParamTensor::from_values(&[fan_in, fan_out], weights, ParamGroup::Network)?);
            let bid = store.add(ParamTensor::from_values(&[fan_out], bias, ParamGroup::Network)?);
            layers.push((wid, bid));
        }
        Ok(Self { config, layers })
    }

    #[allow(missing_docs)]
    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    /// `(weight, bias)` per layer; weights are `fan_in x fan_out`.
    pub fn layers(&self) -> &[(ParamId, ParamId)] {
        &self.layers
    }

    /// Record the network on a `rows x input_dim` node.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, input: NodeId) -> Result<NodeId> {
        if tape.shape(input).1 != self.config.input_dim {
            bail!(
                Config,
                "MLP expects {} input features, got {}",
                self.config.input_dim,
                tape.shape(input).1
            );
        }
        let mut h = input;
        let last = self.layers.len() - 1;
        for (i, &(w, b)) in self.layers.iter().enumerate() {
            let wn = tape.param(store, w);
            let bn = tape.param(store, b);
            let z = tape.matmul(h, wn)?;
            h = tape.add_bias(z, bn)?;
            if i < last {
                h = self.config.activation.apply(tape, h);
            }
        }
        Ok(h)
    }
}

/// Run `mlp` on one feature vector.
pub fn mlp_forward(store: &ParamStore, mlp: &Mlp, features: &[f64]) -> Result<Vec<f64>> {
    if features.len() != mlp.config.input_dim {
        bail!(
            Config,
            "MLP expects {} input features, got {}",
            mlp.config.input_dim,
            features.len()
        );
    }
    let mut tape = Tape::new();
    let x = tape.constant(1, features.len(), features.to_vec())?;
    let y = mlp.forward(&mut tape, store, x)?;
    Ok(tape.take_value(y))
}
