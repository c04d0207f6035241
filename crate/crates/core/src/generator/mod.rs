//! Fully-connected generator networks `G: R^k → R^n` with exact reverse-mode
//! gradients.

pub mod gpw1;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;
use crate::numkit::{Matrix, RngStream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneratorError {
    #[error("network has no layers")]
    Empty,
    #[error("zero-sized dimension in layer {layer}")]
    ZeroDim { layer: usize },
    #[error("layer {layer} expects input dim {expected}, previous layer produces {found}")]
    DimensionChain { layer: usize, expected: usize, found: usize },
    #[error("layer {layer}: bias length {bias} does not match output dim {out}")]
    BiasLength { layer: usize, bias: usize, out: usize },
    #[error("layer {layer} contains a non-finite parameter")]
    NonFinite { layer: usize },
    #[error("input has length {found}, expected {expected}")]
    InputDim { expected: usize, found: usize },
    #[error("tape does not belong to this network")]
    TapeMismatch,
}

/// Elementwise activation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Linear,
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub const ALL: [Activation; 4] =
        [Activation::Linear, Activation::Relu, Activation::Sigmoid, Activation::Tanh];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + math::exp(-x)),
            Activation::Tanh => math::tanh(x),
        }
    }

    /// Derivative given the pre-activation `x` and output `y = apply(x)`.
    /// The relu derivative at exactly zero is zero.
    #[inline]
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Activation::Linear => 0,
            Activation::Relu => 1,
            Activation::Sigmoid => 2,
            Activation::Tanh => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => Activation::Linear,
            1 => Activation::Relu,
            2 => Activation::Sigmoid,
            3 => Activation::Tanh,
            _ => return None,
        })
    }
}

/// One affine layer followed by an activation: `act(W x + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }
}

/// A validated chain of layers. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorNet {
    layers: Vec<Layer>,
}

/// Intermediates cached by [`GeneratorNet::forward`] for gradient replay.
#[derive(Clone, Debug)]
pub struct ForwardTape {
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl ForwardTape {
    pub fn input(&self) -> &[f64] {
        &self.input
    }

    /// Pre-activations of every layer.
    pub fn pre_activations(&self) -> &[Vec<f64>] {
        &self.pre
    }

    pub fn output(&self) -> &[f64] {
        self.post.last().map(|v| v.as_slice()).unwrap_or(&self.input)
    }

    pub fn into_output(mut self) -> Vec<f64> {
        self.post.pop().unwrap_or(self.input)
    }
}

impl GeneratorNet {
    pub fn new(layers: Vec<Layer>) -> Result<Self, GeneratorError> {
        if layers.is_empty() {
            return Err(GeneratorError::Empty);
        }
        for (i, l) in layers.iter().enumerate() {
            if l.in_dim() == 0 || l.out_dim() == 0 {
                return Err(GeneratorError::ZeroDim { layer: i });
            }
            if l.bias.len() != l.out_dim() {
                return Err(GeneratorError::BiasLength { layer: i, bias: l.bias.len(), out: l.out_dim() });
            }
            if i > 0 && layers[i - 1].out_dim() != l.in_dim() {
                return Err(GeneratorError::DimensionChain {
                    layer: i,
                    expected: l.in_dim(),
                    found: layers[i - 1].out_dim(),
                });
            }
            if !l.weight.is_finite() || !math::all_finite(&l.bias) {
                return Err(GeneratorError::NonFinite { layer: i });
            }
        }
        Ok(Self { layers })
    }

    /// Single linear layer `z ↦ W z` with zero bias.
    pub fn linear(weight: Matrix) -> Result<Self, GeneratorError> {
        let out = weight.rows();
        Self::new(vec![Layer { weight, bias: vec![0.0; out], activation: Activation::Linear }])
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn latent_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    /// Evaluates `G(z)` and records the intermediates.
    pub fn forward(&self, z: &[f64]) -> Result<(Vec<f64>, ForwardTape), GeneratorError> {
        let tape = self.forward_tape(z)?;
        let x = tape.output().to_vec();
        Ok((x, tape))
    }

    /// Like [`forward`](Self::forward) but returns only the tape; the output is
    /// available through [`ForwardTape::output`].
    pub fn forward_tape(&self, z: &[f64]) -> Result<ForwardTape, GeneratorError> {
        self.check_input(z)?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let h = post.last().map(|v| v.as_slice()).unwrap_or(z);
            let mut a = layer.weight.matvec(h);
            for (ai, bi) in a.iter_mut().zip(&layer.bias) {
                *ai += bi;
            }
            let out: Vec<f64> = a.iter().map(|&v| layer.activation.apply(v)).collect();
            pre.push(a);
            post.push(out);
        }
        Ok(ForwardTape { input: z.to_vec(), pre, post })
    }

    /// `G(z)` without keeping the tape.
    pub fn eval(&self, z: &[f64]) -> Result<Vec<f64>, GeneratorError> {
        self.forward_tape(z).map(ForwardTape::into_output)
    }

    /// Vector–Jacobian product `J_G(z)ᵀ u` at the taped `z`.
    pub fn vjp(&self, tape: &ForwardTape, cotangent: &[f64]) -> Result<Vec<f64>, GeneratorError> {
        if tape.pre.len() != self.layers.len()
            || tape.input.len() != self.latent_dim()
            || tape.pre.iter().zip(&self.layers).any(|(p, l)| p.len() != l.out_dim())
        {
            return Err(GeneratorError::TapeMismatch);
        }
        if cotangent.len() != self.output_dim() {
            return Err(GeneratorError::InputDim { expected: self.output_dim(), found: cotangent.len() });
        }
        let mut grad = cotangent.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let pre = &tape.pre[i];
            let post = &tape.post[i];
            for ((g, &a), &h) in grad.iter_mut().zip(pre).zip(post) {
                *g *= layer.activation.derivative(a, h);
            }
            grad = layer.weight.matvec_t(&grad);
        }
        Ok(grad)
    }

    fn check_input(&self, z: &[f64]) -> Result<(), GeneratorError> {
        if z.len() != self.latent_dim() {
            return Err(GeneratorError::InputDim { expected: self.latent_dim(), found: z.len() });
        }
        Ok(())
    }
}

/// Random net with weights `N(0, 1/in_dim)` and zero biases. Hidden layers use
/// `activation`; the output layer is linear.
pub fn synthetic_net(
    k: usize,
    hidden_dims: &[usize],
    n: usize,
    activation: Activation,
    rng: &mut RngStream,
) -> Result<GeneratorNet, GeneratorError> {
    synthetic_net_with_output(k, hidden_dims, n, activation, Activation::Linear, rng)
}

/// [`synthetic_net`] with an explicit output activation.
pub fn synthetic_net_with_output(
    k: usize,
    hidden_dims: &[usize],
    n: usize,
    activation: Activation,
    output_activation: Activation,
    rng: &mut RngStream,
) -> Result<GeneratorNet, GeneratorError> {
    let mut dims = Vec::with_capacity(hidden_dims.len() + 2);
    dims.push(k);
    dims.extend_from_slice(hidden_dims);
    dims.push(n);
    if let Some(i) = dims.iter().position(|&d| d == 0) {
        return Err(GeneratorError::ZeroDim { layer: i.saturating_sub(1) });
    }
    let last = dims.len() - 2;
    let layers = dims
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (d_in, d_out) = (w[0], w[1]);
            let sd = 1.0 / math::sqrt(d_in as f64);
            Layer {
                weight: Matrix::from_fn(d_out, d_in, |_, _| sd * rng.standard_normal()),
                bias: vec![0.0; d_out],
                activation: if i == last { output_activation } else { activation },
            }
        })
        .collect();
    GeneratorNet::new(layers)
}
