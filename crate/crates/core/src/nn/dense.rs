use rand::Rng;

use super::matrix::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "identity" => Some(Activation::Identity),
            "relu" => Some(Activation::Relu),
            _ => None,
        }
    }

    #[inline]
    pub(crate) fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Identity => v,
            Activation::Relu => v.max(0.0),
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    pub(crate) fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Fully connected layer `y = act(W x + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseParams {
    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        Self {
            weights: Matrix::zeros(output, input),
            bias: vec![0.0; output],
            activation,
        }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn init<R: Rng + ?Sized>(input: usize, output: usize, activation: Activation, rng: &mut R) -> Self {
        let mut d = Self::zeros(input, output, activation);
        let lim = (6.0 / (input + output) as f64).sqrt();
        for w in d.weights.as_mut_slice() {
            *w = rng.gen_range(-lim..lim);
        }
        d
    }

    pub fn input_size(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_size(&self) -> usize {
        self.weights.rows()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.bias.len() != self.weights.rows() {
            return Err(Error::Dimension {
                what: "dense bias".into(),
                expected: self.weights.rows(),
                got: self.bias.len(),
            });
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn forward_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.bias);
        self.weights.matvec_acc(x, out);
        let act = self.activation;
        out.iter_mut().for_each(|v| *v = act.apply(*v));
    }
}
