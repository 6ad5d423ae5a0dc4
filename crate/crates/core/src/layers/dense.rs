use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autograd::{Tape, Tensor, Var};
use crate::error::Result;
use crate::scalar::Scalar;

use super::init::{glorot_uniform, zeros_param};
use super::Parameterized;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

/// Fully connected layer `g(W h + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    pub activation: Activation,
}

#[derive(Debug, Clone, Copy)]
pub struct BoundDense {
    pub weight: Var,
    pub bias: Var,
    pub activation: Activation,
}

impl BoundDense {
    pub fn vars(&self) -> Vec<Var> {
        vec![self.weight, self.bias]
    }
}

impl<T: Scalar> DenseLayer<T> {
    pub fn glorot<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        Self {
            weight: glorot_uniform(outputs, inputs, inputs, outputs, rng),
            bias: zeros_param(vec![outputs]),
            activation,
        }
    }

    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            weight: zeros_param(vec![outputs, inputs]),
            bias: zeros_param(vec![outputs]),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn bind(&self, tape: &mut Tape<T>) -> BoundDense {
        BoundDense {
            weight: tape.leaf(&self.weight),
            bias: tape.leaf(&self.bias),
            activation: self.activation,
        }
    }
}

impl BoundDense {
    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, x: Var) -> Result<Var> {
        let z = tape.matvec_affine(self.weight, x, self.bias)?;
        Ok(match self.activation {
            Activation::Relu => tape.relu(z),
            Activation::Linear => z,
        })
    }
}

impl<T> Parameterized<T> for DenseLayer<T> {
    fn tensors(&self) -> Vec<&Tensor<T>> {
        vec![&self.weight, &self.bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.weight, &mut self.bias]
    }
}
