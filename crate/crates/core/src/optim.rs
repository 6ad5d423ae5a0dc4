//! AMSGrad: Adam with a running maximum of the second-moment estimate.

use serde::{Deserialize, Serialize};

use crate::autograd::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmsgradConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Scale the step by `sqrt(1 - β₂ᵗ) / (1 - β₁ᵗ)`.
    pub bias_correction: bool,
}

impl Default for AmsgradConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
            bias_correction: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Amsgrad<T> {
    config: AmsgradConfig,
    t: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    v_max: Vec<Vec<T>>,
}

impl<T: Scalar> Amsgrad<T> {
    pub fn new(config: AmsgradConfig) -> Self {
        Self {
            config,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
            v_max: Vec::new(),
        }
    }

    pub fn config(&self) -> &AmsgradConfig {
        &self.config
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self, param: usize) -> Option<&[T]> {
        self.m.get(param).map(Vec::as_slice)
    }

    pub fn second_moment(&self, param: usize) -> Option<&[T]> {
        self.v.get(param).map(Vec::as_slice)
    }

    pub fn max_second_moment(&self, param: usize) -> Option<&[T]> {
        self.v_max.get(param).map(Vec::as_slice)
    }

    /// Effective step size at the current step count.
    fn step_size(&self) -> f64 {
        let c = &self.config;
        if c.bias_correction {
            let t = self.t as i32;
            c.learning_rate * (1.0 - c.beta2.powi(t)).sqrt() / (1.0 - c.beta1.powi(t))
        } else {
            c.learning_rate
        }
    }

    /// Applies one update to `params` from their gradients, then zeroes the
    /// gradients. The parameter list must keep the same order across calls.
    pub fn step(&mut self, params: &mut [&mut Tensor<T>]) -> Result<()> {
        for (index, p) in params.iter().enumerate() {
            if p.requires_grad() && p.grad().is_none() {
                return Err(Error::MissingGradient { index });
            }
        }
        if self.m.is_empty() {
            for p in params.iter() {
                let zeros = vec![T::zero(); p.len()];
                self.m.push(zeros.clone());
                self.v.push(zeros.clone());
                self.v_max.push(zeros);
            }
        } else if self.m.len() != params.len()
            || self
                .m
                .iter()
                .zip(params.iter())
                .any(|(m, p)| m.len() != p.len())
        {
            return Err(Error::Contract(
                "parameter set changed between optimizer steps".into(),
            ));
        }

        self.t += 1;
        let lr_t = T::lit(self.step_size());
        let b1 = T::lit(self.config.beta1);
        let b2 = T::lit(self.config.beta2);
        let eps = T::lit(self.config.epsilon);
        let one = T::one();

        for (i, p) in params.iter_mut().enumerate() {
            if !p.requires_grad() {
                continue;
            }
            let grad = p.grad().expect("checked above").to_vec();
            let (m, v, v_max) = (&mut self.m[i], &mut self.v[i], &mut self.v_max[i]);
            let data = p.data_mut();
            for k in 0..grad.len() {
                let g = grad[k];
                m[k] = b1 * m[k] + (one - b1) * g;
                v[k] = b2 * v[k] + (one - b2) * g * g;
                if v[k] > v_max[k] {
                    v_max[k] = v[k];
                }
                data[k] = data[k] - lr_t * m[k] / (v_max[k].sqrt() + eps);
            }
            p.zero_grad();
        }
        Ok(())
    }
}
