//! Seeded weight initialization.

use rand::Rng;

use crate::autograd::Tensor;
use crate::scalar::Scalar;

/// Glorot/Xavier uniform: `U(-l, l)` with `l = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<T: Scalar, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    fan_in: usize,
    fan_out: usize,
    rng: &mut R,
) -> Tensor<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| T::lit(rng.random_range(-limit..limit)))
        .collect();
    Tensor::new(vec![rows, cols], data)
        .expect("glorot_uniform: positive shape")
        .with_grad()
}

pub fn zeros_param<T: Scalar>(shape: Vec<usize>) -> Tensor<T> {
    Tensor::zeros(shape).with_grad()
}
