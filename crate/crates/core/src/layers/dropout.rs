use rand::Rng;

use crate::autograd::{Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropoutMode {
    Train,
    Infer,
}

/// Inverted dropout: survivors are scaled by `1 / (1 - rate)` during
/// training so inference is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutSpec {
    rate: f64,
    mode: DropoutMode,
}

impl DropoutSpec {
    pub fn new(rate: f64, mode: DropoutMode) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Contract(format!(
                "dropout rate {rate} outside [0, 1)"
            )));
        }
        Ok(Self { rate, mode })
    }

    pub fn identity() -> Self {
        Self {
            rate: 0.0,
            mode: DropoutMode::Infer,
        }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mode(&self) -> DropoutMode {
        self.mode
    }

    pub fn is_identity(&self) -> bool {
        self.mode == DropoutMode::Infer || self.rate == 0.0
    }

    pub fn with_mode(self, mode: DropoutMode) -> Self {
        Self { mode, ..self }
    }
}

pub fn dropout_apply<T: Scalar, R: Rng + ?Sized>(
    tape: &mut Tape<T>,
    spec: &DropoutSpec,
    x: Var,
    rng: &mut R,
) -> Result<Var> {
    if spec.is_identity() {
        return Ok(x);
    }
    let keep = T::lit(1.0 / (1.0 - spec.rate));
    let mask = (0..tape.value(x).len())
        .map(|_| {
            if rng.random::<f64>() < spec.rate {
                T::zero()
            } else {
                keep
            }
        })
        .collect();
    tape.mul_const(x, mask)
}
