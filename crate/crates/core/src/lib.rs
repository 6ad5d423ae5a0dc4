//! DeepTriangle loss reserving.
//!
//! A sequence-to-sequence GRU network forecasts incremental paid losses and
//! claims outstanding for every open cell of a company's development triangle.
//! Companies within one line of business share a network and are told apart
//! by a learned embedding. The crate also carries a volume-weighted
//! chain-ladder baseline and the MAPE/RMSPE evaluation used to compare the two.
//!
//! The numeric core (tensors, the gradient tape, layers, the optimizer and the
//! network) is generic over [`Scalar`]; the aliases at the crate root fix it to
//! `f64`, which is what the training pipeline and the CLI use.

pub mod autograd;
pub mod error;
pub mod eval;
pub mod forecast;
pub mod layers;
pub mod model;
pub mod optim;
pub mod pipeline;
pub mod scalar;
pub mod synthetic;
pub mod triangle;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar used by the data pipeline and the CLI.
pub type Real = f64;

pub type Tensor = autograd::Tensor<Real>;
pub type Tape = autograd::Tape<Real>;
pub type GruCell = layers::GruCell<Real>;
pub type DenseLayer = layers::DenseLayer<Real>;
pub type EmbeddingTable = layers::EmbeddingTable<Real>;
pub type Amsgrad = optim::Amsgrad<Real>;
pub type ModelParams = model::ModelParams<Real>;

/// Single-precision variants, mostly useful for comparing against `f64` runs.
pub mod f32 {
    pub type Tensor = crate::autograd::Tensor<f32>;
    pub type Tape = crate::autograd::Tape<f32>;
    pub type GruCell = crate::layers::GruCell<f32>;
    pub type ModelParams = crate::model::ModelParams<f32>;
}
