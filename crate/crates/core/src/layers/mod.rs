//! Building blocks of the network: dense layers, GRU cells, embeddings and
//! dropout.
//!
//! Each parameterized layer owns its [`Tensor`]s. `bind` copies them onto a
//! tape and returns a struct of [`Var`] handles; after the backward pass,
//! [`accumulate_grads`] folds the tape gradients back into the tensors in the
//! order given by [`Parameterized::tensors_mut`].

mod dense;
mod dropout;
mod embedding;
mod gru;
pub mod init;

pub use dense::{Activation, BoundDense, DenseLayer};
pub use dropout::{dropout_apply, DropoutMode, DropoutSpec};
pub use embedding::{embed_batch, embed_lookup, BoundEmbedding, EmbeddingTable};
pub use gru::{
    gru_cell_step, gru_cell_step_traced, gru_decode, gru_encode, BoundGru, GruCell, GruStepVars,
};

use crate::autograd::{Gradients, Tensor, Var};
use crate::error::Result;
use crate::scalar::Scalar;

/// Anything owning trainable tensors in a fixed order.
pub trait Parameterized<T> {
    fn tensors(&self) -> Vec<&Tensor<T>>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>>;
}

/// Folds gradients for `vars` into `module`'s tensors, pairing them in order.
pub fn accumulate_grads<T: Scalar, M: Parameterized<T> + ?Sized>(
    module: &mut M,
    vars: &[Var],
    grads: &Gradients<T>,
) -> Result<()> {
    let tensors = module.tensors_mut();
    debug_assert_eq!(tensors.len(), vars.len());
    for (tensor, &var) in tensors.into_iter().zip(vars) {
        grads.accumulate_into(var, tensor)?;
    }
    Ok(())
}
