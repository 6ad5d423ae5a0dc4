//! Dense tensors and a reverse-mode gradient tape.
//!
//! Parameters live in [`Tensor`]s that outlive any single computation. A
//! forward pass records onto a fresh [`Tape`]: parameters enter as leaves via
//! [`Tape::leaf`], every operation appends a node, and [`Tape::backward`]
//! walks the nodes in reverse to produce [`Gradients`]. Leaf gradients are
//! then folded back into their tensors with [`Tensor::accumulate_grad`].
//!
//! All tensors are row-major. Operations treat the last axis as features and
//! every leading axis as the batch, so `[n]` and `[batch, n]` inputs share the
//! same code path. The only broadcast is the bias row in [`Tape::affine`].

mod tape;
mod tensor;

pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
