use rand::Rng;

use crate::autograd::{Tape, Tensor, Var};
use crate::error::Result;
use crate::scalar::Scalar;

use super::init::{glorot_uniform, zeros_param};
use super::Parameterized;

/// Learned `[levels, k]` table mapping each categorical level to a vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    pub table: Tensor<T>,
}

#[derive(Debug, Clone, Copy)]
pub struct BoundEmbedding {
    pub table: Var,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn glorot<R: Rng + ?Sized>(levels: usize, dim: usize, rng: &mut R) -> Self {
        Self {
            table: glorot_uniform(levels, dim, levels, dim, rng),
        }
    }

    pub fn zeros(levels: usize, dim: usize) -> Self {
        Self {
            table: zeros_param(vec![levels, dim]),
        }
    }

    pub fn levels(&self) -> usize {
        self.table.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.table.shape()[1]
    }

    pub fn bind(&self, tape: &mut Tape<T>) -> BoundEmbedding {
        BoundEmbedding {
            table: tape.leaf(&self.table),
        }
    }
}

impl<T> Parameterized<T> for EmbeddingTable<T> {
    fn tensors(&self) -> Vec<&Tensor<T>> {
        vec![&self.table]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.table]
    }
}

/// Row `level` of the table, shape `[k]`.
pub fn embed_lookup<T: Scalar>(
    tape: &mut Tape<T>,
    table: &BoundEmbedding,
    level: usize,
) -> Result<Var> {
    tape.row(table.table, level)
}

/// One row per entry of `levels`, shape `[levels.len(), k]`.
pub fn embed_batch<T: Scalar>(
    tape: &mut Tape<T>,
    table: &BoundEmbedding,
    levels: &[usize],
) -> Result<Var> {
    tape.gather(table.table, levels)
}
