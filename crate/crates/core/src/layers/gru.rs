use rand::Rng;

use crate::autograd::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::dropout::{dropout_apply, DropoutSpec};
use super::init::{glorot_uniform, zeros_param};
use super::Parameterized;

/// Gated recurrent unit.
///
/// Every weight matrix acts on the concatenation `[h, x]`, so each has shape
/// `[units, units + input_dim]`:
///
/// ```text
/// r  = σ(W_r [h, x] + b_r)
/// u  = σ(W_u [h, x] + b_u)
/// h~ = tanh(W_h [r ⊙ h, x] + b_h)
/// h' = u ⊙ h~ + (1 - u) ⊙ h
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GruCell<T> {
    pub w_h: Tensor<T>,
    pub w_r: Tensor<T>,
    pub w_u: Tensor<T>,
    pub b_h: Tensor<T>,
    pub b_r: Tensor<T>,
    pub b_u: Tensor<T>,
}

#[derive(Debug, Clone, Copy)]
pub struct BoundGru {
    pub w_h: Var,
    pub w_r: Var,
    pub w_u: Var,
    pub b_h: Var,
    pub b_r: Var,
    pub b_u: Var,
    pub units: usize,
    pub input_dim: usize,
}

impl BoundGru {
    pub fn vars(&self) -> Vec<Var> {
        vec![self.w_h, self.w_r, self.w_u, self.b_h, self.b_r, self.b_u]
    }
}

/// Intermediate values of one step, exposed for inspection.
#[derive(Debug, Clone, Copy)]
pub struct GruStepVars {
    pub reset: Var,
    pub update: Var,
    pub candidate: Var,
    pub hidden: Var,
}

impl<T: Scalar> GruCell<T> {
    pub fn glorot<R: Rng + ?Sized>(units: usize, input_dim: usize, rng: &mut R) -> Self {
        let cols = units + input_dim;
        Self {
            w_h: glorot_uniform(units, cols, cols, units, rng),
            w_r: glorot_uniform(units, cols, cols, units, rng),
            w_u: glorot_uniform(units, cols, cols, units, rng),
            b_h: zeros_param(vec![units]),
            b_r: zeros_param(vec![units]),
            b_u: zeros_param(vec![units]),
        }
    }

    pub fn zeros(units: usize, input_dim: usize) -> Self {
        let cols = units + input_dim;
        Self {
            w_h: zeros_param(vec![units, cols]),
            w_r: zeros_param(vec![units, cols]),
            w_u: zeros_param(vec![units, cols]),
            b_h: zeros_param(vec![units]),
            b_r: zeros_param(vec![units]),
            b_u: zeros_param(vec![units]),
        }
    }

    pub fn units(&self) -> usize {
        self.w_h.shape()[0]
    }

    pub fn input_dim(&self) -> usize {
        self.w_h.shape()[1] - self.units()
    }

    pub fn bind(&self, tape: &mut Tape<T>) -> BoundGru {
        BoundGru {
            w_h: tape.leaf(&self.w_h),
            w_r: tape.leaf(&self.w_r),
            w_u: tape.leaf(&self.w_u),
            b_h: tape.leaf(&self.b_h),
            b_r: tape.leaf(&self.b_r),
            b_u: tape.leaf(&self.b_u),
            units: self.units(),
            input_dim: self.input_dim(),
        }
    }
}

impl<T> Parameterized<T> for GruCell<T> {
    fn tensors(&self) -> Vec<&Tensor<T>> {
        vec![
            &self.w_h, &self.w_r, &self.w_u, &self.b_h, &self.b_r, &self.b_u,
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![
            &mut self.w_h,
            &mut self.w_r,
            &mut self.w_u,
            &mut self.b_h,
            &mut self.b_r,
            &mut self.b_u,
        ]
    }
}

/// One GRU update, returning the gates and candidate alongside the new state.
pub fn gru_cell_step_traced<T: Scalar>(
    tape: &mut Tape<T>,
    cell: &BoundGru,
    h_prev: Var,
    x: Var,
) -> Result<GruStepVars> {
    let hs = tape.shape(h_prev);
    if hs.last() != Some(&cell.units) {
        return Err(Error::shape("gru_cell_step", hs, &[cell.units]));
    }
    let xs = tape.shape(x);
    if xs.last() != Some(&cell.input_dim) {
        return Err(Error::shape("gru_cell_step", xs, &[cell.input_dim]));
    }
    let hx = tape.concat(&[h_prev, x])?;
    let r_pre = tape.matvec_affine(cell.w_r, hx, cell.b_r)?;
    let reset = tape.sigmoid(r_pre);
    let u_pre = tape.matvec_affine(cell.w_u, hx, cell.b_u)?;
    let update = tape.sigmoid(u_pre);

    let rh = tape.mul(reset, h_prev)?;
    let rhx = tape.concat(&[rh, x])?;
    let c_pre = tape.matvec_affine(cell.w_h, rhx, cell.b_h)?;
    let candidate = tape.tanh(c_pre);

    let take = tape.mul(update, candidate)?;
    let keep_gate = tape.one_minus(update);
    let keep = tape.mul(keep_gate, h_prev)?;
    let hidden = tape.add(take, keep)?;
    Ok(GruStepVars {
        reset,
        update,
        candidate,
        hidden,
    })
}

pub fn gru_cell_step<T: Scalar>(
    tape: &mut Tape<T>,
    cell: &BoundGru,
    h_prev: Var,
    x: Var,
) -> Result<Var> {
    Ok(gru_cell_step_traced(tape, cell, h_prev, x)?.hidden)
}

fn zero_state<T: Scalar>(tape: &mut Tape<T>, like: Var, units: usize) -> Var {
    let mut shape = tape.shape(like).to_vec();
    *shape.last_mut().expect("non-empty shape") = units;
    tape.zeros(shape)
}

/// Runs the cell over a (batched) sequence from a zero state.
///
/// `mask[t][r]` is false where row `r` is padding at step `t`; such steps
/// leave that row's state untouched. Unbatched inputs of shape `[d]` use a
/// mask of length one per step.
pub fn gru_encode<T: Scalar, R: Rng + ?Sized>(
    tape: &mut Tape<T>,
    cell: &BoundGru,
    sequence: &[Var],
    mask: &[Vec<bool>],
    input_dropout: &DropoutSpec,
    rng: &mut R,
) -> Result<Var> {
    if sequence.len() != mask.len() {
        return Err(Error::Contract(format!(
            "sequence has {} steps but mask has {}",
            sequence.len(),
            mask.len()
        )));
    }
    let first = *sequence.first().ok_or(Error::EmptyHistory)?;
    let rows = mask[0].len();
    if mask.iter().any(|m| m.len() != rows) {
        return Err(Error::Contract("ragged sequence mask".into()));
    }
    if (0..rows).any(|r| mask.iter().all(|m| !m[r])) {
        return Err(Error::EmptyHistory);
    }

    let mut h = zero_state(tape, first, cell.units);
    for (&x, active) in sequence.iter().zip(mask) {
        if !active.iter().any(|&a| a) {
            continue;
        }
        let x = dropout_apply(tape, input_dropout, x, rng)?;
        let next = gru_cell_step(tape, cell, h, x)?;
        h = if active.iter().all(|&a| a) {
            next
        } else {
            tape.blend(next, h, active)?
        };
    }
    Ok(h)
}

/// Feeds `context` as the input at each of `steps` timesteps from a zero
/// state and returns every hidden state.
pub fn gru_decode<T: Scalar, R: Rng + ?Sized>(
    tape: &mut Tape<T>,
    cell: &BoundGru,
    context: Var,
    steps: usize,
    input_dropout: &DropoutSpec,
    rng: &mut R,
) -> Result<Vec<Var>> {
    if steps < 1 {
        return Err(Error::Contract("decoder needs at least one step".into()));
    }
    let mut h = zero_state(tape, context, cell.units);
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let x = dropout_apply(tape, input_dropout, context, rng)?;
        h = gru_cell_step(tape, cell, h, x)?;
        out.push(h);
    }
    Ok(out)
}
