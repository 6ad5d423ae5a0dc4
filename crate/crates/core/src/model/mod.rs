//! The DeepTriangle network: GRU encoder over the observed history, GRU
//! decoder over the repeated summary, and two ReLU heads (paid and
//! outstanding) that see each decoded step next to the company embedding.

mod config;
mod persist;
mod predict;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autograd::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::layers::{
    accumulate_grads, embed_batch, gru_decode, gru_encode, Activation, BoundDense, BoundEmbedding,
    BoundGru, DenseLayer, DropoutMode, DropoutSpec, EmbeddingTable, GruCell, Parameterized,
};
use crate::scalar::Scalar;
use crate::triangle::{RatioPair, Sample};

pub use config::ModelConfig;
pub use persist::{ModelArtifact, NamedTensor, ARTIFACT_FORMAT_VERSION};
pub use predict::{forecast, MODEL_LABEL};
pub use train::{ensemble_train, train, EpochRecord, TrainedModel, TrainingTrace};

/// Values fed to the encoder at each step: paid and outstanding ratios.
pub const INPUT_FEATURES: usize = 2;

/// Complete learned state of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub encoder: GruCell<T>,
    pub decoder: GruCell<T>,
    pub embedding: EmbeddingTable<T>,
    pub paid_hidden: DenseLayer<T>,
    pub paid_output: DenseLayer<T>,
    pub outstanding_hidden: DenseLayer<T>,
    pub outstanding_output: DenseLayer<T>,
    /// Number of decoded steps (`I - 1`).
    pub sequence_length: usize,
}

/// Architecture sizes, independent of how the weights are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimensions {
    pub levels: usize,
    pub embedding_dim: usize,
    pub encoder_units: usize,
    pub decoder_units: usize,
    pub head_hidden_units: usize,
    pub sequence_length: usize,
}

impl Dimensions {
    pub fn from_config(config: &ModelConfig, levels: usize, sequence_length: usize) -> Self {
        Self {
            levels,
            embedding_dim: config.embedding_dim_for(levels),
            encoder_units: config.encoder_units,
            decoder_units: config.decoder_units,
            head_hidden_units: config.head_hidden_units,
            sequence_length,
        }
    }

    fn head_inputs(&self) -> usize {
        self.decoder_units + self.embedding_dim
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundModel {
    pub encoder: BoundGru,
    pub decoder: BoundGru,
    pub embedding: BoundEmbedding,
    pub paid_hidden: BoundDense,
    pub paid_output: BoundDense,
    pub outstanding_hidden: BoundDense,
    pub outstanding_output: BoundDense,
}

impl BoundModel {
    pub fn vars(&self) -> Vec<Var> {
        let mut v = self.encoder.vars();
        v.extend(self.decoder.vars());
        v.push(self.embedding.table);
        v.extend(self.paid_hidden.vars());
        v.extend(self.paid_output.vars());
        v.extend(self.outstanding_hidden.vars());
        v.extend(self.outstanding_output.vars());
        v
    }
}

/// Dropout settings for one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct DropoutPlan {
    pub gru_inputs: DropoutSpec,
    pub head_hidden: DropoutSpec,
}

impl DropoutPlan {
    pub fn inference() -> Self {
        Self {
            gru_inputs: DropoutSpec::identity(),
            head_hidden: DropoutSpec::identity(),
        }
    }

    pub fn training(config: &ModelConfig) -> Result<Self> {
        Ok(Self {
            gru_inputs: DropoutSpec::new(config.gru_dropout, DropoutMode::Train)?,
            head_hidden: DropoutSpec::new(config.head_dropout, DropoutMode::Train)?,
        })
    }
}

/// Per-step outputs of a batched forward pass; each `Var` is `[batch, 1]`.
#[derive(Debug, Clone)]
pub struct Outputs {
    pub paid: Vec<Var>,
    pub outstanding: Vec<Var>,
}

/// Borrowed view of one network input.
#[derive(Debug, Clone, Copy)]
pub struct HistoryRef<'a> {
    pub history: &'a [RatioPair],
    pub mask: &'a [bool],
    pub company_index: usize,
}

impl<'a> From<&'a Sample> for HistoryRef<'a> {
    fn from(s: &'a Sample) -> Self {
        Self {
            history: &s.history,
            mask: &s.history_mask,
            company_index: s.company_index,
        }
    }
}

impl<T: Scalar> ModelParams<T> {
    /// Glorot-uniform weights and zero biases from a seeded generator.
    ///
    /// The two output layers take the absolute value of their Glorot draw.
    /// Their inputs are ReLU activations, so every head starts with a
    /// non-negative pre-activation and cannot be born dead.
    pub fn init<R: Rng + ?Sized>(dims: Dimensions, rng: &mut R) -> Self {
        let encoder = GruCell::glorot(dims.encoder_units, INPUT_FEATURES, rng);
        let decoder = GruCell::glorot(dims.decoder_units, dims.encoder_units, rng);
        let embedding = EmbeddingTable::glorot(dims.levels, dims.embedding_dim, rng);
        let h = dims.head_hidden_units;
        let paid_hidden = DenseLayer::glorot(dims.head_inputs(), h, Activation::Relu, rng);
        let mut paid_output: DenseLayer<T> = DenseLayer::glorot(h, 1, Activation::Relu, rng);
        paid_output
            .weight
            .data_mut()
            .iter_mut()
            .for_each(|w| *w = w.abs());
        let outstanding_hidden = DenseLayer::glorot(dims.head_inputs(), h, Activation::Relu, rng);
        let mut outstanding_output: DenseLayer<T> = DenseLayer::glorot(h, 1, Activation::Relu, rng);
        outstanding_output
            .weight
            .data_mut()
            .iter_mut()
            .for_each(|w| *w = w.abs());
        Self {
            encoder,
            decoder,
            embedding,
            paid_hidden,
            paid_output,
            outstanding_hidden,
            outstanding_output,
            sequence_length: dims.sequence_length,
        }
    }

    pub fn seeded(dims: Dimensions, seed: u64) -> Self {
        Self::init(dims, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn zeros(dims: Dimensions) -> Self {
        let h = dims.head_hidden_units;
        Self {
            encoder: GruCell::zeros(dims.encoder_units, INPUT_FEATURES),
            decoder: GruCell::zeros(dims.decoder_units, dims.encoder_units),
            embedding: EmbeddingTable::zeros(dims.levels, dims.embedding_dim),
            paid_hidden: DenseLayer::zeros(dims.head_inputs(), h, Activation::Relu),
            paid_output: DenseLayer::zeros(h, 1, Activation::Relu),
            outstanding_hidden: DenseLayer::zeros(dims.head_inputs(), h, Activation::Relu),
            outstanding_output: DenseLayer::zeros(h, 1, Activation::Relu),
            sequence_length: dims.sequence_length,
        }
    }

    pub fn dimensions(&self) -> Dimensions {
        Dimensions {
            levels: self.embedding.levels(),
            embedding_dim: self.embedding.dim(),
            encoder_units: self.encoder.units(),
            decoder_units: self.decoder.units(),
            head_hidden_units: self.paid_hidden.outputs(),
            sequence_length: self.sequence_length,
        }
    }

    /// Tensor names in `tensors()` order, used by the artifact format.
    pub fn tensor_names() -> Vec<String> {
        let gru = ["w_h", "w_r", "w_u", "b_h", "b_r", "b_u"];
        let dense = ["weight", "bias"];
        let mut names = Vec::new();
        for part in ["encoder", "decoder"] {
            names.extend(gru.iter().map(|n| format!("{part}.{n}")));
        }
        names.push("embedding.table".into());
        for part in [
            "paid_hidden",
            "paid_output",
            "outstanding_hidden",
            "outstanding_output",
        ] {
            names.extend(dense.iter().map(|n| format!("{part}.{n}")));
        }
        names
    }

    pub fn bind(&self, tape: &mut Tape<T>) -> BoundModel {
        BoundModel {
            encoder: self.encoder.bind(tape),
            decoder: self.decoder.bind(tape),
            embedding: self.embedding.bind(tape),
            paid_hidden: self.paid_hidden.bind(tape),
            paid_output: self.paid_output.bind(tape),
            outstanding_hidden: self.outstanding_hidden.bind(tape),
            outstanding_output: self.outstanding_output.bind(tape),
        }
    }

    pub fn zero_grad(&mut self) {
        self.tensors_mut().into_iter().for_each(Tensor::zero_grad);
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    /// Mean masked loss over `samples`, accumulating its gradient into the
    /// parameters. Returns the loss value.
    pub fn loss_and_grad<R: Rng + ?Sized>(
        &mut self,
        samples: &[&Sample],
        dropout: &DropoutPlan,
        rng: &mut R,
    ) -> Result<f64> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape);
        let inputs: Vec<HistoryRef> = samples.iter().map(|s| HistoryRef::from(*s)).collect();
        let outputs = forward_batch(&mut tape, &bound, &inputs, dropout, rng)?;
        let loss = batch_loss(&mut tape, &outputs, samples)?;
        let value = tape.value(loss)[0].as_f64();
        if !value.is_finite() {
            return Ok(value);
        }
        let grads = tape.backward(loss)?;
        accumulate_grads(self, &bound.vars(), &grads)?;
        Ok(value)
    }

    /// Mean masked loss over `samples` in inference mode.
    pub fn loss(&self, samples: &[&Sample]) -> Result<f64> {
        let mut total = 0.0;
        for chunk in samples.chunks(512) {
            let out = self.predict_batch(
                &chunk
                    .iter()
                    .map(|s| HistoryRef::from(*s))
                    .collect::<Vec<_>>(),
            )?;
            for (k, s) in chunk.iter().enumerate() {
                total += sample_loss(&out.paid[k], &out.outstanding[k], s)?;
            }
        }
        Ok(total / samples.len().max(1) as f64)
    }

    /// Inference-mode predictions for one history: `(paid, outstanding)`
    /// ratio sequences of length `I - 1`.
    pub fn predict(
        &self,
        history: &[RatioPair],
        mask: &[bool],
        company_index: usize,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut out = self.predict_batch(&[HistoryRef {
            history,
            mask,
            company_index,
        }])?;
        Ok((out.paid.remove(0), out.outstanding.remove(0)))
    }

    /// Batched [`predict`](Self::predict); returns one sequence per input.
    pub fn predict_batch(&self, inputs: &[HistoryRef]) -> Result<HeadSequences> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape);
        // Inference never draws from the generator.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = forward_batch(
            &mut tape,
            &bound,
            inputs,
            &DropoutPlan::inference(),
            &mut rng,
        )?;
        let collect = |vars: &[Var]| -> Vec<Vec<f64>> {
            (0..inputs.len())
                .map(|r| vars.iter().map(|&v| tape.value(v)[r].as_f64()).collect())
                .collect()
        };
        Ok(HeadSequences {
            paid: collect(&out.paid),
            outstanding: collect(&out.outstanding),
        })
    }
}

/// Per-input ratio sequences from both heads.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadSequences {
    pub paid: Vec<Vec<f64>>,
    pub outstanding: Vec<Vec<f64>>,
}

impl<T> Parameterized<T> for ModelParams<T> {
    fn tensors(&self) -> Vec<&Tensor<T>> {
        let mut v = self.encoder.tensors();
        v.extend(self.decoder.tensors());
        v.extend(self.embedding.tensors());
        v.extend(self.paid_hidden.tensors());
        v.extend(self.paid_output.tensors());
        v.extend(self.outstanding_hidden.tensors());
        v.extend(self.outstanding_output.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut v = self.encoder.tensors_mut();
        v.extend(self.decoder.tensors_mut());
        v.extend(self.embedding.tensors_mut());
        v.extend(self.paid_hidden.tensors_mut());
        v.extend(self.paid_output.tensors_mut());
        v.extend(self.outstanding_hidden.tensors_mut());
        v.extend(self.outstanding_output.tensors_mut());
        v
    }
}

fn head<T: Scalar, R: Rng + ?Sized>(
    tape: &mut Tape<T>,
    hidden: &BoundDense,
    output: &BoundDense,
    features: Var,
    dropout: &DropoutSpec,
    rng: &mut R,
) -> Result<Var> {
    let h = hidden.forward(tape, features)?;
    let h = crate::layers::dropout_apply(tape, dropout, h, rng)?;
    output.forward(tape, h)
}

/// Records the full network on `tape` for a batch of histories.
pub fn forward_batch<T: Scalar, R: Rng + ?Sized>(
    tape: &mut Tape<T>,
    model: &BoundModel,
    inputs: &[HistoryRef],
    dropout: &DropoutPlan,
    rng: &mut R,
) -> Result<Outputs> {
    let first = inputs
        .first()
        .ok_or_else(|| Error::Contract("forward on an empty batch".into()))?;
    let steps = first.history.len();
    if steps == 0 {
        return Err(Error::EmptyHistory);
    }
    for inp in inputs {
        if inp.history.len() != steps || inp.mask.len() != steps {
            return Err(Error::shape(
                "forward",
                &[steps],
                &[inp.history.len(), inp.mask.len()],
            ));
        }
    }
    let rows = inputs.len();
    let mut sequence = Vec::with_capacity(steps);
    let mut mask = Vec::with_capacity(steps);
    for t in 0..steps {
        let mut data = Vec::with_capacity(rows * INPUT_FEATURES);
        for inp in inputs {
            data.push(T::lit(inp.history[t].paid));
            data.push(T::lit(inp.history[t].outstanding));
        }
        sequence.push(tape.constant(vec![rows, INPUT_FEATURES], data)?);
        mask.push(inputs.iter().map(|inp| inp.mask[t]).collect::<Vec<_>>());
    }

    let summary = gru_encode(
        tape,
        &model.encoder,
        &sequence,
        &mask,
        &dropout.gru_inputs,
        rng,
    )?;
    let decoded = gru_decode(
        tape,
        &model.decoder,
        summary,
        steps,
        &dropout.gru_inputs,
        rng,
    )?;
    let levels: Vec<usize> = inputs.iter().map(|i| i.company_index).collect();
    let embedded = embed_batch(tape, &model.embedding, &levels)?;

    let mut paid = Vec::with_capacity(steps);
    let mut outstanding = Vec::with_capacity(steps);
    for step in decoded {
        let features = tape.concat(&[step, embedded])?;
        paid.push(head(
            tape,
            &model.paid_hidden,
            &model.paid_output,
            features,
            &dropout.head_hidden,
            rng,
        )?);
        outstanding.push(head(
            tape,
            &model.outstanding_hidden,
            &model.outstanding_output,
            features,
            &dropout.head_hidden,
            rng,
        )?);
    }
    Ok(Outputs { paid, outstanding })
}

/// Per-sample masked loss: the mean over unmasked response steps of
/// `((P̂ - P)² + (ÔS - OS)²) / 2`.
pub fn sample_loss(paid: &[f64], outstanding: &[f64], sample: &Sample) -> Result<f64> {
    let n = sample.response_len();
    if n == 0 {
        return Err(Error::Contract("sample has an empty response mask".into()));
    }
    if paid.len() != sample.response.len() || outstanding.len() != sample.response.len() {
        return Err(Error::shape(
            "sample_loss",
            &[paid.len(), outstanding.len()],
            &[sample.response.len()],
        ));
    }
    let mut total = 0.0;
    for (k, target) in sample.response.iter().enumerate() {
        if sample.response_mask[k] {
            let dp = paid[k] - target.paid;
            let doo = outstanding[k] - target.outstanding;
            total += (dp * dp + doo * doo) / 2.0;
        }
    }
    Ok(total / n as f64)
}

/// Batch mean of [`sample_loss`] recorded on the tape.
pub fn batch_loss<T: Scalar>(
    tape: &mut Tape<T>,
    outputs: &Outputs,
    samples: &[&Sample],
) -> Result<Var> {
    let rows = samples.len();
    let steps = outputs.paid.len();
    let mut weights = vec![vec![T::zero(); rows]; steps];
    for (r, s) in samples.iter().enumerate() {
        let n = s.response_len();
        if n == 0 {
            return Err(Error::Contract("sample has an empty response mask".into()));
        }
        if s.response.len() != steps {
            return Err(Error::shape("batch_loss", &[steps], &[s.response.len()]));
        }
        let w = T::lit(1.0 / (2.0 * n as f64 * rows as f64));
        for (k, &m) in s.response_mask.iter().enumerate() {
            if m {
                weights[k][r] = w;
            }
        }
    }

    let mut total: Option<Var> = None;
    for (k, step_weights) in weights.into_iter().enumerate() {
        if step_weights.iter().all(|w| *w == T::zero()) {
            continue;
        }
        let paid_target: Vec<T> = samples.iter().map(|s| T::lit(s.response[k].paid)).collect();
        let os_target: Vec<T> = samples
            .iter()
            .map(|s| T::lit(s.response[k].outstanding))
            .collect();
        let paid_target = tape.constant(vec![rows, 1], paid_target)?;
        let os_target = tape.constant(vec![rows, 1], os_target)?;
        let dp = tape.sub(outputs.paid[k], paid_target)?;
        let dp = tape.square(dp);
        let doo = tape.sub(outputs.outstanding[k], os_target)?;
        let doo = tape.square(doo);
        let both = tape.add(dp, doo)?;
        let weighted = tape.mul_const(both, step_weights)?;
        let step_total = tape.sum(weighted);
        total = Some(match total {
            Some(acc) => tape.add(acc, step_total)?,
            None => step_total,
        });
    }
    total.ok_or_else(|| Error::Contract("batch has no unmasked response steps".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(response: Vec<RatioPair>, mask: Vec<bool>) -> Sample {
        let n = response.len();
        Sample {
            company: crate::triangle::CompanyCode(1),
            company_index: 0,
            accident_year_index: 1,
            evaluation_lag: 2,
            history: vec![RatioPair::default(); n],
            history_mask: vec![true; n],
            response,
            response_mask: mask,
            split: crate::triangle::SplitTag::Train,
        }
    }

    #[test]
    fn loss_hand_values() {
        let target = RatioPair {
            paid: 0.5,
            outstanding: 0.3,
        };
        let s = sample(vec![target, target], vec![true, false]);
        assert_eq!(sample_loss(&[0.5, 9.0], &[0.3, 9.0], &s).unwrap(), 0.0);
        let one = sample_loss(&[0.7, 0.0], &[0.1, 0.0], &s).unwrap();
        assert!((one - 0.04).abs() < 1e-15);

        let s2 = sample(vec![target, target], vec![true, true]);
        let two = sample_loss(&[0.7, 0.5], &[0.1, 0.3], &s2).unwrap();
        assert!((two - 0.02).abs() < 1e-15);

        let empty = sample(vec![target], vec![false]);
        assert!(sample_loss(&[0.0], &[0.0], &empty).is_err());
    }

    #[test]
    fn zero_heads_predict_zero() {
        let dims = Dimensions {
            levels: 3,
            embedding_dim: 2,
            encoder_units: 3,
            decoder_units: 3,
            head_hidden_units: 2,
            sequence_length: 4,
        };
        let mut params: ModelParams<f64> = ModelParams::seeded(dims, 1);
        let zero = ModelParams::<f64>::zeros(dims);
        params.paid_output = zero.paid_output.clone();
        params.outstanding_output = zero.outstanding_output.clone();
        let history = vec![
            RatioPair {
                paid: 0.2,
                outstanding: 0.1
            };
            4
        ];
        let (paid, os) = params
            .predict(&history, &[false, true, true, true], 1)
            .unwrap();
        assert_eq!(paid, vec![0.0; 4]);
        assert_eq!(os, vec![0.0; 4]);
    }

    #[test]
    fn fully_masked_history_is_rejected() {
        let dims = Dimensions {
            levels: 1,
            embedding_dim: 1,
            encoder_units: 2,
            decoder_units: 2,
            head_hidden_units: 2,
            sequence_length: 3,
        };
        let params: ModelParams<f64> = ModelParams::seeded(dims, 1);
        let history = vec![RatioPair::default(); 3];
        assert!(matches!(
            params.predict(&history, &[false; 3], 0),
            Err(Error::EmptyHistory)
        ));
    }
}
