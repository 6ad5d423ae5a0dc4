use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::Parameterized;
use crate::optim::Amsgrad;
use crate::scalar::Scalar;
use crate::triangle::{Sample, SplitTag};

use super::{Dimensions, DropoutPlan, ModelConfig, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean training loss over the epoch's batches, with dropout active.
    pub train_loss: f64,
    pub validation_loss: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_validation_loss: f64,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel<T> {
    /// Snapshot from the epoch with the lowest validation loss.
    pub params: ModelParams<T>,
    pub trace: TrainingTrace,
    pub seed: u64,
}

fn sequence_length(samples: &[Sample]) -> Result<usize> {
    let len = samples
        .first()
        .map(|s| s.history.len())
        .ok_or(Error::EmptySplit("train"))?;
    if samples
        .iter()
        .any(|s| s.history.len() != len || s.response.len() != len)
    {
        return Err(Error::Contract(
            "samples disagree on sequence length".into(),
        ));
    }
    Ok(len)
}

/// Trains one network with early stopping on the validation split.
///
/// `levels` is the number of companies in the line (embedding rows).
pub fn train<T: Scalar>(
    config: &ModelConfig,
    samples: &[Sample],
    levels: usize,
) -> Result<TrainedModel<T>> {
    config.validate()?;
    let mut train_set: Vec<&Sample> = samples
        .iter()
        .filter(|s| s.split == SplitTag::Train)
        .collect();
    let valid_set: Vec<&Sample> = samples
        .iter()
        .filter(|s| s.split == SplitTag::Validation)
        .collect();
    if train_set.is_empty() {
        return Err(Error::EmptySplit("train"));
    }
    if valid_set.is_empty() {
        return Err(Error::EmptySplit("validation"));
    }
    if let Some(s) = samples.iter().find(|s| s.company_index >= levels) {
        return Err(Error::UnknownLevel {
            level: s.company_index,
            levels,
        });
    }

    let dims = Dimensions::from_config(config, levels, sequence_length(samples)?);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params: ModelParams<T> = ModelParams::init(dims, &mut rng);
    let mut optimizer = Amsgrad::new(config.optimizer());
    let dropout = DropoutPlan::training(config)?;

    let mut trace = TrainingTrace {
        best_validation_loss: f64::INFINITY,
        ..Default::default()
    };
    let mut best = params.clone();

    for epoch in 1..=config.max_epochs {
        train_set.shuffle(&mut rng);
        let mut weighted = 0.0;
        for (batch, chunk) in train_set.chunks(config.batch_size).enumerate() {
            let loss = params.loss_and_grad(chunk, &dropout, &mut rng)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, batch });
            }
            optimizer.step(&mut params.tensors_mut())?;
            weighted += loss * chunk.len() as f64;
        }
        if !params.is_finite() {
            return Err(Error::Divergence {
                epoch,
                batch: train_set.len().div_ceil(config.batch_size) - 1,
            });
        }
        let validation_loss = params.loss(&valid_set)?;
        if !validation_loss.is_finite() {
            return Err(Error::Divergence { epoch, batch: 0 });
        }
        trace.epochs.push(EpochRecord {
            epoch,
            train_loss: weighted / train_set.len() as f64,
            validation_loss,
        });
        if validation_loss < trace.best_validation_loss {
            trace.best_validation_loss = validation_loss;
            trace.best_epoch = epoch;
            best.clone_from(&params);
        } else if epoch - trace.best_epoch >= config.patience {
            trace.stopped_early = true;
            break;
        }
    }

    best.tensors_mut().into_iter().for_each(|t| t.clear_grad());
    Ok(TrainedModel {
        params: best,
        trace,
        seed: config.seed,
    })
}

/// Trains `config.ensemble_size` independent members with seeds
/// `config.seed + k`, running at most `jobs` members at once.
pub fn ensemble_train<T: Scalar>(
    config: &ModelConfig,
    samples: &[Sample],
    levels: usize,
    jobs: usize,
) -> Result<Vec<TrainedModel<T>>> {
    config.validate()?;
    let member = |index: usize| {
        let member_config = ModelConfig {
            seed: config.seed.wrapping_add(index as u64),
            ..config.clone()
        };
        train(&member_config, samples, levels).map_err(|e| Error::Member {
            index,
            source: Box::new(e),
        })
    };
    let results: Vec<Result<TrainedModel<T>>> = if jobs <= 1 {
        (0..config.ensemble_size).map(member).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Contract(format!("thread pool: {e}")))?;
        pool.install(|| {
            (0..config.ensemble_size)
                .into_par_iter()
                .map(member)
                .collect()
        })
    };
    results.into_iter().collect()
}
