use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::AmsgradConfig;

/// Architecture and training regime. Defaults are the published settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub encoder_units: usize,
    pub decoder_units: usize,
    /// Dropout on the input connections of every GRU step.
    pub gru_dropout: f64,
    pub head_hidden_units: usize,
    pub head_dropout: f64,
    /// Embedding width; `levels - 1` (at least 1) when unset.
    pub embedding_dim: Option<usize>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub bias_correction: bool,
    pub max_epochs: usize,
    pub patience: usize,
    pub ensemble_size: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let opt = AmsgradConfig::default();
        Self {
            encoder_units: 128,
            decoder_units: 128,
            gru_dropout: 0.2,
            head_hidden_units: 64,
            head_dropout: 0.2,
            embedding_dim: None,
            learning_rate: opt.learning_rate,
            beta1: opt.beta1,
            beta2: opt.beta2,
            epsilon: opt.epsilon,
            bias_correction: opt.bias_correction,
            max_epochs: 1000,
            patience: 200,
            ensemble_size: 100,
            batch_size: 128,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn embedding_dim_for(&self, levels: usize) -> usize {
        self.embedding_dim
            .unwrap_or_else(|| levels.saturating_sub(1).max(1))
    }

    pub fn optimizer(&self) -> AmsgradConfig {
        AmsgradConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            bias_correction: self.bias_correction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("encoder_units", self.encoder_units),
            ("decoder_units", self.decoder_units),
            ("head_hidden_units", self.head_hidden_units),
            ("max_epochs", self.max_epochs),
            ("patience", self.patience),
            ("ensemble_size", self.ensemble_size),
            ("batch_size", self.batch_size),
            ("embedding_dim", self.embedding_dim.unwrap_or(1)),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::Contract(format!("{name} must be positive")));
            }
        }
        for (name, rate) in [
            ("gru_dropout", self.gru_dropout),
            ("head_dropout", self.head_dropout),
        ] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::Contract(format!("{name} {rate} outside [0, 1)")));
            }
        }
        if self.learning_rate.is_nan()
            || self.learning_rate <= 0.0
            || self.epsilon.is_nan()
            || self.epsilon <= 0.0
        {
            return Err(Error::Contract(
                "learning_rate and epsilon must be positive".into(),
            ));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::Contract(format!("{name} {beta} outside [0, 1)")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_defaults() {
        let c = ModelConfig::default();
        assert_eq!((c.encoder_units, c.decoder_units), (128, 128));
        assert_eq!(c.head_hidden_units, 64);
        assert_eq!((c.gru_dropout, c.head_dropout), (0.2, 0.2));
        assert_eq!(c.learning_rate, 0.0005);
        assert_eq!((c.max_epochs, c.patience), (1000, 200));
        assert_eq!(c.ensemble_size, 100);
        assert_eq!(c.embedding_dim_for(50), 49);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let c = ModelConfig {
            gru_dropout: 1.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = ModelConfig {
            batch_size: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
