use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autograd::Tensor;
use crate::error::{Error, Result};
use crate::layers::Parameterized;
use crate::scalar::Scalar;
use crate::triangle::CompanyCode;

use super::{Dimensions, ModelConfig, ModelParams, TrainedModel, TrainingTrace};

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// On-disk form of one trained ensemble member.
///
/// Values are written with shortest round-trip formatting, so save followed
/// by load reproduces every parameter bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub line: String,
    pub member_index: usize,
    pub seed: u64,
    pub config: ModelConfig,
    /// Company codes in embedding-level order.
    pub companies: Vec<CompanyCode>,
    pub sequence_length: usize,
    pub parameters: Vec<NamedTensor>,
    pub trace: TrainingTrace,
}

impl ModelArtifact {
    pub fn from_trained<T: Scalar>(
        line: &str,
        member_index: usize,
        config: &ModelConfig,
        companies: &[CompanyCode],
        model: &TrainedModel<T>,
    ) -> Self {
        let parameters = ModelParams::<T>::tensor_names()
            .into_iter()
            .zip(model.params.tensors())
            .map(|(name, t)| NamedTensor {
                name,
                shape: t.shape().to_vec(),
                data: t.data().iter().map(|v| v.as_f64()).collect(),
            })
            .collect();
        Self {
            format_version: ARTIFACT_FORMAT_VERSION,
            line: line.to_string(),
            member_index,
            seed: model.seed,
            config: config.clone(),
            companies: companies.to_vec(),
            sequence_length: model.params.sequence_length,
            parameters,
            trace: model.trace.clone(),
        }
    }

    /// Rebuilds the parameters, checking names and shapes against the
    /// architecture implied by the stored tensors.
    pub fn params<T: Scalar>(&self) -> Result<ModelParams<T>> {
        let bad = |message: String| Error::Artifact {
            path: Default::default(),
            message,
        };
        let find = |name: &str| {
            self.parameters
                .iter()
                .find(|p| p.name == name)
                .ok_or_else(|| bad(format!("missing tensor {name}")))
        };
        let enc = find("encoder.w_h")?;
        let dec = find("decoder.w_h")?;
        let emb = find("embedding.table")?;
        let head = find("paid_hidden.weight")?;
        let shape_of = |t: &NamedTensor, dims: usize| {
            if t.shape.len() == dims {
                Ok(t.shape.clone())
            } else {
                Err(bad(format!("tensor {} has shape {:?}", t.name, t.shape)))
            }
        };
        let (enc_s, dec_s, emb_s, head_s) = (
            shape_of(enc, 2)?,
            shape_of(dec, 2)?,
            shape_of(emb, 2)?,
            shape_of(head, 2)?,
        );
        let dims = Dimensions {
            levels: emb_s[0],
            embedding_dim: emb_s[1],
            encoder_units: enc_s[0],
            decoder_units: dec_s[0],
            head_hidden_units: head_s[0],
            sequence_length: self.sequence_length,
        };
        let mut params = ModelParams::<T>::zeros(dims);
        let names = ModelParams::<T>::tensor_names();
        if self.parameters.len() != names.len() {
            return Err(bad(format!(
                "expected {} tensors, found {}",
                names.len(),
                self.parameters.len()
            )));
        }
        for (name, slot) in names.iter().zip(params.tensors_mut()) {
            let stored = find(name)?;
            if stored.shape != slot.shape() {
                return Err(bad(format!(
                    "tensor {name}: shape {:?}, expected {:?}",
                    stored.shape,
                    slot.shape()
                )));
            }
            let data = stored.data.iter().map(|&v| T::lit(v)).collect();
            *slot = Tensor::new(stored.shape.clone(), data)?.with_grad();
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let artifact: Self = serde_json::from_str(&text).map_err(|e| Error::Artifact {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if artifact.format_version != ARTIFACT_FORMAT_VERSION {
            return Err(Error::Artifact {
                path: path.to_path_buf(),
                message: format!("unsupported format version {}", artifact.format_version),
            });
        }
        artifact.params::<f64>().map_err(|e| Error::Artifact {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(artifact)
    }
}
