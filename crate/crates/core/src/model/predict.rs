use crate::error::{Error, Result};
use crate::forecast::{CellKey, Forecast, ForecastCell};
use crate::scalar::Scalar;
use crate::triangle::{inference_inputs, InferenceInput, Triangle};

use super::{HistoryRef, ModelParams};

pub const MODEL_LABEL: &str = "DeepTriangle";

/// Ensemble-mean forecast of every open cell of every triangle.
///
/// Decoded step `s` of an accident year with `I - i + 1` observed lags maps
/// to lag `I - i + 1 + s`; only the first `i - 1` steps are used. Ratios are
/// averaged across members and then scaled by the accident year's premium.
pub fn forecast<T: Scalar>(models: &[ModelParams<T>], triangles: &[Triangle]) -> Result<Forecast> {
    if models.is_empty() {
        return Err(Error::Contract("forecast needs at least one model".into()));
    }
    let mut inputs: Vec<(&Triangle, InferenceInput)> = Vec::new();
    for t in triangles {
        for input in inference_inputs(t)? {
            inputs.push((t, input));
        }
    }
    let mut out = Forecast::new(MODEL_LABEL);
    if inputs.is_empty() {
        return Ok(out);
    }
    let refs: Vec<HistoryRef> = inputs
        .iter()
        .map(|(_, inp)| HistoryRef {
            history: &inp.history,
            mask: &inp.history_mask,
            company_index: inp.company_index,
        })
        .collect();

    let steps = refs[0].history.len();
    let mut paid_sum = vec![vec![0.0; steps]; refs.len()];
    let mut os_sum = vec![vec![0.0; steps]; refs.len()];
    for model in models {
        let out = model.predict_batch(&refs)?;
        for r in 0..refs.len() {
            for s in 0..steps {
                paid_sum[r][s] += out.paid[r][s];
                os_sum[r][s] += out.outstanding[r][s];
            }
        }
    }
    let n = models.len() as f64;
    for (r, (t, input)) in inputs.iter().enumerate() {
        let i = input.accident_year_index;
        let premium = t.premium(i);
        let base = t.observed_len(i);
        for s in 0..input.forecast_steps {
            let paid_ratio = paid_sum[r][s] / n;
            let outstanding_ratio = os_sum[r][s] / n;
            out.insert(
                CellKey {
                    company: t.company,
                    accident_year_index: i,
                    lag: base + s + 1,
                },
                ForecastCell {
                    paid_ratio,
                    outstanding_ratio: Some(outstanding_ratio),
                    paid: paid_ratio * premium,
                    outstanding: Some(outstanding_ratio * premium),
                },
            );
        }
    }
    Ok(out)
}
