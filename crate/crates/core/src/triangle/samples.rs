use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{CompanyCode, Triangle};

/// Premium-normalized paid and outstanding for one cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RatioPair {
    pub paid: f64,
    pub outstanding: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Validation,
}

/// Which response cells must fall after the cutoff for a sample to be used
/// for validation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationRule {
    #[default]
    All,
    Any,
}

/// Training record for cell `(i, j)`: history of lags `1..j`, response of
/// lags `j..=I-i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub company: CompanyCode,
    pub company_index: usize,
    pub accident_year_index: usize,
    pub evaluation_lag: usize,
    /// Left-padded to `I - 1` steps.
    pub history: Vec<RatioPair>,
    pub history_mask: Vec<bool>,
    /// Right-padded to `I - 1` steps.
    pub response: Vec<RatioPair>,
    pub response_mask: Vec<bool>,
    pub split: SplitTag,
}

impl Sample {
    pub fn response_len(&self) -> usize {
        self.response_mask.iter().filter(|&&m| m).count()
    }

    pub fn history_len(&self) -> usize {
        self.history_mask.iter().filter(|&&m| m).count()
    }
}

/// Observed history of an open accident year, ready for forecasting.
#[derive(Debug, Clone, PartialEq)]
pub struct InferenceInput {
    pub company: CompanyCode,
    pub company_index: usize,
    pub accident_year_index: usize,
    pub history: Vec<RatioPair>,
    pub history_mask: Vec<bool>,
    /// Number of leading decoder steps needed to reach lag `I`.
    pub forecast_steps: usize,
}

fn ratios(t: &Triangle, i: usize) -> Result<Vec<RatioPair>> {
    let premium = t.premium(i);
    if !(premium.is_finite() && premium > 0.0) {
        return Err(Error::Normalization {
            company: t.company.0,
            accident_year: t.accident_year(i),
        });
    }
    Ok(t.observed_values(i)
        .into_iter()
        .map(|v| RatioPair {
            paid: v.paid_incremental / premium,
            outstanding: v.outstanding / premium,
        })
        .collect())
}

fn left_pad(values: &[RatioPair], len: usize) -> (Vec<RatioPair>, Vec<bool>) {
    let pad = len - values.len();
    let mut seq = vec![RatioPair::default(); pad];
    seq.extend_from_slice(values);
    let mut mask = vec![false; pad];
    mask.extend(std::iter::repeat_n(true, values.len()));
    (seq, mask)
}

fn right_pad(values: &[RatioPair], len: usize) -> (Vec<RatioPair>, Vec<bool>) {
    let mut seq = values.to_vec();
    seq.resize(len, RatioPair::default());
    let mut mask = vec![true; values.len()];
    mask.resize(len, false);
    (seq, mask)
}

/// Every sample with a non-empty history and a non-empty response.
pub fn build_samples(
    t: &Triangle,
    validation_after_year: i32,
    rule: ValidationRule,
) -> Result<Vec<Sample>> {
    let size = t.size();
    let steps = size.saturating_sub(1);
    let mut out = Vec::new();
    for i in 1..size {
        let row = ratios(t, i)?;
        let last = t.observed_len(i);
        for j in 2..=last {
            let (history, history_mask) = left_pad(&row[..j - 1], steps);
            let (response, response_mask) = right_pad(&row[j - 1..last], steps);
            let after = |lag: usize| t.calendar_year(i, lag) > validation_after_year;
            let validation = match rule {
                ValidationRule::All => (j..=last).all(after),
                ValidationRule::Any => (j..=last).any(after),
            };
            out.push(Sample {
                company: t.company,
                company_index: t.level,
                accident_year_index: i,
                evaluation_lag: j,
                history,
                history_mask,
                response,
                response_mask,
                split: if validation {
                    SplitTag::Validation
                } else {
                    SplitTag::Train
                },
            });
        }
    }
    Ok(out)
}

/// Full observed histories for accident years `2..=I`.
pub fn inference_inputs(t: &Triangle) -> Result<Vec<InferenceInput>> {
    let size = t.size();
    let steps = size.saturating_sub(1);
    let mut out = Vec::new();
    for i in 2..=size {
        let row = ratios(t, i)?;
        let (history, history_mask) = left_pad(&row, steps);
        out.push(InferenceInput {
            company: t.company,
            company_index: t.level,
            accident_year_index: i,
            history,
            history_mask,
            forecast_steps: i - 1,
        });
    }
    Ok(out)
}
