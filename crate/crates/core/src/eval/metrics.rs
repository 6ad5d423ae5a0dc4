use std::collections::BTreeMap;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::triangle::CompanyCode;

use super::UltimateLoss;

/// `(predicted - actual) / actual` for each pair.
pub fn percentage_errors<T: Float>(predicted: &[T], actual: &[T]) -> Vec<T> {
    predicted
        .iter()
        .zip(actual)
        .map(|(&p, &a)| (p - a) / a)
        .collect()
}

pub fn mape<T: Float>(errors: &[T]) -> T {
    let mut total = T::zero();
    for e in errors {
        total = total + e.abs();
    }
    total / T::from(errors.len()).expect("count fits the scalar")
}

pub fn rmspe<T: Float>(errors: &[T]) -> T {
    let mut total = T::zero();
    for e in errors {
        total = total + *e * *e;
    }
    (total / T::from(errors.len()).expect("count fits the scalar")).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompanyResult {
    pub company: CompanyCode,
    pub predicted: f64,
    pub actual: f64,
    pub percentage_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub line: String,
    pub model: String,
    pub mape: f64,
    pub rmspe: f64,
    /// Scored companies, in roster order.
    pub companies: Vec<CompanyResult>,
    /// Roster companies skipped because their actual ultimate is zero.
    pub excluded: Vec<CompanyCode>,
}

fn totals(losses: &[UltimateLoss]) -> BTreeMap<CompanyCode, f64> {
    let mut out = BTreeMap::new();
    for l in losses {
        *out.entry(l.company).or_insert(0.0) += l.ultimate;
    }
    out
}

/// Company-level MAPE and RMSPE over ultimates summed across accident years.
pub fn evaluate(
    line: &str,
    model: &str,
    predicted: &[UltimateLoss],
    actual: &[UltimateLoss],
    roster: &[CompanyCode],
) -> Result<EvaluationReport> {
    let predicted = totals(predicted);
    let actual = totals(actual);
    let mut companies = Vec::with_capacity(roster.len());
    let mut excluded = Vec::new();
    for &company in roster {
        let p = *predicted.get(&company).ok_or(Error::MissingCompany {
            company: company.0,
            what: "predicted ultimates",
        })?;
        let a = *actual.get(&company).ok_or(Error::MissingCompany {
            company: company.0,
            what: "actual ultimates",
        })?;
        if a == 0.0 {
            log::warn!("{line}/{model}: company {company} has zero actual ultimate; excluded");
            excluded.push(company);
            continue;
        }
        companies.push(CompanyResult {
            company,
            predicted: p,
            actual: a,
            percentage_error: (p - a) / a,
        });
    }
    if companies.is_empty() {
        return Err(Error::Contract(format!(
            "{line}/{model}: no companies left to evaluate"
        )));
    }
    let errors: Vec<f64> = companies.iter().map(|c| c.percentage_error).collect();
    Ok(EvaluationReport {
        line: line.to_string(),
        model: model.to_string(),
        mape: mape(&errors),
        rmspe: rmspe(&errors),
        companies,
        excluded,
    })
}
