//! Development triangles and the training samples cut from them.
//!
//! Accident years and development lags are 1-based throughout this module:
//! accident-year index `i` and lag `j` both run over `1..=I`. The observed
//! region at the valuation date is `i + j <= I + 1`; every cell below that
//! diagonal is held out and only used to score forecasts.

mod ingest;
mod samples;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ingest::{
    cas_source, ingest_csv, write_triangle_dump, ColumnMap, Exclusion, IngestOptions,
    IngestSummary, LineData, LineFilter,
};
pub use samples::{
    build_samples, inference_inputs, InferenceInput, RatioPair, Sample, SplitTag, ValidationRule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CompanyCode(pub u32);

impl std::fmt::Display for CompanyCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Raw cumulative amounts for one (accident year, lag) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellRecord {
    pub cumulative_paid: f64,
    pub incurred: f64,
}

impl CellRecord {
    /// Case reserves: incurred less cumulative paid.
    pub fn outstanding(&self) -> f64 {
        self.incurred - self.cumulative_paid
    }
}

/// Model-facing view of a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellValue {
    pub paid_incremental: f64,
    pub outstanding: f64,
}

/// First differences; the first element is kept as is.
pub fn incremental_from_cumulative<T>(cumulative: &[T]) -> Vec<T>
where
    T: Copy + std::ops::Sub<Output = T>,
{
    let mut out = Vec::with_capacity(cumulative.len());
    if let Some(&first) = cumulative.first() {
        out.push(first);
    }
    out.extend(cumulative.windows(2).map(|w| w[1] - w[0]));
    out
}

pub fn cumulative_from_incremental<T>(incremental: &[T]) -> Vec<T>
where
    T: Copy + std::ops::Add<Output = T>,
{
    let mut out: Vec<T> = Vec::with_capacity(incremental.len());
    for &d in incremental {
        let next = match out.last() {
            Some(&prev) => prev + d,
            None => d,
        };
        out.push(next);
    }
    out
}

/// One company's square of accident years by development lags.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    pub company: CompanyCode,
    pub line: String,
    /// Embedding level of the company within its line.
    pub level: usize,
    pub first_accident_year: i32,
    premium: Vec<f64>,
    /// Row `i - 1` holds lags `1..=I - i + 1`.
    observed: Vec<Vec<CellRecord>>,
    /// Row `i - 1` holds lags `I - i + 2..=I`.
    holdout: Vec<Vec<Option<CellRecord>>>,
}

impl Triangle {
    /// Builds a triangle from a full `I x I` grid (`cells[i-1][j-1]`).
    ///
    /// Every observed cell must be present and every premium positive;
    /// held-out cells may be missing.
    pub fn new(
        company: CompanyCode,
        line: impl Into<String>,
        level: usize,
        first_accident_year: i32,
        premium: Vec<f64>,
        cells: Vec<Vec<Option<CellRecord>>>,
    ) -> Result<Self> {
        let size = premium.len();
        if size == 0 || cells.len() != size || cells.iter().any(|row| row.len() != size) {
            return Err(Error::Contract(format!(
                "company {company}: triangle must be square with one premium per accident year"
            )));
        }
        for (r, &p) in premium.iter().enumerate() {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::Normalization {
                    company: company.0,
                    accident_year: first_accident_year + r as i32,
                });
            }
        }
        let mut observed = Vec::with_capacity(size);
        let mut holdout = Vec::with_capacity(size);
        for (r, row) in cells.into_iter().enumerate() {
            let open = size - r;
            let mut seen = Vec::with_capacity(open);
            for (c, cell) in row[..open].iter().enumerate() {
                seen.push(cell.ok_or_else(|| {
                    Error::Contract(format!(
                        "company {company}: missing observed cell (accident year {}, lag {})",
                        first_accident_year + r as i32,
                        c + 1
                    ))
                })?);
            }
            observed.push(seen);
            holdout.push(row[open..].to_vec());
        }
        Ok(Self {
            company,
            line: line.into(),
            level,
            first_accident_year,
            premium,
            observed,
            holdout,
        })
    }

    /// Number of accident years `I` (equal to the number of lags).
    pub fn size(&self) -> usize {
        self.premium.len()
    }

    pub fn accident_year(&self, i: usize) -> i32 {
        self.first_accident_year + i as i32 - 1
    }

    pub fn calendar_year(&self, i: usize, j: usize) -> i32 {
        self.first_accident_year + (i + j) as i32 - 2
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        i >= 1 && j >= 1 && i + j <= self.size() + 1
    }

    pub fn premium(&self, i: usize) -> f64 {
        self.premium[i - 1]
    }

    pub fn premiums(&self) -> &[f64] {
        &self.premium
    }

    /// Number of observed lags for accident year `i`.
    pub fn observed_len(&self, i: usize) -> usize {
        self.size() + 1 - i
    }

    pub fn observed_row(&self, i: usize) -> &[CellRecord] {
        &self.observed[i - 1]
    }

    pub fn observed(&self, i: usize, j: usize) -> Option<CellRecord> {
        self.observed
            .get(i.wrapping_sub(1))?
            .get(j.wrapping_sub(1))
            .copied()
    }

    pub fn holdout(&self, i: usize, j: usize) -> Option<CellRecord> {
        if self.is_observed(i, j) || i == 0 || i > self.size() || j > self.size() {
            return None;
        }
        let open = self.observed_len(i);
        self.holdout[i - 1][j - 1 - open]
    }

    /// Observed cell if available, otherwise the held-out one.
    pub fn any_cell(&self, i: usize, j: usize) -> Option<CellRecord> {
        self.observed(i, j).or_else(|| self.holdout(i, j))
    }

    pub fn observed_cells(&self) -> usize {
        self.observed.iter().map(Vec::len).sum()
    }

    pub fn holdout_cells(&self) -> usize {
        self.holdout
            .iter()
            .flatten()
            .filter(|c| c.is_some())
            .count()
    }

    /// Cumulative paid along the observed part of row `i`.
    pub fn observed_cumulative_paid(&self, i: usize) -> Vec<f64> {
        self.observed_row(i)
            .iter()
            .map(|c| c.cumulative_paid)
            .collect()
    }

    /// Incremental paid and outstanding for every observed cell of row `i`.
    pub fn observed_values(&self, i: usize) -> Vec<CellValue> {
        let paid = incremental_from_cumulative(&self.observed_cumulative_paid(i));
        paid.into_iter()
            .zip(self.observed_row(i))
            .map(|(p, c)| CellValue {
                paid_incremental: p,
                outstanding: c.outstanding(),
            })
            .collect()
    }

    /// Paid to date on the valuation diagonal for accident year `i`.
    pub fn paid_to_date(&self, i: usize) -> f64 {
        self.observed_row(i)
            .last()
            .map_or(0.0, |c| c.cumulative_paid)
    }

    /// Cumulative paid at lag `I` from observed or held-out data.
    pub fn actual_ultimate(&self, i: usize) -> Option<f64> {
        self.any_cell(i, self.size()).map(|c| c.cumulative_paid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(
        size: usize,
        f: impl Fn(usize, usize) -> Option<CellRecord>,
    ) -> Vec<Vec<Option<CellRecord>>> {
        (1..=size)
            .map(|i| (1..=size).map(|j| f(i, j)).collect())
            .collect()
    }

    fn cell(paid: f64, incurred: f64) -> Option<CellRecord> {
        Some(CellRecord {
            cumulative_paid: paid,
            incurred,
        })
    }

    #[test]
    fn differencing_cases() {
        assert_eq!(
            incremental_from_cumulative(&[100.0, 150.0, 165.0]),
            vec![100.0, 50.0, 15.0]
        );
        assert_eq!(
            incremental_from_cumulative(&[80.0, 80.0, 80.0]),
            vec![80.0, 0.0, 0.0]
        );
        assert_eq!(
            incremental_from_cumulative(&[100.0, 95.0]),
            vec![100.0, -5.0]
        );
        assert!(incremental_from_cumulative::<f64>(&[]).is_empty());
    }

    #[test]
    fn outstanding_is_incurred_less_paid() {
        let c = CellRecord {
            cumulative_paid: 320.0,
            incurred: 500.0,
        };
        assert_eq!(c.outstanding(), 180.0);
    }

    #[test]
    fn observed_and_holdout_are_disjoint() {
        let t = Triangle::new(
            CompanyCode(7),
            "x",
            0,
            1988,
            vec![1000.0; 4],
            grid(4, |i, j| cell((i * 10 + j) as f64, 100.0)),
        )
        .unwrap();
        assert_eq!(t.observed_cells(), 10);
        assert_eq!(t.holdout_cells(), 6);
        assert_eq!(t.observed(2, 3).unwrap().cumulative_paid, 23.0);
        assert!(t.observed(2, 4).is_none());
        assert_eq!(t.holdout(2, 4).unwrap().cumulative_paid, 24.0);
        assert!(t.holdout(2, 3).is_none());
        assert_eq!(t.actual_ultimate(1), Some(14.0));
        assert_eq!(t.actual_ultimate(4), Some(44.0));
        assert_eq!(t.calendar_year(4, 1), 1991);
        assert_eq!(t.paid_to_date(3), 32.0);
    }

    #[test]
    fn rejects_missing_observed_cell_and_bad_premium() {
        let holes = grid(3, |i, j| {
            if (i, j) == (2, 2) {
                None
            } else {
                cell(1.0, 1.0)
            }
        });
        assert!(Triangle::new(CompanyCode(1), "x", 0, 1990, vec![1.0; 3], holes).is_err());

        let full = grid(3, |_, _| cell(1.0, 1.0));
        let err =
            Triangle::new(CompanyCode(1), "x", 0, 1990, vec![1.0, 0.0, 1.0], full).unwrap_err();
        assert!(matches!(
            err,
            Error::Normalization {
                accident_year: 1991,
                ..
            }
        ));
    }
}
