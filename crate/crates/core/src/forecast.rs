//! Forecast cells shared by the network and the chain-ladder baseline.

use std::collections::BTreeMap;

use crate::triangle::CompanyCode;

/// Identifies an unobserved cell: 1-based accident-year index and lag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub company: CompanyCode,
    pub accident_year_index: usize,
    pub lag: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastCell {
    pub paid_ratio: f64,
    /// Absent for models that only project paid losses.
    pub outstanding_ratio: Option<f64>,
    /// Incremental paid in currency (`paid_ratio × premium`).
    pub paid: f64,
    pub outstanding: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub model: String,
    cells: BTreeMap<CellKey, ForecastCell>,
}

impl Forecast {
    pub fn new(model: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            cells: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, key: CellKey, cell: ForecastCell) {
        self.cells.insert(key, cell);
    }

    pub fn get(
        &self,
        company: CompanyCode,
        accident_year_index: usize,
        lag: usize,
    ) -> Option<&ForecastCell> {
        self.cells.get(&CellKey {
            company,
            accident_year_index,
            lag,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CellKey, &ForecastCell)> {
        self.cells.iter()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Merges cells of `other` into `self`.
    pub fn extend(&mut self, other: Forecast) {
        self.cells.extend(other.cells);
    }
}
