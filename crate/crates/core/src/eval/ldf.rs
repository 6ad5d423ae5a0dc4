use crate::forecast::Forecast;
use crate::triangle::{cumulative_from_incremental, CompanyCode, Triangle};

/// Age-to-age factor of one accident year for the transition `from_lag -> from_lag + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdfEntry {
    pub company: CompanyCode,
    pub accident_year_index: usize,
    pub from_lag: usize,
    /// `None` when the cumulative base is zero.
    pub factor: Option<f64>,
    /// Whether the destination cell comes from the forecast.
    pub forecast: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LdfTable {
    pub entries: Vec<LdfEntry>,
}

impl LdfTable {
    pub fn get(
        &self,
        company: CompanyCode,
        accident_year_index: usize,
        from_lag: usize,
    ) -> Option<&LdfEntry> {
        self.entries.iter().find(|e| {
            e.company == company
                && e.accident_year_index == accident_year_index
                && e.from_lag == from_lag
        })
    }
}

/// Builds each accident year's cumulative paid path (observed, then forecast
/// increments) and takes ratios of successive values. Rows whose forecast is
/// incomplete stop at the first missing cell.
pub fn ldf_from_forecast(t: &Triangle, f: &Forecast) -> LdfTable {
    let mut entries = Vec::new();
    for i in 1..=t.size() {
        let mut path = t.observed_cumulative_paid(i);
        let observed = path.len();
        let mut increments = Vec::new();
        for j in observed + 1..=t.size() {
            match f.get(t.company, i, j) {
                Some(cell) => increments.push(cell.paid),
                None => break,
            }
        }
        let mut seed = vec![*path.last().unwrap_or(&0.0)];
        seed.extend(increments);
        path.extend(cumulative_from_incremental(&seed).into_iter().skip(1));
        for (k, w) in path.windows(2).enumerate() {
            entries.push(LdfEntry {
                company: t.company,
                accident_year_index: i,
                from_lag: k + 1,
                factor: (w[0] != 0.0).then(|| w[1] / w[0]),
                forecast: k + 2 > observed,
            });
        }
    }
    LdfTable { entries }
}
