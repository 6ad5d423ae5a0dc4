use num_traits::Num;

use crate::error::{Error, Result};
use crate::forecast::{CellKey, Forecast, ForecastCell};
use crate::triangle::{incremental_from_cumulative, Triangle};

pub const MACK_LABEL: &str = "Mack";

/// Volume-weighted chain-ladder factors.
///
/// `rows[r]` is the observed cumulative path of one accident year. Factor `c`
/// (transition from lag `c + 1` to `c + 2`) is the sum of column `c + 1` over
/// the rows that reach it, divided by the sum of column `c` over the same rows.
pub fn development_factors<T>(rows: &[Vec<T>]) -> Result<Vec<T>>
where
    T: Num + Copy,
{
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut factors = Vec::with_capacity(width.saturating_sub(1));
    for c in 0..width.saturating_sub(1) {
        let mut num = T::zero();
        let mut den = T::zero();
        for row in rows.iter().filter(|r| r.len() > c + 1) {
            num = num + row[c + 1];
            den = den + row[c];
        }
        if den.is_zero() {
            return Err(Error::UndefinedFactor {
                from: c + 1,
                to: c + 2,
            });
        }
        factors.push(num / den);
    }
    Ok(factors)
}

/// Extends an observed cumulative path to `factors.len() + 1` lags.
pub fn project_row<T>(observed: &[T], factors: &[T]) -> Vec<T>
where
    T: Num + Copy,
{
    let mut path = observed.to_vec();
    while path.len() < factors.len() + 1 {
        let last = *path.last().expect("non-empty observed row");
        path.push(last * factors[path.len() - 1]);
    }
    path
}

/// Chain-ladder point forecast of incremental paid for every open cell.
pub fn mack_point_estimate(t: &Triangle) -> Result<Forecast> {
    let mut out = Forecast::new(MACK_LABEL);
    let size = t.size();
    if size < 2 {
        return Ok(out);
    }
    let rows: Vec<Vec<f64>> = (1..=size).map(|i| t.observed_cumulative_paid(i)).collect();
    let factors = development_factors(&rows)?;
    for (r, row) in rows.iter().enumerate().skip(1) {
        let i = r + 1;
        let path = project_row(row, &factors);
        let incremental = incremental_from_cumulative(&path);
        let premium = t.premium(i);
        for j in row.len() + 1..=size {
            let paid = incremental[j - 1];
            out.insert(
                CellKey {
                    company: t.company,
                    accident_year_index: i,
                    lag: j,
                },
                ForecastCell {
                    paid_ratio: paid / premium,
                    outstanding_ratio: None,
                    paid,
                    outstanding: None,
                },
            );
        }
    }
    Ok(out)
}

/// [`mack_point_estimate`] over a set of triangles.
pub fn mack_forecast(triangles: &[Triangle]) -> Result<Forecast> {
    let mut out = Forecast::new(MACK_LABEL);
    for t in triangles {
        out.extend(mack_point_estimate(t)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_base_is_undefined() {
        let rows = vec![vec![0.0, 5.0], vec![0.0]];
        assert!(matches!(
            development_factors(&rows),
            Err(Error::UndefinedFactor { from: 1, to: 2 })
        ));
    }

    #[test]
    fn projection_keeps_observed_prefix() {
        let path: Vec<f64> = project_row(&[10.0, 20.0], &[2.0, 1.5, 1.1]);
        assert_eq!(path[..2], [10.0, 20.0]);
        assert_eq!(path[2], 30.0);
        assert!((path[3] - 33.0).abs() < 1e-12);
    }
}
