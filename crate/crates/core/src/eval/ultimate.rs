use crate::error::{Error, Result};
use crate::forecast::Forecast;
use crate::triangle::{CompanyCode, Triangle};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UltimateLoss {
    pub company: CompanyCode,
    pub accident_year: i32,
    pub paid_to_date: f64,
    pub forecast_remaining: f64,
    /// `paid_to_date + forecast_remaining`
    pub ultimate: f64,
}

/// Paid to date on the diagonal plus every forecast incremental through lag `I`.
pub fn ultimate_losses(t: &Triangle, f: &Forecast) -> Result<Vec<UltimateLoss>> {
    let size = t.size();
    let mut out = Vec::with_capacity(size);
    for i in 1..=size {
        let paid_to_date = t.paid_to_date(i);
        let mut remaining = 0.0;
        for j in t.observed_len(i) + 1..=size {
            let cell = f.get(t.company, i, j).ok_or(Error::Coverage {
                company: t.company.0,
                accident_year: t.accident_year(i),
                lag: j,
            })?;
            remaining += cell.paid;
        }
        out.push(UltimateLoss {
            company: t.company,
            accident_year: t.accident_year(i),
            paid_to_date,
            forecast_remaining: remaining,
            ultimate: paid_to_date + remaining,
        });
    }
    Ok(out)
}

/// Realized ultimates from the held-out cells at lag `I`.
pub fn actual_ultimates(t: &Triangle) -> Result<Vec<UltimateLoss>> {
    (1..=t.size())
        .map(|i| {
            let ultimate = t.actual_ultimate(i).ok_or(Error::MissingActual {
                company: t.company.0,
                accident_year: t.accident_year(i),
            })?;
            let paid_to_date = t.paid_to_date(i);
            Ok(UltimateLoss {
                company: t.company,
                accident_year: t.accident_year(i),
                paid_to_date,
                forecast_remaining: ultimate - paid_to_date,
                ultimate,
            })
        })
        .collect()
}
