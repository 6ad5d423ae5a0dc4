//! CSV writers for evaluation output.
//!
//! | file | columns |
//! |------|---------|
//! | metrics | `line,model,metric,value,source` |
//! | company detail | `line,model,company,predicted_ultimate,actual_ultimate,percentage_error` |
//! | development curves | `company,accident_year,lag,observed,actual_paid_ratio,actual_outstanding_ratio,predicted_paid_ratio,predicted_outstanding_ratio` |
//! | factors | `company,accident_year,from_lag,to_lag,factor,forecast` |
//! | forecast | `company,accident_year,lag,paid,outstanding,paid_ratio,outstanding_ratio` |
//!
//! Paid ratios in the curve file are cumulative paid over premium. Predicted
//! columns are empty on observed cells and actual columns are empty where no
//! held-out value exists.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::forecast::Forecast;
use crate::triangle::{CompanyCode, Triangle};

use super::published::{self, DISPLAYED};
use super::{EvaluationReport, LdfTable};

#[derive(Debug, Serialize)]
struct MetricRow<'a> {
    line: &'a str,
    model: &'a str,
    metric: &'static str,
    value: f64,
    source: &'static str,
}

/// One row per (line, model, metric): computed metrics first, then the published constants
/// of the models that are displayed but not run.
pub fn write_metrics<W: Write>(writer: W, reports: &[EvaluationReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for r in reports {
        for (metric, value) in [("mape", r.mape), ("rmspe", r.rmspe)] {
            out.serialize(MetricRow {
                line: &r.line,
                model: &r.model,
                metric,
                value,
                source: "computed",
            })?;
        }
    }
    let mut lines: Vec<&str> = reports.iter().map(|r| r.line.as_str()).collect();
    lines.dedup();
    for line in lines {
        for model in DISPLAYED {
            if let Some((mape, rmspe)) = published::lookup(line, model) {
                for (metric, value) in [("mape", mape), ("rmspe", rmspe)] {
                    out.serialize(MetricRow {
                        line,
                        model,
                        metric,
                        value,
                        source: "published",
                    })?;
                }
            }
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct CompanyRow<'a> {
    line: &'a str,
    model: &'a str,
    company: CompanyCode,
    predicted_ultimate: f64,
    actual_ultimate: f64,
    percentage_error: f64,
}

pub fn write_company_detail<W: Write>(writer: W, reports: &[EvaluationReport]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for r in reports {
        for c in &r.companies {
            out.serialize(CompanyRow {
                line: &r.line,
                model: &r.model,
                company: c.company,
                predicted_ultimate: c.predicted,
                actual_ultimate: c.actual,
                percentage_error: c.percentage_error,
            })?;
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct CurveRow {
    company: CompanyCode,
    accident_year: i32,
    lag: usize,
    observed: bool,
    actual_paid_ratio: Option<f64>,
    actual_outstanding_ratio: Option<f64>,
    predicted_paid_ratio: Option<f64>,
    predicted_outstanding_ratio: Option<f64>,
}

/// One row per (company, accident year, lag) of every triangle.
pub fn write_development_curves<W: Write>(
    writer: W,
    triangles: &[Triangle],
    forecast: &Forecast,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for t in triangles {
        for i in 1..=t.size() {
            let premium = t.premium(i);
            let mut predicted_cumulative = t.paid_to_date(i);
            for j in 1..=t.size() {
                let observed = t.is_observed(i, j);
                let actual = t.any_cell(i, j);
                let (predicted_paid_ratio, predicted_outstanding_ratio) = if observed {
                    (None, None)
                } else {
                    match forecast.get(t.company, i, j) {
                        Some(cell) => {
                            predicted_cumulative += cell.paid;
                            (Some(predicted_cumulative / premium), cell.outstanding_ratio)
                        }
                        None => (None, None),
                    }
                };
                out.serialize(CurveRow {
                    company: t.company,
                    accident_year: t.accident_year(i),
                    lag: j,
                    observed,
                    actual_paid_ratio: actual.map(|c| c.cumulative_paid / premium),
                    actual_outstanding_ratio: actual.map(|c| c.outstanding() / premium),
                    predicted_paid_ratio,
                    predicted_outstanding_ratio,
                })?;
            }
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct LdfRow {
    company: CompanyCode,
    accident_year: i32,
    from_lag: usize,
    to_lag: usize,
    factor: Option<f64>,
    forecast: bool,
}

pub fn write_factors<W: Write>(
    writer: W,
    triangles: &[Triangle],
    tables: &[LdfTable],
) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for (t, table) in triangles.iter().zip(tables) {
        for e in &table.entries {
            out.serialize(LdfRow {
                company: e.company,
                accident_year: t.accident_year(e.accident_year_index),
                from_lag: e.from_lag,
                to_lag: e.from_lag + 1,
                factor: e.factor,
                forecast: e.forecast,
            })?;
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ForecastRow {
    company: CompanyCode,
    accident_year: i32,
    lag: usize,
    paid: f64,
    outstanding: Option<f64>,
    paid_ratio: f64,
    outstanding_ratio: Option<f64>,
}

/// Every forecast cell, in company, accident year, lag order.
pub fn write_forecast<W: Write>(
    writer: W,
    triangles: &[Triangle],
    forecast: &Forecast,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for (key, cell) in forecast.iter() {
        let Some(t) = triangles.iter().find(|t| t.company == key.company) else {
            continue;
        };
        out.serialize(ForecastRow {
            company: key.company,
            accident_year: t.accident_year(key.accident_year_index),
            lag: key.lag,
            paid: cell.paid,
            outstanding: cell.outstanding,
            paid_ratio: cell.paid_ratio,
            outstanding_ratio: cell.outstanding_ratio,
        })?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
