//! Seeded synthetic triangles with known development patterns.
//!
//! Each company follows one latent pattern: a loss ratio, a cumulative paid
//! proportion per lag and a case-reserve fraction of the unpaid remainder.
//! Incremental paid and outstanding amounts get independent multiplicative
//! lognormal noise with unit mean.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::triangle::{CellRecord, ColumnMap, CompanyCode, Triangle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevelopmentPattern {
    pub loss_ratio: f64,
    /// Cumulative paid share of ultimate at each lag; the last entry is 1.
    pub paid_shares: Vec<f64>,
    /// Outstanding as a share of the unpaid remainder.
    pub case_fraction: f64,
}

impl DevelopmentPattern {
    /// Incremental shares decaying by `decay` per lag.
    pub fn geometric(size: usize, decay: f64, loss_ratio: f64, case_fraction: f64) -> Self {
        let weights: Vec<f64> = (0..size).map(|j| decay.powi(j as i32)).collect();
        let total: f64 = weights.iter().sum();
        let mut running = 0.0;
        let mut paid_shares: Vec<f64> = weights
            .iter()
            .map(|w| {
                running += w / total;
                running
            })
            .collect();
        if let Some(last) = paid_shares.last_mut() {
            *last = 1.0;
        }
        Self {
            loss_ratio,
            paid_shares,
            case_fraction,
        }
    }

    pub fn size(&self) -> usize {
        self.paid_shares.len()
    }

    pub fn incremental_share(&self, j: usize) -> f64 {
        let prev = if j > 1 { self.paid_shares[j - 2] } else { 0.0 };
        self.paid_shares[j - 1] - prev
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub line: String,
    pub companies: usize,
    pub patterns: usize,
    pub size: usize,
    pub first_accident_year: i32,
    /// Standard deviation of the log noise; 0 gives exact patterns.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            line: "synthetic".into(),
            companies: 20,
            patterns: 3,
            size: 10,
            first_accident_year: 1988,
            noise: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCompany {
    pub triangle: Triangle,
    pub pattern: usize,
    /// Noise-free ultimate per accident year.
    pub expected_ultimates: Vec<f64>,
}

/// Builds one triangle. With `noise == 0` every cell sits exactly on the
/// pattern.
#[allow(clippy::too_many_arguments)]
pub fn pattern_triangle<R: Rng + ?Sized>(
    company: CompanyCode,
    level: usize,
    line: &str,
    first_accident_year: i32,
    pattern: &DevelopmentPattern,
    premiums: &[f64],
    noise: f64,
    rng: &mut R,
) -> Result<Triangle> {
    let size = pattern.size();
    if premiums.len() != size {
        return Err(Error::Contract(format!(
            "{} premiums for a {size}-lag pattern",
            premiums.len()
        )));
    }
    let jitter = LogNormal::new(-noise * noise / 2.0, noise)
        .map_err(|e| Error::Contract(format!("noise {noise}: {e}")))?;
    let draw = |rng: &mut R| if noise > 0.0 { jitter.sample(rng) } else { 1.0 };
    let mut cells = Vec::with_capacity(size);
    for &premium in premiums {
        let ultimate = pattern.loss_ratio * premium;
        let mut cumulative = 0.0;
        let mut row = Vec::with_capacity(size);
        for j in 1..=size {
            cumulative += ultimate * pattern.incremental_share(j) * draw(rng);
            let unpaid = ultimate * (1.0 - pattern.paid_shares[j - 1]);
            let outstanding = pattern.case_fraction * unpaid * draw(rng);
            row.push(Some(CellRecord {
                cumulative_paid: cumulative,
                incurred: cumulative + outstanding,
            }));
        }
        cells.push(row);
    }
    Triangle::new(
        company,
        line,
        level,
        first_accident_year,
        premiums.to_vec(),
        cells,
    )
}

fn random_pattern<R: Rng + ?Sized>(size: usize, rng: &mut R) -> DevelopmentPattern {
    DevelopmentPattern::geometric(
        size,
        rng.random_range(0.3..0.7),
        rng.random_range(0.55..0.85),
        rng.random_range(0.4..0.9),
    )
}

/// Draws the latent patterns, then assigns companies to them round-robin.
pub fn generate(
    config: &SyntheticConfig,
) -> Result<(Vec<DevelopmentPattern>, Vec<SyntheticCompany>)> {
    if config.companies == 0 || config.patterns == 0 || config.size < 2 {
        return Err(Error::Contract(
            "synthetic corpus needs companies, patterns and at least two lags".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let patterns: Vec<DevelopmentPattern> = (0..config.patterns)
        .map(|_| random_pattern(config.size, &mut rng))
        .collect();
    let mut companies = Vec::with_capacity(config.companies);
    for level in 0..config.companies {
        let pattern = level % config.patterns;
        let base = rng.random_range(1.0e6..1.0e7_f64).round();
        let growth = rng.random_range(0.98..1.06_f64);
        let premiums: Vec<f64> = (0..config.size)
            .map(|i| (base * growth.powi(i as i32)).round())
            .collect();
        let p = &patterns[pattern];
        let triangle = pattern_triangle(
            CompanyCode(1000 + level as u32),
            level,
            &config.line,
            config.first_accident_year,
            p,
            &premiums,
            config.noise,
            &mut rng,
        )?;
        companies.push(SyntheticCompany {
            triangle,
            pattern,
            expected_ultimates: premiums.iter().map(|v| v * p.loss_ratio).collect(),
        });
    }
    Ok((patterns, companies))
}

#[derive(Serialize)]
struct CsvRow {
    company_code: CompanyCode,
    accident_year: i32,
    development_lag: usize,
    incurred_loss: f64,
    cumulative_paid_loss: f64,
    net_earned_premium: f64,
}

/// Writes every known cell in the default [`ColumnMap`] layout.
pub fn write_csv<W: Write>(writer: W, triangles: &[Triangle]) -> Result<()> {
    debug_assert_eq!(ColumnMap::default().company, "company_code");
    let mut out = csv::Writer::from_writer(writer);
    for t in triangles {
        for i in 1..=t.size() {
            for j in 1..=t.size() {
                if let Some(c) = t.any_cell(i, j) {
                    out.serialize(CsvRow {
                        company_code: t.company,
                        accident_year: t.accident_year(i),
                        development_lag: j,
                        incurred_loss: c.incurred,
                        cumulative_paid_loss: c.cumulative_paid,
                        net_earned_premium: t.premium(i),
                    })?;
                }
            }
        }
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
