//! End-to-end steps shared by the command line tool and the acceptance suite:
//! samples from ingested triangles, ensemble training into artifacts, the
//! ensemble forecast, and evaluation against the chain-ladder baseline.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::eval::{
    actual_ultimates, evaluate, ldf_from_forecast, mack_forecast, report, ultimate_losses,
    EvaluationReport, LdfTable, MACK_LABEL,
};
use crate::forecast::{CellKey, Forecast, ForecastCell};
use crate::model::{ensemble_train, forecast, ModelArtifact, ModelConfig, ModelParams};
use crate::triangle::{build_samples, LineData, Sample, Triangle, ValidationRule};

pub fn line_samples(
    triangles: &[Triangle],
    validation_after_year: i32,
    rule: ValidationRule,
) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for t in triangles {
        out.extend(build_samples(t, validation_after_year, rule)?);
    }
    Ok(out)
}

/// Trains an ensemble on one line and packages every member as an artifact.
pub fn train_line(
    data: &LineData,
    config: &ModelConfig,
    validation_after_year: i32,
    rule: ValidationRule,
    jobs: usize,
) -> Result<Vec<ModelArtifact>> {
    let samples = line_samples(&data.triangles, validation_after_year, rule)?;
    let companies = data.companies();
    let models = ensemble_train::<f64>(config, &samples, companies.len(), jobs)?;
    Ok(models
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let member_config = ModelConfig {
                seed: m.seed,
                ..config.clone()
            };
            ModelArtifact::from_trained(&data.line, k, &member_config, &companies, m)
        })
        .collect())
}

pub fn member_file_name(index: usize) -> String {
    format!("member_{index:03}.json")
}

pub fn save_artifacts(dir: &Path, artifacts: &[ModelArtifact]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(member_file_name(a.member_index));
            a.save(&path)?;
            Ok(path)
        })
        .collect()
}

/// Loads `member_000.json`, `member_001.json`, ... until the first gap.
pub fn load_artifacts(dir: &Path) -> Result<Vec<ModelArtifact>> {
    let mut out = Vec::new();
    loop {
        let path = dir.join(member_file_name(out.len()));
        if !path.exists() {
            break;
        }
        out.push(ModelArtifact::load(&path)?);
    }
    if out.is_empty() {
        return Err(Error::Artifact {
            path: dir.join(member_file_name(0)),
            message: "no model artifact found".into(),
        });
    }
    Ok(out)
}

/// Ensemble-mean forecast, after checking that every member was trained on
/// the same company roster as `data`.
pub fn forecast_line(data: &LineData, artifacts: &[ModelArtifact]) -> Result<Forecast> {
    let companies = data.companies();
    let mut members: Vec<ModelParams<f64>> = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        if a.companies != companies {
            return Err(Error::Contract(format!(
                "member {} of line {} was trained on a different company roster",
                a.member_index, a.line
            )));
        }
        members.push(a.params()?);
    }
    forecast(&members, &data.triangles)
}

#[derive(Debug, Clone)]
pub struct LineEvaluation {
    pub line: String,
    pub triangles: Vec<Triangle>,
    pub network: Forecast,
    pub mack: Forecast,
    /// Network first, then Mack.
    pub reports: Vec<EvaluationReport>,
}

fn evaluate_forecast(data: &LineData, model: &str, f: &Forecast) -> Result<EvaluationReport> {
    let mut predicted = Vec::new();
    let mut actual = Vec::new();
    for t in &data.triangles {
        predicted.extend(ultimate_losses(t, f)?);
        actual.extend(actual_ultimates(t)?);
    }
    evaluate(&data.line, model, &predicted, &actual, &data.companies())
}

/// Scores `network` (labelled by its `model` field) and the chain ladder.
pub fn evaluate_line(data: &LineData, network: Forecast) -> Result<LineEvaluation> {
    let mack = mack_forecast(&data.triangles)?;
    let reports = vec![
        evaluate_forecast(data, &network.model, &network)?,
        evaluate_forecast(data, MACK_LABEL, &mack)?,
    ];
    Ok(LineEvaluation {
        line: data.line.clone(),
        triangles: data.triangles.clone(),
        network,
        mack,
        reports,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn write_forecast_file(path: &Path, triangles: &[Triangle], f: &Forecast) -> Result<()> {
    report::write_forecast(create(path)?, triangles, f)
}

#[derive(Debug, Deserialize)]
struct ForecastRecord {
    company: u32,
    accident_year: i32,
    lag: usize,
    paid: f64,
    #[serde(default)]
    outstanding: Option<f64>,
}

/// Reads a forecast in the layout of [`report::write_forecast`]. Only the
/// `company`, `accident_year`, `lag` and `paid` columns are required; ratios
/// are recomputed from the triangles' premiums.
pub fn read_forecast_file(path: &Path, triangles: &[Triangle], model: &str) -> Result<Forecast> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut out = Forecast::new(model);
    for (row, record) in reader.deserialize::<ForecastRecord>().enumerate() {
        let r = record?;
        let line = row as u64 + 2;
        let t = triangles
            .iter()
            .find(|t| t.company.0 == r.company)
            .ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("unknown company {}", r.company),
            })?;
        let offset = r.accident_year - t.first_accident_year;
        if offset < 0 || offset as usize >= t.size() || r.lag == 0 || r.lag > t.size() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("cell ({}, {}) outside the triangle", r.accident_year, r.lag),
            });
        }
        let i = offset as usize + 1;
        let premium = t.premium(i);
        out.insert(
            CellKey {
                company: t.company,
                accident_year_index: i,
                lag: r.lag,
            },
            ForecastCell {
                paid_ratio: r.paid / premium,
                outstanding_ratio: r.outstanding.map(|o| o / premium),
                paid: r.paid,
                outstanding: r.outstanding,
            },
        );
    }
    Ok(out)
}

pub fn write_factor_file(path: &Path, triangles: &[Triangle], f: &Forecast) -> Result<()> {
    let tables: Vec<LdfTable> = triangles.iter().map(|t| ldf_from_forecast(t, f)).collect();
    report::write_factors(create(path)?, triangles, &tables)
}

/// Writes `metrics.csv` and `company_detail.csv` for all lines into `dir`,
/// and development curves and factors per line into `dir/<line>/`.
pub fn write_evaluation(dir: &Path, evaluations: &[LineEvaluation]) -> Result<Vec<PathBuf>> {
    let reports: Vec<EvaluationReport> = evaluations
        .iter()
        .flat_map(|e| e.reports.iter().cloned())
        .collect();
    let metrics = dir.join("metrics.csv");
    report::write_metrics(create(&metrics)?, &reports)?;
    let detail = dir.join("company_detail.csv");
    report::write_company_detail(create(&detail)?, &reports)?;
    let mut written = vec![metrics, detail];
    for e in evaluations {
        let line_dir = dir.join(&e.line);
        let curves = line_dir.join("development_curves.csv");
        report::write_development_curves(create(&curves)?, &e.triangles, &e.network)?;
        let factors = line_dir.join("factors.csv");
        write_factor_file(&factors, &e.triangles, &e.network)?;
        let mack_factors = line_dir.join("mack_factors.csv");
        write_factor_file(&mack_factors, &e.triangles, &e.mack)?;
        written.extend([curves, factors, mack_factors]);
    }
    Ok(written)
}
