use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use deeptriangle::model::{ModelArtifact, ARTIFACT_FORMAT_VERSION};
use deeptriangle::pipeline;
use deeptriangle::triangle::{ingest_csv, write_triangle_dump, LineData};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Phase};

pub const MANIFEST: &str = "manifest.json";

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(deeptriangle::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut out = create(path)?;
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| io_error(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(deeptriangle::Error::Json(e)))?;
    text.push('\n');
    write_text(path, &text)
}

fn line_dir(config: &RunConfig, line: &str) -> PathBuf {
    config.output.join(line)
}

fn models_dir(config: &RunConfig, line: &str) -> PathBuf {
    line_dir(config, line).join("models")
}

pub fn resolved_config_name(command: &str) -> String {
    format!("resolved_config.{command}.toml")
}

/// Writes the resolved configuration of `command` into the output directory.
pub fn echo_config(config: &RunConfig, command: &str) -> Result<(), CliError> {
    write_text(
        &config.output.join(resolved_config_name(command)),
        &config.to_toml()?,
    )
}

fn ingest_lines(config: &RunConfig) -> Result<Vec<LineData>, CliError> {
    config
        .lines
        .iter()
        .map(|spec| {
            let options = spec.ingest_options()?;
            let data = ingest_csv(&spec.path, &spec.name, &options).data()?;
            if data.triangles.is_empty() {
                return Err(CliError::Data(deeptriangle::Error::Contract(format!(
                    "{}: no company triangle survived ingestion",
                    spec.path.display()
                ))));
            }
            Ok(data)
        })
        .collect()
}

pub fn ingest(config: &RunConfig) -> Result<(), CliError> {
    for data in ingest_lines(config)? {
        let dir = line_dir(config, &data.line);
        write_triangle_dump(create(&dir.join("triangles.csv"))?, &data.triangles).data()?;
        let summary = data.summary();
        write_json(&dir.join("summary.json"), &summary)?;
        println!(
            "{}: {} records, {} companies, {}x{} grid, {} observed and {} held-out cells, {} excluded",
            summary.line,
            summary.records,
            summary.companies,
            summary.accident_years,
            summary.development_lags,
            summary.observed_cells,
            summary.holdout_cells,
            summary.exclusions.len()
        );
        for e in &summary.exclusions {
            println!("  excluded company {}: {}", e.company, e.reason);
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct MemberEntry {
    index: usize,
    seed: u64,
    artifact: String,
    trace: String,
    epochs: usize,
    best_epoch: usize,
    best_validation_loss: f64,
    stopped_early: bool,
}

#[derive(Debug, Serialize)]
struct LineEntry {
    line: String,
    companies: usize,
    members: Vec<MemberEntry>,
}

#[derive(Debug, Serialize)]
struct Manifest {
    tool_version: &'static str,
    source_revision: &'static str,
    artifact_format_version: u32,
    root_seed: u64,
    lines: Vec<LineEntry>,
}

fn write_trace(path: &Path, artifact: &ModelArtifact) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(create(path)?);
    for e in &artifact.trace.epochs {
        out.serialize(e)
            .map_err(|e| CliError::Data(deeptriangle::Error::Csv(e)))?;
    }
    out.flush().map_err(|e| io_error(path, e))
}

fn relative(config: &RunConfig, path: &Path) -> String {
    path.strip_prefix(&config.output)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

pub fn train(config: &RunConfig) -> Result<(), CliError> {
    let mut lines = Vec::new();
    for data in ingest_lines(config)? {
        log::info!(
            "{}: training {} members on {} companies",
            data.line,
            config.model.ensemble_size,
            data.triangles.len()
        );
        let artifacts = pipeline::train_line(
            &data,
            &config.model,
            config.validation_after_year,
            config.validation_rule,
            config.jobs,
        )
        .training()?;
        let dir = models_dir(config, &data.line);
        for stale in [dir.clone(), line_dir(config, &data.line).join("traces")] {
            if stale.exists() {
                std::fs::remove_dir_all(&stale).map_err(|e| io_error(&stale, e))?;
            }
        }
        let paths = pipeline::save_artifacts(&dir, &artifacts).data()?;
        let mut members = Vec::new();
        for (a, path) in artifacts.iter().zip(paths) {
            let trace = line_dir(config, &data.line)
                .join("traces")
                .join(format!("member_{:03}.csv", a.member_index));
            write_trace(&trace, a)?;
            members.push(MemberEntry {
                index: a.member_index,
                seed: a.seed,
                artifact: relative(config, &path),
                trace: relative(config, &trace),
                epochs: a.trace.epochs.len(),
                best_epoch: a.trace.best_epoch,
                best_validation_loss: a.trace.best_validation_loss,
                stopped_early: a.trace.stopped_early,
            });
        }
        println!(
            "{}: trained {} members into {}",
            data.line,
            members.len(),
            dir.display()
        );
        lines.push(LineEntry {
            line: data.line.clone(),
            companies: data.triangles.len(),
            members,
        });
    }
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        source_revision: env!("DEEPTRIANGLE_GIT_DESCRIBE"),
        artifact_format_version: ARTIFACT_FORMAT_VERSION,
        root_seed: config.seed,
        lines,
    };
    write_json(&config.output.join(MANIFEST), &manifest)
}

fn load_models(config: &RunConfig, data: &LineData) -> Result<Vec<ModelArtifact>, CliError> {
    let artifacts = pipeline::load_artifacts(&models_dir(config, &data.line)).data()?;
    if let Some(a) = artifacts.iter().find(|a| a.line != data.line) {
        return Err(CliError::Data(deeptriangle::Error::Artifact {
            path: models_dir(config, &data.line),
            message: format!("member {} belongs to line {}", a.member_index, a.line),
        }));
    }
    Ok(artifacts)
}

pub fn forecast(config: &RunConfig) -> Result<(), CliError> {
    for data in ingest_lines(config)? {
        let artifacts = load_models(config, &data)?;
        let f = pipeline::forecast_line(&data, &artifacts).data()?;
        let dir = line_dir(config, &data.line);
        pipeline::write_forecast_file(&dir.join("forecast.csv"), &data.triangles, &f).data()?;
        pipeline::write_factor_file(&dir.join("factors.csv"), &data.triangles, &f).data()?;
        println!(
            "{}: {} forecast cells from {} members",
            data.line,
            f.len(),
            artifacts.len()
        );
    }
    Ok(())
}

/// Scores the trained ensemble, or the forecast in `external` when given,
/// against the held-out actuals and the chain ladder.
pub fn evaluate(config: &RunConfig, external: Option<&Path>) -> Result<(), CliError> {
    let lines = ingest_lines(config)?;
    if external.is_some() && lines.len() != 1 {
        return Err(CliError::Usage(
            "--forecast needs exactly one line; select it with --line".into(),
        ));
    }
    let mut evaluations = Vec::new();
    for data in &lines {
        let f = match external {
            Some(path) => {
                pipeline::read_forecast_file(path, &data.triangles, "Forecast file").data()?
            }
            None => {
                let artifacts = load_models(config, data)?;
                pipeline::forecast_line(data, &artifacts).data()?
            }
        };
        evaluations.push(pipeline::evaluate_line(data, f).data()?);
    }
    pipeline::write_evaluation(&config.output, &evaluations).data()?;
    for e in &evaluations {
        for r in &e.reports {
            println!(
                "{}: {} MAPE {:.4} RMSPE {:.4} over {} companies",
                r.line,
                r.model,
                r.mape,
                r.rmspe,
                r.companies.len()
            );
        }
    }
    Ok(())
}
