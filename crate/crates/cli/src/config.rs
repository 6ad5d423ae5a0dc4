use std::path::{Path, PathBuf};

use deeptriangle::model::ModelConfig;
use deeptriangle::triangle::{
    cas_source, ColumnMap, CompanyCode, IngestOptions, LineFilter, ValidationRule,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Column layout of an input file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    /// `company_code,accident_year,development_lag,incurred_loss,cumulative_paid_loss,net_earned_premium`
    #[default]
    Canonical,
    /// CAS Schedule P extract with the line's column suffix.
    Cas,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSpec {
    pub name: String,
    /// Relative paths are resolved against the config file's directory.
    pub path: PathBuf,
    #[serde(default)]
    pub format: DataFormat,
    /// Overrides the columns implied by `format`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<ColumnMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_filter: Option<LineFilter>,
    /// Companies to keep, in embedding-level order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roster: Option<Vec<CompanyCode>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cutoff")]
    pub validation_after_year: i32,
    #[serde(default)]
    pub validation_rule: ValidationRule,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    pub lines: Vec<LineSpec>,
    #[serde(default)]
    pub model: ModelConfig,
}

fn default_cutoff() -> i32 {
    1995
}

fn default_jobs() -> usize {
    1
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub line: Option<String>,
    pub ensemble_size: Option<usize>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

impl LineSpec {
    pub fn column_map(&self) -> Result<ColumnMap, CliError> {
        if let Some(columns) = &self.columns {
            return Ok(columns.clone());
        }
        match self.format {
            DataFormat::Canonical => Ok(ColumnMap::default()),
            DataFormat::Cas => cas_source(&self.name)
                .map(|(_, suffix)| ColumnMap::cas(suffix))
                .ok_or_else(|| {
                    CliError::Config(format!(
                        "line `{}`: no CAS column suffix known; give `columns` explicitly",
                        self.name
                    ))
                }),
        }
    }

    pub fn ingest_options(&self) -> Result<IngestOptions, CliError> {
        Ok(IngestOptions {
            columns: self.column_map()?,
            line_filter: self.line_filter.clone(),
            roster: self.roster.clone(),
        })
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut config =
            Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for line in &mut config.lines {
            if line.path.is_relative() {
                line.path = base.join(&line.path);
            }
        }
        if config.output.is_relative() {
            config.output = base.join(&config.output);
        }
        Ok(config)
    }

    /// Applies flag overrides, fills in derived values and validates.
    pub fn resolve(mut self, overrides: &Overrides) -> Result<Self, CliError> {
        if let Some(name) = &overrides.line {
            self.lines.retain(|l| &l.name == name);
            if self.lines.is_empty() {
                return Err(CliError::Config(format!("line `{name}` is not configured")));
            }
        }
        if let Some(n) = overrides.ensemble_size {
            self.model.ensemble_size = n;
        }
        if let Some(n) = overrides.jobs {
            self.jobs = n;
        }
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(out) = &overrides.output {
            self.output = out.clone();
        }
        self.model.seed = self.seed;
        if self.lines.is_empty() {
            return Err(CliError::Config("no lines configured".into()));
        }
        if self.jobs == 0 {
            return Err(CliError::Config("jobs must be positive".into()));
        }
        for (k, line) in self.lines.iter().enumerate() {
            if self.lines[..k].iter().any(|l| l.name == line.name) {
                return Err(CliError::Config(format!(
                    "line `{}` listed twice",
                    line.name
                )));
            }
            if line.name.is_empty() || line.name.contains(['/', '\\']) {
                return Err(CliError::Config(format!(
                    "invalid line name `{}`",
                    line.name
                )));
            }
        }
        for line in &mut self.lines {
            line.columns = Some(line.column_map()?);
        }
        self.model
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(self)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }
}
