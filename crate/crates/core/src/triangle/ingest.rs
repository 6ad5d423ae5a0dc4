use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{CellRecord, CompanyCode, Triangle};

/// Physical CSV column names for the logical fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMap {
    pub company: String,
    pub accident_year: String,
    pub development_lag: String,
    pub incurred: String,
    pub cumulative_paid: String,
    pub premium: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            company: "company_code".into(),
            accident_year: "accident_year".into(),
            development_lag: "development_lag".into(),
            incurred: "incurred_loss".into(),
            cumulative_paid: "cumulative_paid_loss".into(),
            premium: "net_earned_premium".into(),
        }
    }
}

impl ColumnMap {
    /// Column names of the CAS Schedule P extracts, where loss and premium
    /// columns carry a per-line suffix (`_C` for commercial auto, `_D` for
    /// workers' compensation, and so on).
    pub fn cas(suffix: &str) -> Self {
        Self {
            company: "GRCODE".into(),
            accident_year: "AccidentYear".into(),
            development_lag: "DevelopmentLag".into(),
            incurred: format!("IncurLoss{suffix}"),
            cumulative_paid: format!("CumPaidLoss{suffix}"),
            premium: format!("EarnedPremNet{suffix}"),
        }
    }
}

/// File name and column suffix of the public CAS Schedule P extract for a
/// line of business (any spelling accepted by
/// [`canonical_line`](crate::eval::published::canonical_line)).
pub fn cas_source(line: &str) -> Option<(&'static str, &'static str)> {
    let source = match crate::eval::published::canonical_line(line)? {
        "commercial_auto" => ("comauto_pos.csv", "_C"),
        "other_liability" => ("othliab_pos.csv", "_h1"),
        "private_passenger_auto" => ("ppauto_pos.csv", "_B"),
        "workers_compensation" => ("wkcomp_pos.csv", "_D"),
        _ => return None,
    };
    Some(source)
}

/// Keep only rows whose `column` equals `value`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineFilter {
    pub column: String,
    pub value: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestOptions {
    pub columns: ColumnMap,
    pub line_filter: Option<LineFilter>,
    /// Companies to keep, in embedding-level order. All companies when unset.
    pub roster: Option<Vec<CompanyCode>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub company: CompanyCode,
    pub reason: String,
}

/// All retained triangles of one line of business.
#[derive(Debug, Clone)]
pub struct LineData {
    pub line: String,
    /// Indexed by embedding level.
    pub triangles: Vec<Triangle>,
    pub exclusions: Vec<Exclusion>,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub line: String,
    pub records: usize,
    pub companies: usize,
    pub accident_years: usize,
    pub development_lags: usize,
    pub first_accident_year: Option<i32>,
    pub observed_cells: usize,
    pub holdout_cells: usize,
    pub exclusions: Vec<Exclusion>,
}

impl LineData {
    /// Common triangle size `I`, or 0 when no company was retained.
    pub fn size(&self) -> usize {
        self.triangles.first().map_or(0, Triangle::size)
    }

    pub fn companies(&self) -> Vec<CompanyCode> {
        self.triangles.iter().map(|t| t.company).collect()
    }

    pub fn summary(&self) -> IngestSummary {
        IngestSummary {
            line: self.line.clone(),
            records: self.records,
            companies: self.triangles.len(),
            accident_years: self.size(),
            development_lags: self.size(),
            first_accident_year: self.triangles.first().map(|t| t.first_accident_year),
            observed_cells: self.triangles.iter().map(Triangle::observed_cells).sum(),
            holdout_cells: self.triangles.iter().map(Triangle::holdout_cells).sum(),
            exclusions: self.exclusions.clone(),
        }
    }
}

struct Record {
    accident_year: i32,
    lag: u32,
    cell: CellRecord,
    premium: f64,
}

fn column_index(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Schema {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
}

fn parse_field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    index: usize,
    column: &str,
    path: &Path,
) -> Result<T> {
    let raw = record.get(index).unwrap_or("");
    raw.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line: record.position().map_or(0, |p| p.line()),
        message: format!("column `{column}`: cannot parse {raw:?}"),
    })
}

/// Reads one line of business from a Schedule P style CSV.
pub fn ingest_csv(path: &Path, line: &str, options: &IngestOptions) -> Result<LineData> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(Error::NoRecords {
            path: path.to_path_buf(),
        });
    }
    let cols = &options.columns;
    let company_ix = column_index(&headers, &cols.company, path)?;
    let ay_ix = column_index(&headers, &cols.accident_year, path)?;
    let lag_ix = column_index(&headers, &cols.development_lag, path)?;
    let incurred_ix = column_index(&headers, &cols.incurred, path)?;
    let paid_ix = column_index(&headers, &cols.cumulative_paid, path)?;
    let premium_ix = column_index(&headers, &cols.premium, path)?;
    let filter = match &options.line_filter {
        Some(f) => Some((column_index(&headers, &f.column, path)?, f.value.as_str())),
        None => None,
    };

    let mut by_company: BTreeMap<CompanyCode, Vec<Record>> = BTreeMap::new();
    let mut seen: HashMap<(CompanyCode, i32, u32), u64> = HashMap::new();
    let mut records = 0;
    for row in reader.records() {
        let row = row?;
        if let Some((ix, value)) = filter {
            if row.get(ix) != Some(value) {
                continue;
            }
        }
        let line_no = row.position().map_or(0, |p| p.line());
        let company = CompanyCode(parse_field(&row, company_ix, &cols.company, path)?);
        let accident_year: i32 = parse_field(&row, ay_ix, &cols.accident_year, path)?;
        let lag: u32 = parse_field(&row, lag_ix, &cols.development_lag, path)?;
        if lag == 0 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: "development lag is 1-based".into(),
            });
        }
        let cell = CellRecord {
            incurred: parse_field(&row, incurred_ix, &cols.incurred, path)?,
            cumulative_paid: parse_field(&row, paid_ix, &cols.cumulative_paid, path)?,
        };
        let premium = parse_field(&row, premium_ix, &cols.premium, path)?;
        if seen
            .insert((company, accident_year, lag), line_no)
            .is_some()
        {
            return Err(Error::DuplicateRecord {
                path: path.to_path_buf(),
                line: line_no,
                company: company.0,
                accident_year,
                lag,
            });
        }
        records += 1;
        by_company.entry(company).or_default().push(Record {
            accident_year,
            lag,
            cell,
            premium,
        });
    }
    if records == 0 {
        return Err(Error::NoRecords {
            path: path.to_path_buf(),
        });
    }

    let order: Vec<CompanyCode> = match &options.roster {
        Some(roster) => roster.clone(),
        None => by_company.keys().copied().collect(),
    };
    let mut exclusions = Vec::new();
    let mut exclude = |company: CompanyCode, reason: String| {
        log::warn!("{line}: excluding company {company}: {reason}");
        exclusions.push(Exclusion { company, reason });
    };

    let mut built = Vec::new();
    for company in order {
        let Some(rows) = by_company.get(&company) else {
            exclude(company, "not present in data".into());
            continue;
        };
        match assemble(company, line, rows) {
            Ok(t) => built.push(t),
            Err(reason) => exclude(company, reason),
        }
    }

    // All companies in a line share one network, hence one triangle shape.
    let mut shapes: BTreeMap<(usize, i32), usize> = BTreeMap::new();
    for t in &built {
        *shapes.entry((t.size(), t.first_accident_year)).or_default() += 1;
    }
    let common = shapes
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(k, _)| *k);
    let mut triangles = Vec::with_capacity(built.len());
    for mut t in built {
        if Some((t.size(), t.first_accident_year)) != common {
            exclude(
                t.company,
                format!(
                    "triangle shape {}x{} from {} differs from the line's",
                    t.size(),
                    t.size(),
                    t.first_accident_year
                ),
            );
            continue;
        }
        t.level = triangles.len();
        triangles.push(t);
    }

    Ok(LineData {
        line: line.to_string(),
        triangles,
        exclusions,
        records,
    })
}

fn assemble(company: CompanyCode, line: &str, rows: &[Record]) -> Result<Triangle, String> {
    let first = rows.iter().map(|r| r.accident_year).min().unwrap_or(0);
    let last = rows.iter().map(|r| r.accident_year).max().unwrap_or(0);
    let size = (last - first + 1) as usize;
    if rows.iter().any(|r| r.lag as usize > size) {
        return Err(format!(
            "development lags exceed the {size} accident years present"
        ));
    }
    let mut cells = vec![vec![None; size]; size];
    let mut premium = vec![None; size];
    // Premium is read from the earliest lag reported for each accident year.
    let mut premium_lag = vec![u32::MAX; size];
    for r in rows {
        let i = (r.accident_year - first) as usize;
        cells[i][r.lag as usize - 1] = Some(r.cell);
        if r.lag < premium_lag[i] {
            premium_lag[i] = r.lag;
            premium[i] = Some(r.premium);
        }
    }
    let mut premiums = Vec::with_capacity(size);
    for (i, p) in premium.into_iter().enumerate() {
        match p {
            Some(p) if p > 0.0 && p.is_finite() => premiums.push(p),
            Some(p) => {
                return Err(format!(
                    "non-positive premium {p} in accident year {}",
                    first + i as i32
                ))
            }
            None => return Err(format!("no records for accident year {}", first + i as i32)),
        }
    }
    Triangle::new(company, line, 0, first, premiums, cells).map_err(|e| e.to_string())
}

/// Audit dump of every known cell, observed and held out.
pub fn write_triangle_dump<W: Write>(writer: W, triangles: &[Triangle]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "company",
        "line",
        "accident_year",
        "lag",
        "paid_incremental",
        "outstanding",
        "premium",
    ])?;
    for t in triangles {
        for i in 1..=t.size() {
            let mut prev_paid = Some(0.0);
            for j in 1..=t.size() {
                let Some(cell) = t.any_cell(i, j) else {
                    prev_paid = None;
                    continue;
                };
                let paid = prev_paid
                    .map(|p| (cell.cumulative_paid - p).to_string())
                    .unwrap_or_default();
                prev_paid = Some(cell.cumulative_paid);
                out.write_record([
                    t.company.to_string(),
                    t.line.clone(),
                    t.accident_year(i).to_string(),
                    j.to_string(),
                    paid,
                    cell.outstanding().to_string(),
                    t.premium(i).to_string(),
                ])?;
            }
        }
    }
    out.flush().map_err(|e| Error::io("<triangle dump>", e))?;
    Ok(())
}
