//! Comma-separated input and output of competing-risks records.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SubjectRecord};
use crate::error::{Error, Result};

/// Cells treated as missing values.
const MISSING: [&str; 4] = ["", "NA", "na", "."];

/// Maps CSV columns onto record fields.
///
/// Without a `cause` column the status column carries the cause label:
/// `0` for censored and `k` for a failure from cause `k`. With a `cause`
/// column, status is the `0/1` event indicator.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub time: String,
    pub status: String,
    pub cause: Option<String>,
    pub covariates: Vec<String>,
    /// Categorical covariates: column name to its levels, reference level
    /// first. Each non-reference level becomes a 0/1 dummy.
    pub categorical: BTreeMap<String, Vec<String>>,
}

impl ColumnMapping {
    pub fn new(time: &str, status: &str, covariates: &[&str]) -> Self {
        Self {
            time: time.into(),
            status: status.into(),
            cause: None,
            covariates: covariates.iter().map(|s| s.to_string()).collect(),
            categorical: BTreeMap::new(),
        }
    }

    /// Adds a categorical encoding; `levels[0]` is the reference.
    pub fn with_categorical(mut self, column: &str, levels: &[&str]) -> Self {
        self.categorical.insert(
            column.into(),
            levels.iter().map(|s| s.to_string()).collect(),
        );
        self
    }

    /// Names of the numeric design columns, e.g. `ccr5:WM` for a dummy.
    pub fn design_names(&self) -> Vec<String> {
        self.covariates
            .iter()
            .flat_map(|c| match self.categorical.get(c) {
                Some(levels) => levels.iter().skip(1).map(|l| format!("{c}:{l}")).collect(),
                None => vec![c.clone()],
            })
            .collect()
    }
}

/// A parsed dataset with bookkeeping from the load.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedData {
    pub dataset: Dataset,
    /// Rows dropped because a covariate was missing.
    pub dropped: usize,
    pub design_names: Vec<String>,
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

/// Reads records from any CSV source. Row numbers in errors count data rows
/// from 1, excluding the header.
pub fn read_csv<R: Read>(
    source: R,
    mapping: &ColumnMapping,
    num_causes: usize,
) -> Result<LoadedData> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let time_col = column(&headers, &mapping.time)?;
    let status_col = column(&headers, &mapping.status)?;
    let cause_col = mapping
        .cause
        .as_deref()
        .map(|c| column(&headers, c))
        .transpose()?;
    let cov_cols = mapping
        .covariates
        .iter()
        .map(|c| column(&headers, c))
        .collect::<Result<Vec<_>>>()?;
    for name in mapping.categorical.keys() {
        if !mapping.covariates.contains(name) {
            return Err(Error::InvalidConfig(format!(
                "categorical column `{name}` is not among the covariates"
            )));
        }
    }

    let mut records = Vec::new();
    let mut dropped = 0;
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let row_no = i + 1;
        let cell = |col: usize| row.get(col).unwrap_or("");
        let bad = |col: usize| Error::UnparsableValue {
            row: row_no,
            column: headers.get(col).unwrap_or("").to_string(),
            value: cell(col).to_string(),
        };
        let number = |col: usize| cell(col).parse::<f64>().map_err(|_| bad(col));
        let label = |col: usize| cell(col).parse::<usize>().map_err(|_| bad(col));

        let mut covariates = Vec::with_capacity(cov_cols.len());
        let mut missing = false;
        for (name, &col) in mapping.covariates.iter().zip(&cov_cols) {
            let value = cell(col);
            if MISSING.contains(&value) {
                missing = true;
                break;
            }
            match mapping.categorical.get(name) {
                Some(levels) => {
                    let pos = levels
                        .iter()
                        .position(|l| l == value)
                        .ok_or_else(|| bad(col))?;
                    covariates.extend((1..levels.len()).map(|l| if l == pos { 1.0 } else { 0.0 }));
                }
                None => covariates.push(number(col)?),
            }
        }
        if missing {
            dropped += 1;
            continue;
        }

        let time = number(time_col)?;
        let status = label(status_col)?;
        let cause = match cause_col {
            None => status,
            Some(col) => match status {
                0 => 0,
                1 => label(col)?,
                _ => return Err(bad(status_col)),
            },
        };
        if cause > num_causes {
            return Err(bad(cause_col.unwrap_or(status_col)));
        }
        records.push(if cause == 0 {
            SubjectRecord::censored(time, covariates)
        } else {
            SubjectRecord::event(time, cause, covariates)
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyAfterFiltering);
    }
    Ok(LoadedData {
        dataset: Dataset::new(records, num_causes)?,
        dropped,
        design_names: mapping.design_names(),
    })
}

pub fn load_csv(
    path: impl AsRef<Path>,
    mapping: &ColumnMapping,
    num_causes: usize,
) -> Result<LoadedData> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv(file, mapping, num_causes)
}

/// Writes `time,status,<names...>` with the cause label in `status`, using
/// shortest round-trip formatting for all numbers.
pub fn write_csv<W: Write>(ds: &Dataset, names: &[String], out: W) -> Result<()> {
    if names.len() != ds.covariate_dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.covariate_dim(),
            found: names.len(),
        });
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["time".to_string(), "status".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for r in ds.records() {
        let mut row = vec![r.time.to_string(), r.cause.to_string()];
        row.extend(r.covariates.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
