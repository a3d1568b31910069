//! CSV ingestion and output.
//!
//! The first CSV row names the variables. A JSON sidecar schema assigns kinds:
//!
//! ```json
//! { "kinds": { "age": "continuous", "label": "discrete" }, "missing": "NA" }
//! ```
//!
//! Columns not listed are continuous. Empty cells, and cells equal to the
//! optional `missing` sentinel, are missing. All values must be numeric.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::empirical::Dataset;
use crate::error::{Error, Result};
use crate::model::VariableKind;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default)]
    pub kinds: BTreeMap<String, VariableKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub missing: Option<String>,
}

impl Schema {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    fn is_missing(&self, cell: &str) -> bool {
        let t = cell.trim();
        t.is_empty() || self.missing.as_deref() == Some(t)
    }
}

/// Reads a headed numeric CSV into a dataset.
pub fn read_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv_from(file, schema)
}

pub fn read_csv_from(reader: impl std::io::Read, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let names: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    for key in schema.kinds.keys() {
        if !names.contains(key) {
            return Err(Error::Schema(format!("schema names unknown column {key:?}")));
        }
    }
    let kinds: Vec<VariableKind> = names
        .iter()
        .map(|n| schema.kinds.get(n).copied().unwrap_or_default())
        .collect();
    let mut rows = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != names.len() {
            return Err(Error::Schema(format!(
                "line {} has {} fields, header has {}",
                r + 2,
                rec.len(),
                names.len()
            )));
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                if schema.is_missing(cell) {
                    Ok(f64::NAN)
                } else {
                    cell.trim().parse::<f64>().map_err(|_| {
                        Error::Schema(format!("line {}, column {:?}: {cell:?} is not numeric", r + 2, names[c]))
                    })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InsufficientData("CSV has no data rows".into()));
    }
    Dataset::new(rows, kinds)?.with_names(names)
}

/// Writes a headed CSV; `NaN` cells are written empty.
pub fn write_csv(
    writer: impl std::io::Write,
    header: &[String],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| if v.is_nan() { String::new() } else { format_f64(*v) }))?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest representation that parses back to the same double.
pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}
