//! Delimited-text ingestion and the retained-rows report.

use std::collections::HashSet;
use std::io::{Read, Write};

use ballmapper_core::{Column, DataTable, DroppedRow, GroupColumn};
use serde::{Deserialize, Serialize};

/// How to read a delimited table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatSpec {
    pub delimiter: u8,
    /// Column holding row ids; when absent (or not in the header) rows are
    /// numbered from 1.
    pub id_column: Option<String>,
    /// Text column of group labels, e.g. the month.
    pub group_column: Option<String>,
}

impl Default for FormatSpec {
    fn default() -> Self {
        FormatSpec { delimiter: b',', id_column: Some("id".into()), group_column: None }
    }
}

impl FormatSpec {
    pub fn tab() -> Self {
        FormatSpec { delimiter: b'\t', ..Default::default() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("no header")]
    NoHeader,
    #[error("malformed header on line {line}: {reason}")]
    MalformedHeader { line: u64, reason: String },
    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("row {row} (line {line}), column {column}: not a number: {value:?}")]
    NonNumeric { row: String, line: u64, column: String, value: String },
    #[error("duplicate column name: {0}")]
    DuplicateColumn(String),
    #[error("duplicate row id: {0}")]
    DuplicateRowId(String),
    #[error("group column {0} not in header")]
    MissingGroupColumn(String),
    #[error("no numeric columns")]
    NoNumericColumns,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] ballmapper_core::Error),
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c == "NA"
}

/// Reads a delimited table with one header row.
///
/// Every column other than the id and group columns must be numeric; empty
/// cells and `NA` are recorded as missing.
pub fn load_table<R: Read>(source: R, format: &FormatSpec) -> Result<DataTable, LoadError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .has_headers(false)
        .flexible(false)
        .from_reader(source);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(LoadError::NoHeader),
        Some(r) => r.map_err(|e| csv_error(e, true))?,
    };
    if header.len() == 1 && header[0].trim().is_empty() {
        return Err(LoadError::NoHeader);
    }
    let names: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
    let mut seen = HashSet::new();
    for name in &names {
        if name.is_empty() {
            return Err(LoadError::MalformedHeader { line: 1, reason: "empty column name".into() });
        }
        if !seen.insert(name.as_str()) {
            return Err(LoadError::DuplicateColumn(name.clone()));
        }
    }

    let id_idx = format.id_column.as_ref().and_then(|id| names.iter().position(|n| n == id));
    let group_idx = match &format.group_column {
        Some(g) => {
            Some(names.iter().position(|n| n == g).ok_or_else(|| LoadError::MissingGroupColumn(g.clone()))?)
        }
        None => None,
    };
    let numeric: Vec<usize> =
        (0..names.len()).filter(|i| Some(*i) != id_idx && Some(*i) != group_idx).collect();
    if numeric.is_empty() {
        return Err(LoadError::NoNumericColumns);
    }

    let mut row_ids = Vec::new();
    let mut labels = Vec::new();
    let mut values: Vec<Vec<Option<f64>>> = vec![Vec::new(); numeric.len()];
    let mut ids_seen = HashSet::new();
    for (i, record) in records.enumerate() {
        let record = record.map_err(|e| csv_error(e, false))?;
        let line = record.position().map_or(i as u64 + 2, |p| p.line());
        // A lone blank line (e.g. trailing newline) carries no data.
        if record.len() == 1 && record[0].trim().is_empty() && names.len() > 1 {
            continue;
        }
        let row_id = match id_idx {
            Some(k) => record[k].trim().to_string(),
            None => (row_ids.len() + 1).to_string(),
        };
        if !ids_seen.insert(row_id.clone()) {
            return Err(LoadError::DuplicateRowId(row_id));
        }
        for (slot, &k) in numeric.iter().enumerate() {
            let cell = &record[k];
            let v = if is_missing(cell) {
                None
            } else {
                let parsed = cell.trim().parse::<f64>().ok().filter(|v| v.is_finite());
                Some(parsed.ok_or_else(|| LoadError::NonNumeric {
                    row: row_id.clone(),
                    line,
                    column: names[k].clone(),
                    value: cell.to_string(),
                })?)
            };
            values[slot].push(v);
        }
        if let Some(k) = group_idx {
            labels.push(record[k].trim().to_string());
        }
        row_ids.push(row_id);
    }

    let columns = numeric.iter().zip(values).map(|(&k, v)| Column::new(names[k].clone(), v)).collect();
    let group = group_idx.map(|k| GroupColumn { name: names[k].clone(), labels });
    Ok(DataTable::new(row_ids, columns, group)?)
}

fn csv_error(e: csv::Error, header: bool) -> LoadError {
    let line = e.position().map_or(1, |p| p.line());
    let reason = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        _ => e.to_string(),
    };
    if let csv::ErrorKind::Io(_) = e.kind() {
        return LoadError::Io(std::io::Error::other(reason));
    }
    if header {
        LoadError::MalformedHeader { line, reason }
    } else {
        LoadError::MalformedRow { line, reason }
    }
}

/// Writes a table back out as delimited text (ids first, then group, then
/// numeric columns).
pub fn write_table<W: Write>(table: &DataTable, format: &FormatSpec, out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(format.delimiter).from_writer(out);
    let id_name = format.id_column.clone().unwrap_or_else(|| "id".into());
    let mut header = vec![id_name];
    if let Some(g) = table.group() {
        header.push(g.name.clone());
    }
    header.extend(table.column_names().map(String::from));
    w.write_record(&header)?;
    for r in 0..table.n_rows() {
        let mut rec = vec![table.row_ids()[r].clone()];
        if let Some(g) = table.group() {
            rec.push(g.labels[r].clone());
        }
        rec.extend(table.columns().iter().map(|c| c.values[r].map_or(String::new(), |v| v.to_string())));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `row_id,reason` for each row left out of the point cloud.
pub fn write_dropped_report<W: Write>(dropped: &[DroppedRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row_id", "reason"])?;
    for d in dropped {
        w.write_record([&d.row_id, &d.reason])?;
    }
    w.flush()?;
    Ok(())
}
