//! Tabular input, winsorisation and min-max normalisation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::cloud::{AxisScaling, PointCloud};
use crate::error::{Error, Result};
use crate::stats;

/// A named numeric column; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

impl Column {
    pub fn new(name: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        Column { name: name.into(), values }
    }

    pub fn from_values(name: impl Into<String>, values: &[f64]) -> Self {
        Column::new(name, values.iter().copied().map(Some).collect())
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

/// Opaque per-row labels, e.g. the month an observation belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupColumn {
    pub name: String,
    pub labels: Vec<String>,
}

/// Labelled rows by named numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    row_ids: Vec<String>,
    columns: Vec<Column>,
    group: Option<GroupColumn>,
}

impl DataTable {
    pub fn new(row_ids: Vec<String>, columns: Vec<Column>, group: Option<GroupColumn>) -> Result<Self> {
        let n = row_ids.len();
        let mut seen = BTreeSet::new();
        let group_name = group.as_ref().map(|g| (&g.name, g.labels.len()));
        for (name, len) in columns.iter().map(|c| (&c.name, c.values.len())).chain(group_name) {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
            if len != n {
                return Err(Error::ColumnLength { name: name.clone(), expected: n, actual: len });
            }
        }
        for c in &columns {
            if let Some(row) = c.values.iter().position(|v| v.is_some_and(|x| !x.is_finite())) {
                return Err(Error::InvalidParameter(format!(
                    "column {} row {} is not finite",
                    c.name, row_ids[row]
                )));
            }
        }
        Ok(DataTable { row_ids, columns, group })
    }

    /// Rows numbered `1..=n` as ids.
    pub fn with_row_numbers(columns: Vec<Column>, group: Option<GroupColumn>) -> Result<Self> {
        let n =
            columns.first().map(|c| c.values.len()).or(group.as_ref().map(|g| g.labels.len())).unwrap_or(0);
        DataTable::new((1..=n).map(|i| i.to_string()).collect(), columns, group)
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn group(&self) -> Option<&GroupColumn> {
        self.group.as_ref()
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns.iter().find(|c| c.name == name).ok_or_else(|| Error::ColumnNotFound(name.into()))
    }

    fn column_index(&self, name: &str) -> Result<usize> {
        self.columns.iter().position(|c| c.name == name).ok_or_else(|| Error::ColumnNotFound(name.into()))
    }

    /// True when row `row` has a value in every named column.
    pub fn is_complete(&self, row: usize, columns: &[&Column]) -> bool {
        columns.iter().all(|c| c.values[row].is_some())
    }

    /// Appends a column; fails on a duplicate name or length mismatch.
    pub fn with_column(mut self, column: Column) -> Result<Self> {
        self.columns.push(column);
        DataTable::new(self.row_ids, self.columns, self.group)
    }

    /// 0/1 indicator of `label` in the group column, named `group=label`.
    pub fn group_indicator(&self, label: &str) -> Result<Column> {
        let group = self.group.as_ref().ok_or(Error::MissingGroupColumn)?;
        Ok(Column::new(
            format!("{}={}", group.name, label),
            group.labels.iter().map(|l| Some(if l == label { 1.0 } else { 0.0 })).collect(),
        ))
    }

    /// Distinct group labels in sorted order.
    pub fn group_labels(&self) -> Vec<&str> {
        let set: BTreeSet<&str> =
            self.group.iter().flat_map(|g| g.labels.iter().map(String::as_str)).collect();
        set.into_iter().collect()
    }

    /// Rows whose group label is `label`, e.g. a single month of a pooled panel.
    pub fn filter_group(&self, label: &str) -> Result<DataTable> {
        let group = self.group.as_ref().ok_or(Error::MissingGroupColumn)?;
        let keep: Vec<bool> = group.labels.iter().map(|l| l == label).collect();
        if !keep.contains(&true) {
            return Err(Error::InvalidParameter(format!("no rows with {} = {label}", group.name)));
        }
        Ok(self.retain_rows(&keep))
    }

    /// Keeps only rows whose index satisfies `keep`, preserving order.
    fn retain_rows(&self, keep: &[bool]) -> DataTable {
        let pick = |v: &[Option<f64>]| -> Vec<Option<f64>> {
            v.iter().zip(keep).filter(|(_, k)| **k).map(|(x, _)| *x).collect()
        };
        DataTable {
            row_ids: self.row_ids.iter().zip(keep).filter(|(_, k)| **k).map(|(r, _)| r.clone()).collect(),
            columns: self.columns.iter().map(|c| Column::new(c.name.clone(), pick(&c.values))).collect(),
            group: self.group.as_ref().map(|g| GroupColumn {
                name: g.name.clone(),
                labels: g.labels.iter().zip(keep).filter(|(_, k)| **k).map(|(l, _)| l.clone()).collect(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum WinsorMode {
    /// Values beyond a bound are set to the bound.
    #[default]
    Clamp,
    /// Rows with a value beyond a bound in any selected column are removed.
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum QuantileRule {
    /// Value at 1-based rank `ceil(q * m)` of the sorted values.
    #[default]
    NearestRank,
    /// Linear interpolation between order statistics.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WinsorSpec {
    /// `0` disables the lower bound.
    pub lower_q: f64,
    /// `1` disables the upper bound.
    pub upper_q: f64,
    pub mode: WinsorMode,
    pub per_group: bool,
    pub rule: QuantileRule,
}

impl Default for WinsorSpec {
    fn default() -> Self {
        WinsorSpec {
            lower_q: 0.005,
            upper_q: 0.995,
            mode: WinsorMode::Clamp,
            per_group: false,
            rule: QuantileRule::NearestRank,
        }
    }
}

impl WinsorSpec {
    pub fn new(lower_q: f64, upper_q: f64) -> Result<Self> {
        let spec = WinsorSpec { lower_q, upper_q, ..Default::default() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.lower_q) {
            return Err(Error::InvalidParameter(format!("lower quantile {} outside [0, 0.5)", self.lower_q)));
        }
        if !(self.upper_q > 0.5 && self.upper_q <= 1.0) {
            return Err(Error::InvalidParameter(format!("upper quantile {} outside (0.5, 1]", self.upper_q)));
        }
        Ok(())
    }

    fn quantile(&self, sorted: &[f64], q: f64) -> f64 {
        match self.rule {
            QuantileRule::NearestRank => stats::quantile_nearest_rank(sorted, q),
            QuantileRule::Linear => stats::quantile_linear(sorted, q),
        }
    }

    /// `(lower, upper)` bounds for one set of present values.
    fn bounds(&self, values: &[f64]) -> (Option<f64>, Option<f64>) {
        let sorted = stats::sorted_copy(values.iter().copied());
        let lower = (self.lower_q > 0.0).then(|| self.quantile(&sorted, self.lower_q));
        let upper = (self.upper_q < 1.0).then(|| self.quantile(&sorted, self.upper_q));
        (lower, upper)
    }
}

/// Winsorises the named columns.
///
/// Bounds are computed per column (and per group label when
/// `spec.per_group`) on the non-missing values of the input table. Missing
/// cells stay missing.
pub fn winsorize(table: &DataTable, columns: &[&str], spec: &WinsorSpec) -> Result<DataTable> {
    spec.validate()?;
    let indices = columns.iter().map(|c| table.column_index(c)).collect::<Result<Vec<_>>>()?;

    // Row partition: one block for the whole table or one per label.
    let mut blocks: BTreeMap<Option<&str>, Vec<usize>> = BTreeMap::new();
    if spec.per_group {
        let group = table.group.as_ref().ok_or(Error::MissingGroupColumn)?;
        for (row, label) in group.labels.iter().enumerate() {
            blocks.entry(Some(label.as_str())).or_default().push(row);
        }
    } else {
        blocks.insert(None, (0..table.n_rows()).collect());
    }

    let mut out = table.clone();
    let mut keep = alloc::vec![true; table.n_rows()];
    for &ci in &indices {
        let column = &table.columns[ci];
        for (label, rows) in &blocks {
            let present: Vec<f64> = rows.iter().filter_map(|&r| column.values[r]).collect();
            if present.len() < 2 {
                return Err(Error::InsufficientData {
                    column: column.name.clone(),
                    group: label.map(ToString::to_string),
                });
            }
            let (lower, upper) = spec.bounds(&present);
            for &r in rows {
                let Some(x) = column.values[r] else { continue };
                let below = lower.is_some_and(|lo| x < lo);
                let above = upper.is_some_and(|hi| x > hi);
                match spec.mode {
                    WinsorMode::Clamp => {
                        if below {
                            out.columns[ci].values[r] = lower;
                        } else if above {
                            out.columns[ci].values[r] = upper;
                        }
                    }
                    WinsorMode::Drop => {
                        if below || above {
                            keep[r] = false;
                        }
                    }
                }
            }
        }
    }

    Ok(match spec.mode {
        WinsorMode::Clamp => out,
        WinsorMode::Drop => table.retain_rows(&keep),
    })
}

/// A table row left out of the point cloud.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DroppedRow {
    pub row_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizeOutput {
    pub cloud: PointCloud,
    /// Rows excluded because an axis value was missing, in table order.
    pub dropped: Vec<DroppedRow>,
}

/// Maps each axis column onto `[0, 1]` with `(x - min) / (max - min)`.
///
/// Rows missing any axis value are excluded and reported. A constant axis maps
/// to zeros and is flagged `degenerate` in the stored scaling.
pub fn normalize_minmax(table: &DataTable, axes: &[&str]) -> Result<NormalizeOutput> {
    if axes.is_empty() {
        return Err(Error::InvalidParameter("at least one axis column required".into()));
    }
    let cols = axes.iter().map(|a| table.column(a)).collect::<Result<Vec<_>>>()?;
    let mut seen = BTreeSet::new();
    for a in axes {
        if !seen.insert(*a) {
            return Err(Error::DuplicateColumn((*a).into()));
        }
    }

    let mut retained = Vec::new();
    let mut dropped = Vec::new();
    for row in 0..table.n_rows() {
        if table.is_complete(row, &cols) {
            retained.push(row);
        } else {
            let missing: Vec<&str> =
                cols.iter().filter(|c| c.values[row].is_none()).map(|c| c.name.as_str()).collect();
            dropped.push(DroppedRow {
                row_id: table.row_ids[row].clone(),
                reason: format!("missing {}", missing.join("|")),
            });
        }
    }
    if retained.is_empty() {
        return Err(Error::NoRetainedRows);
    }

    let scaling: Vec<AxisScaling> = cols
        .iter()
        .map(|c| {
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            for &r in &retained {
                let x = c.values[r].expect("retained rows are complete");
                min = min.min(x);
                max = max.max(x);
            }
            AxisScaling { min, max, degenerate: min == max }
        })
        .collect();

    let dim = axes.len();
    let mut coords = Vec::with_capacity(retained.len() * dim);
    for &r in &retained {
        for (c, s) in cols.iter().zip(&scaling) {
            let u = s.normalize(c.values[r].expect("retained rows are complete"));
            // (x - min) / (max - min) can round a hair outside [0, 1].
            coords.push(u.clamp(0.0, 1.0));
        }
    }
    let row_ids = retained.iter().map(|&r| table.row_ids[r].clone()).collect();
    let cloud = PointCloud::from_parts(
        dim,
        coords,
        axes.iter().map(|a| String::from(*a)).collect(),
        scaling,
        retained,
        row_ids,
    );
    Ok(NormalizeOutput { cloud, dropped })
}
