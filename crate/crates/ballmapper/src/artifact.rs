//! Persisted covers, so colourings and comparisons can be re-run without
//! rebuilding the ε-net.

use std::borrow::Cow;
use std::fs;
use std::path::{Path, PathBuf};

use ballmapper_core::{
    build_graph, normalize_minmax, winsorize, BallMapperGraph, Coloring, Column, Cover, DataTable,
    DroppedRow, PointCloud, WinsorSpec,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result, StageExt};
use crate::io::{load_table, FormatSpec};

pub const ARTIFACT_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A table after winsorisation together with its normalised point cloud.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub table: DataTable,
    pub cloud: PointCloud,
    pub dropped: Vec<DroppedRow>,
}

/// Winsorises the axis columns (when `winsor` is set) and normalises them.
pub fn prepare(table: &DataTable, axes: &[String], winsor: Option<&WinsorSpec>) -> Result<Prepared> {
    let axes: Vec<&str> = axes.iter().map(String::as_str).collect();
    let table = match winsor {
        Some(spec) => winsorize(table, &axes, spec)?,
        None => table.clone(),
    };
    let out = normalize_minmax(&table, &axes)?;
    Ok(Prepared { table, cloud: out.cloud, dropped: out.dropped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRef {
    pub path: PathBuf,
    pub sha256: String,
    pub format: FormatSpec,
}

/// On-disk cover: where the data came from, how it was prepared, and the
/// landmarks and members that were built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverArtifact {
    pub version: u32,
    pub source: SourceRef,
    #[serde(default)]
    pub subset: Option<String>,
    pub axes: Vec<String>,
    pub winsor: Option<WinsorSpec>,
    /// Row id of each cloud point.
    pub row_ids: Vec<String>,
    pub cover: Cover,
}

/// A reopened artifact with its data prepared exactly as at build time.
#[derive(Debug, Clone)]
pub struct Session {
    pub artifact: CoverArtifact,
    pub prepared: Prepared,
    pub graph: BallMapperGraph,
}

impl CoverArtifact {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("artifact serialises")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let artifact: CoverArtifact =
            serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })?;
        if artifact.version != ARTIFACT_VERSION {
            return Err(Error::Config(format!(
                "{}: unsupported artifact version {}",
                path.display(),
                artifact.version
            )));
        }
        Ok(artifact)
    }

    /// Reloads the source table, re-runs preprocessing, and checks the result
    /// lines up with the stored cover.
    pub fn open(self) -> Result<Session> {
        let path = &self.source.path;
        let bytes = fs::read(path).map_err(|e| Error::io(path, e)).stage("load")?;
        if sha256_hex(&bytes) != self.source.sha256 {
            return Err(Error::Config(format!("{} changed since the cover was built", path.display())));
        }
        let mut table = load_table(bytes.as_slice(), &self.source.format).stage("load")?;
        if let Some(label) = &self.subset {
            table = table.filter_group(label).stage("load")?;
        }
        let prepared = prepare(&table, &self.axes, self.winsor.as_ref()).stage("preprocess")?;
        if prepared.cloud.row_ids() != self.row_ids.as_slice() || self.cover.n_points != prepared.cloud.len()
        {
            return Err(Error::Config("stored cover does not match the prepared data".into()));
        }
        let graph = build_graph(&self.cover);
        Ok(Session { artifact: self, prepared, graph })
    }
}

/// A numeric column, or `group=label` for the 0/1 indicator of a group label.
pub fn resolve_column<'a>(table: &'a DataTable, name: &str) -> Result<Cow<'a, Column>> {
    if let Ok(c) = table.column(name) {
        return Ok(Cow::Borrowed(c));
    }
    if let Some(group) = table.group() {
        if let Some(label) = name.strip_prefix(&format!("{}=", group.name)) {
            return Ok(Cow::Owned(table.group_indicator(label)?));
        }
    }
    Err(ballmapper_core::Error::ColumnNotFound(name.into()).into())
}

/// Colours `cover` by a column or group indicator of `table`.
pub fn color_by(cover: &Cover, cloud: &PointCloud, table: &DataTable, name: &str) -> Result<Coloring> {
    let column = resolve_column(table, name)?;
    let values: Vec<Option<f64>> = cloud.source_rows().iter().map(|&r| column.values[r]).collect();
    Ok(Coloring::from_point_values(name, cover, &values)?)
}

/// `table` with a `group=label` indicator column appended for each name in
/// `names` that is not already a numeric column.
pub fn with_indicators<'a>(table: &'a DataTable, names: &[&str]) -> Result<Cow<'a, DataTable>> {
    let mut out = Cow::Borrowed(table);
    for name in names {
        if out.column(name).is_ok() {
            continue;
        }
        let column = resolve_column(table, name)?.into_owned();
        out = Cow::Owned(out.into_owned().with_column(column)?);
    }
    Ok(out)
}
