//! The `build` pipeline: load, winsorise, normalise, cover, graph, colour,
//! summarise and export, with a manifest of every parameter and output hash.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use ballmapper_core::{
    build_graph, BallSummaryRow, Coloring, Cover, CoverParams, LandmarkStrategy, WinsorSpec,
};
use serde::{Deserialize, Serialize};

use crate::artifact::{
    color_by, prepare, resolve_column, sha256_hex, CoverArtifact, SourceRef, ARTIFACT_VERSION,
};
use crate::error::{Error, Result, StageExt};
use crate::export::{self, ExportFormat, GraphDocument};
use crate::io::{load_table, write_dropped_report, FormatSpec};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const COVER_FILE: &str = "cover.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: PathBuf,
    pub format: FormatSpec,
    /// Group label to restrict the rows to; normalisation bounds then come
    /// from that group alone.
    #[serde(default)]
    pub subset: Option<String>,
    pub axes: Vec<String>,
    /// Extra colouring variables; axes are always coloured too.
    pub colors: Vec<String>,
    pub winsor: Option<WinsorSpec>,
    pub epsilon: f64,
    pub strategy: LandmarkStrategy,
    pub seed: u64,
    pub formats: BTreeSet<ExportFormat>,
    /// Not recorded in the manifest, so runs into different directories
    /// produce identical manifests.
    #[serde(skip)]
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, axes: &[&str], epsilon: f64, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            format: FormatSpec::default(),
            subset: None,
            axes: axes.iter().map(|a| a.to_string()).collect(),
            colors: Vec::new(),
            winsor: Some(WinsorSpec::default()),
            epsilon,
            strategy: LandmarkStrategy::First,
            seed: 0,
            formats: [ExportFormat::Json, ExportFormat::Dot, ExportFormat::Csv].into(),
            out_dir: out_dir.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::Config("at least one axis column is required".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if let Some(w) = &self.winsor {
            w.validate()?;
        }
        if self.out_dir.as_os_str().is_empty() {
            return Err(Error::Config("output directory is required".into()));
        }
        Ok(())
    }

    fn params(&self) -> CoverParams {
        CoverParams { epsilon: self.epsilon, strategy: self.strategy, seed: self.seed }
    }

    /// Axes followed by colouring columns, without repeats.
    pub fn variables(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.axes.iter().chain(&self.colors).map(String::as_str).filter(|v| seen.insert(*v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub config: RunConfig,
    pub input_sha256: String,
    pub rows: usize,
    pub points: usize,
    pub dropped_rows: usize,
    pub balls: usize,
    pub edges: usize,
    pub outputs: Vec<OutputEntry>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises")
    }
}

/// Runs the pipeline and writes every output into `config.out_dir`.
///
/// All outputs are rendered in memory first; nothing is written unless every
/// stage succeeds, and files already written are removed if a later write
/// fails.
pub fn run_pipeline(config: &RunConfig) -> Result<Manifest> {
    let (files, mut manifest) = render(config)?;
    write_outputs(&config.out_dir, &files).stage("export")?;
    manifest.outputs = files
        .iter()
        .map(|(name, body)| OutputEntry {
            file: name.clone(),
            bytes: body.len(),
            sha256: sha256_hex(body.as_bytes()),
        })
        .collect();
    let manifest_path = config.out_dir.join(MANIFEST_FILE);
    if let Err(e) = fs::write(&manifest_path, manifest.to_json()) {
        remove_outputs(&config.out_dir, files.iter().map(|(n, _)| n.as_str()));
        return Err(Error::io(manifest_path, e).in_stage("export"));
    }
    Ok(manifest)
}

/// Everything `run_pipeline` would write, as `(file name, contents)`.
pub fn render(config: &RunConfig) -> Result<(Vec<(String, String)>, Manifest)> {
    config.validate().stage("config")?;
    let bytes = fs::read(&config.input).map_err(|e| Error::io(&config.input, e)).stage("load")?;
    let input_sha256 = sha256_hex(&bytes);
    let table = load_table(bytes.as_slice(), &config.format).stage("load")?;
    let table = match &config.subset {
        Some(label) => table.filter_group(label).stage("config")?,
        None => table,
    };
    for v in config.variables() {
        resolve_column(&table, v).stage("config")?;
    }
    let prepared = prepare(&table, &config.axes, config.winsor.as_ref()).stage("preprocess")?;
    let cloud = &prepared.cloud;
    let cover = Cover::build(cloud, config.params()).stage("cover")?;
    let graph = build_graph(&cover);

    let variables = config.variables();
    let colorings = variables
        .iter()
        .map(|v| color_by(&cover, cloud, &prepared.table, v))
        .collect::<Result<Vec<_>>>()
        .stage("color")?;
    let summary = summary_from_colorings(&cover, &colorings);

    let source_path =
        fs::canonicalize(&config.input).map_err(|e| Error::io(&config.input, e)).stage("load")?;
    let artifact = CoverArtifact {
        version: ARTIFACT_VERSION,
        source: SourceRef { path: source_path, sha256: input_sha256.clone(), format: config.format.clone() },
        subset: config.subset.clone(),
        axes: config.axes.clone(),
        winsor: config.winsor,
        row_ids: cloud.row_ids().to_vec(),
        cover: cover.clone(),
    };

    let mut files = vec![(COVER_FILE.to_string(), artifact.to_json())];
    for format in &config.formats {
        match format {
            ExportFormat::Json => {
                let doc = GraphDocument::new(&cover, &graph, cloud).with_colorings(&colorings);
                files.push(("graph.json".into(), doc.to_json()));
                files.push(("summary.json".into(), export::summary_json(&summary, &variables)));
            }
            ExportFormat::Dot => {
                let shade = config.colors.first().and_then(|c| colorings.iter().find(|k| &k.variable == c));
                files.push(("graph.dot".into(), export::graph_to_dot(&graph, shade)));
            }
            ExportFormat::Csv => {
                files.push(("membership.csv".into(), export::membership_csv(&cover, cloud)));
                files.push(("summary.csv".into(), export::summary_csv(&summary, &variables)));
                files.push(("colorings.csv".into(), export::colorings_csv(&colorings)));
                let mut report = Vec::new();
                write_dropped_report(&prepared.dropped, &mut report).expect("writing to memory");
                files.push(("dropped_rows.csv".into(), String::from_utf8(report).expect("utf-8")));
            }
        }
    }

    let manifest = Manifest {
        tool: format!("ballmapper {}", env!("CARGO_PKG_VERSION")),
        // Matches what is written: the output directory is not recorded.
        config: RunConfig { out_dir: PathBuf::new(), ..config.clone() },
        input_sha256,
        rows: table.n_rows(),
        points: cloud.len(),
        dropped_rows: prepared.dropped.len(),
        balls: cover.n_balls(),
        edges: graph.edges.len(),
        outputs: Vec::new(),
    };
    Ok((files, manifest))
}

/// Per-ball rows assembled from already computed colourings.
pub fn summary_from_colorings(cover: &Cover, colorings: &[Coloring]) -> Vec<BallSummaryRow> {
    cover
        .members
        .iter()
        .enumerate()
        .map(|(i, m)| BallSummaryRow {
            ball: i + 1,
            means: colorings.iter().map(|c| c.values[i]).collect(),
            obs: m.len(),
        })
        .collect()
}

fn write_outputs(dir: &Path, files: &[(String, String)]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, (name, body)) in files.iter().enumerate() {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, body) {
            remove_outputs(dir, files[..=i].iter().map(|(n, _)| n.as_str()));
            return Err(Error::io(path, e));
        }
    }
    Ok(())
}

fn remove_outputs<'a>(dir: &Path, names: impl Iterator<Item = &'a str>) {
    for name in names {
        let _ = fs::remove_file(dir.join(name));
    }
}
