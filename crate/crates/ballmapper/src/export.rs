//! Graph, summary, comparison, regression and clustering output formats.
//!
//! Numbers are written with Rust's shortest round-trip `f64` formatting and
//! maps are ordered, so identical inputs always give identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ballmapper_core::ols::INTERCEPT;
use ballmapper_core::{
    BallMapperGraph, BallSummaryRow, ClusterSizeReport, Coloring, ComparisonReport, Cover, LandmarkStrategy,
    PointCloud, RegressionFit,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Json,
    Dot,
    Csv,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "json" => Ok(ExportFormat::Json),
            "dot" => Ok(ExportFormat::Dot),
            "csv" => Ok(ExportFormat::Csv),
            other => Err(format!("unknown format {other:?} (expected json, dot or csv)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexDoc {
    pub id: usize,
    pub weight: usize,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub source: usize,
    pub target: usize,
    pub weight: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsDoc {
    pub epsilon: f64,
    pub strategy: LandmarkStrategy,
    pub seed: u64,
}

/// The graph JSON document shared by the CLI and the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub vertices: Vec<VertexDoc>,
    pub edges: Vec<EdgeDoc>,
    pub params: ParamsDoc,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub colorings: BTreeMap<String, Vec<Option<f64>>>,
}

impl GraphDocument {
    pub fn new(cover: &Cover, graph: &BallMapperGraph, cloud: &PointCloud) -> Self {
        let ids = cloud.row_ids();
        GraphDocument {
            vertices: graph
                .vertices
                .iter()
                .zip(&cover.members)
                .map(|(v, m)| VertexDoc {
                    id: v.id,
                    weight: v.weight,
                    members: m.iter().map(|&p| ids[p].clone()).collect(),
                })
                .collect(),
            edges: graph
                .edges
                .iter()
                .map(|e| EdgeDoc { source: e.source, target: e.target, weight: e.weight })
                .collect(),
            params: ParamsDoc {
                epsilon: cover.params.epsilon,
                strategy: cover.params.strategy,
                seed: cover.params.seed,
            },
            colorings: BTreeMap::new(),
        }
    }

    pub fn with_colorings<'a>(mut self, colorings: impl IntoIterator<Item = &'a Coloring>) -> Self {
        for c in colorings {
            self.colorings.insert(c.variable.clone(), c.values.clone());
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph document serialises")
    }
}

/// DOT width, in inches, of a ball holding a single point.
const DOT_UNIT_WIDTH: f64 = 0.1;

/// Undirected DOT graph; node width is proportional to `sqrt(weight)`.
pub fn graph_to_dot(graph: &BallMapperGraph, coloring: Option<&Coloring>) -> String {
    let mut out = String::from("graph ballmapper {\n  node [shape=circle, fixedsize=true];\n");
    for v in &graph.vertices {
        let width = DOT_UNIT_WIDTH * (v.weight as f64).sqrt();
        let _ = write!(out, "  {} [label=\"{}\", width={:.4}, weight={}", v.id, v.id, width, v.weight);
        if let Some(value) = coloring.and_then(|c| c.values[v.id - 1]) {
            let _ = write!(out, ", value={value}");
        }
        out.push_str("];\n");
    }
    for e in &graph.edges {
        let _ = writeln!(out, "  {} -- {} [weight={}];", e.source, e.target, e.weight);
    }
    out.push_str("}\n");
    out
}

fn csv_string(build: impl FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>) -> String {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        build(&mut w).expect("writing to memory");
        w.flush().expect("writing to memory");
    }
    String::from_utf8(buf).expect("csv output is utf-8")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// `row_id,ball_id`, one line per membership; rows in several balls repeat.
pub fn membership_csv(cover: &Cover, cloud: &PointCloud) -> String {
    csv_string(|w| {
        w.write_record(["row_id", "ball_id"])?;
        for (p, balls) in cover.balls_of_points().iter().enumerate() {
            for b in balls {
                w.write_record([cloud.row_ids()[p].as_str(), &b.to_string()])?;
            }
        }
        Ok(())
    })
}

pub fn summary_csv(rows: &[BallSummaryRow], variables: &[&str]) -> String {
    csv_string(|w| {
        let mut header = vec!["ball"];
        header.extend_from_slice(variables);
        header.push("obs");
        w.write_record(&header)?;
        for r in rows {
            let mut rec = vec![r.ball.to_string()];
            rec.extend(r.means.iter().map(|m| opt(*m)));
            rec.push(r.obs.to_string());
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    variables: &'a [&'a str],
    rows: &'a [BallSummaryRow],
}

pub fn summary_json(rows: &[BallSummaryRow], variables: &[&str]) -> String {
    serde_json::to_string_pretty(&SummaryDoc { variables, rows }).expect("summary serialises")
}

/// One column per colouring, one row per ball.
pub fn colorings_csv(colorings: &[Coloring]) -> String {
    csv_string(|w| {
        let mut header = vec!["ball".to_string()];
        header.extend(colorings.iter().map(|c| c.variable.clone()));
        w.write_record(&header)?;
        let n = colorings.first().map_or(0, |c| c.values.len());
        for i in 0..n {
            let mut rec = vec![(i + 1).to_string()];
            rec.extend(colorings.iter().map(|c| opt(c.values[i])));
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

pub fn comparison_csv(report: &ComparisonReport) -> String {
    csv_string(|w| {
        w.write_record(["variable", "mean_a", "mean_b", "diff", "sigma", "dist", "flag"])?;
        for r in &report.rows {
            w.write_record([
                r.variable.clone(),
                r.mean_a.to_string(),
                r.mean_b.to_string(),
                r.diff.to_string(),
                r.sigma.to_string(),
                opt(r.dist),
                if r.flagged { "*".into() } else { String::new() },
            ])?;
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct ComparisonDoc<'a> {
    #[serde(flatten)]
    report: &'a ComparisonReport,
    flags: Vec<&'a str>,
}

/// The report plus a `flags` array naming variables with `|dist| >= 2`.
pub fn comparison_value(report: &ComparisonReport) -> serde_json::Value {
    serde_json::to_value(ComparisonDoc { report, flags: report.flags() }).expect("report serialises")
}

/// Coefficient row with significance stars, then `(|t|)` row, then `R²`.
pub fn regression_table(fit: &RegressionFit) -> String {
    csv_string(|w| {
        let mut header = vec![String::new()];
        header.extend(fit.terms.iter().map(|t| if t == INTERCEPT { "Const.".into() } else { t.clone() }));
        header.push("Obs".into());
        w.write_record(&header)?;
        let mut coef = vec![fit.response.clone()];
        coef.extend(fit.coefficients.iter().zip(fit.stars()).map(|(c, s)| format!("{c:.3}{s}")));
        coef.push(fit.n_obs().to_string());
        w.write_record(&coef)?;
        let mut t = vec![String::new()];
        t.extend(fit.t_abs.iter().map(|t| t.map_or_else(|| "-".into(), |t| format!("({t:.3})"))));
        t.push(String::new());
        w.write_record(&t)?;
        let mut r2 = vec!["R2".to_string(), format!("{:.4}", fit.r_squared)];
        r2.resize(header.len(), String::new());
        w.write_record(&r2)?;
        Ok(())
    })
}

pub fn cluster_report_csv(rows: &[ClusterSizeReport]) -> String {
    csv_string(|w| {
        w.write_record(["method", "groups", "min", "max"])?;
        for r in rows {
            w.write_record([r.method.clone(), r.groups.to_string(), r.min.to_string(), r.max.to_string()])?;
        }
        Ok(())
    })
}
