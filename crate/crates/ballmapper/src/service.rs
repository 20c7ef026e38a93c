//! JSON-over-HTTP front end for the explorer.
//!
//! Datasets and graphs are immutable once stored. The maps holding them are
//! locked only to allocate an id and insert or fetch an `Arc`, so reads never
//! wait on a build. Response bodies for stored objects are rendered once and
//! served verbatim, which makes repeated GETs byte-identical.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ballmapper_core::{
    build_graph, compare_balls, ols_fit_table, stats, BallMapperGraph, Coloring, Cover, CoverParams,
    DataTable, LandmarkStrategy, RegressionFit, WinsorSpec,
};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::artifact::{
    color_by, prepare, sha256_hex, with_indicators, CoverArtifact, Prepared, SourceRef, ARTIFACT_VERSION,
};
use crate::error::Error;
use crate::export::{self, GraphDocument};
use crate::io::{load_table, write_table, FormatSpec, LoadError};
use crate::pipeline::summary_from_colorings;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Largest table, in rows, that a build request may cover.
    pub max_build_points: usize,
    /// Cap on the approximate bytes held by stored datasets and graphs.
    pub max_store_bytes: usize,
    /// When set, datasets and covers are also written here in the CLI's
    /// on-disk formats.
    pub artifact_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { max_build_points: 50_000, max_store_bytes: 512 << 20, artifact_dir: None }
    }
}

struct Dataset {
    id: u64,
    table: DataTable,
    body: String,
    /// Write-through copy of the table, when enabled.
    file: Option<(PathBuf, String)>,
}

struct Graph {
    dataset: Arc<Dataset>,
    axes: Vec<String>,
    prepared: Prepared,
    cover: Cover,
    body: String,
}

pub struct AppState {
    config: ServiceConfig,
    next_id: AtomicU64,
    stored_bytes: AtomicUsize,
    datasets: RwLock<HashMap<u64, Arc<Dataset>>>,
    graphs: RwLock<HashMap<u64, Arc<Graph>>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        Arc::new(AppState {
            config,
            next_id: AtomicU64::new(1),
            stored_bytes: AtomicUsize::new(0),
            datasets: RwLock::new(HashMap::new()),
            graphs: RwLock::new(HashMap::new()),
        })
    }

    pub fn stored_bytes(&self) -> usize {
        self.stored_bytes.load(Ordering::SeqCst)
    }

    fn allocate_id(&self) -> u64 {
        self.next_id.fetch_add(1, Ordering::SeqCst)
    }

    fn reserve(&self, bytes: usize) -> Result<(), ApiError> {
        let cap = self.config.max_store_bytes;
        self.stored_bytes
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |used| {
                used.checked_add(bytes).filter(|&total| total <= cap)
            })
            .map(|_| ())
            .map_err(|used| {
                ApiError::new(StatusCode::INSUFFICIENT_STORAGE, "store_full", "artifact store is full")
                    .detail(json!({ "used": used, "requested": bytes, "cap": cap }))
            })
    }

    fn dataset(&self, id: &str) -> Result<Arc<Dataset>, ApiError> {
        let found = id.parse().ok().and_then(|id: u64| self.datasets.read().unwrap().get(&id).cloned());
        found.ok_or_else(|| ApiError::not_found("dataset", id))
    }

    fn graph(&self, id: &str) -> Result<Arc<Graph>, ApiError> {
        let found = id.parse().ok().and_then(|id: u64| self.graphs.read().unwrap().get(&id).cloned());
        found.ok_or_else(|| ApiError::not_found("graph", id))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    detail: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into(), detail: Value::Null }
    }

    fn detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }

    fn not_found(kind: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no {kind} with id {id}"))
    }

    fn invalid(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", message)
    }

    fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "code": self.code, "message": self.message, "detail": self.detail });
        (self.status, Json(body)).into_response()
    }
}

impl From<ballmapper_core::Error> for ApiError {
    fn from(e: ballmapper_core::Error) -> Self {
        use ballmapper_core::Error as E;
        let code = match &e {
            E::ColumnNotFound(_) => "unknown_variable",
            E::UnknownBall(_) => "unknown_ball",
            E::RankDeficient(_) => "rank_deficient",
            _ if e.is_validation() => "invalid_request",
            _ => "insufficient_data",
        };
        let detail = match &e {
            E::ColumnNotFound(c) => json!({ "column": c }),
            E::UnknownBall(b) => json!({ "ball": b }),
            E::RankDeficient(cols) => json!({ "columns": cols }),
            _ => Value::Null,
        };
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, e.to_string()).detail(detail)
    }
}

impl From<LoadError> for ApiError {
    fn from(e: LoadError) -> Self {
        let detail = match &e {
            LoadError::NonNumeric { row, line, column, value } => {
                json!({ "row": row, "line": line, "column": column, "value": value })
            }
            LoadError::MalformedHeader { line, reason } | LoadError::MalformedRow { line, reason } => {
                json!({ "line": line, "reason": reason })
            }
            LoadError::DuplicateColumn(c) | LoadError::MissingGroupColumn(c) => json!({ "column": c }),
            LoadError::DuplicateRowId(r) => json!({ "row": r }),
            _ => Value::Null,
        };
        ApiError::new(StatusCode::BAD_REQUEST, "parse_error", e.to_string()).detail(detail)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::Stage { source, .. } => (*source).into(),
            Error::Core(e) => e.into(),
            Error::Load(e) => e.into(),
            Error::Config(m) => ApiError::invalid(m),
            e @ (Error::Io { .. } | Error::Json { .. }) => ApiError::internal(e.to_string()),
        }
    }
}

fn from_json_rejection(r: JsonRejection) -> ApiError {
    let status = r.status();
    let code = if status == StatusCode::UNPROCESSABLE_ENTITY { "invalid_request" } else { "bad_request" };
    ApiError::new(status, code, r.body_text())
}

fn from_query_rejection(r: QueryRejection) -> ApiError {
    ApiError::new(StatusCode::BAD_REQUEST, "bad_request", r.body_text())
}

fn json_response(status: StatusCode, body: &str) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body.to_owned()).into_response()
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/datasets", post(post_dataset))
        .route("/datasets/{id}", get(get_dataset))
        .route("/datasets/{id}/graphs", post(post_graph))
        .route("/datasets/{id}/regress", post(post_regress))
        .route("/graphs/{id}", get(get_graph))
        .route("/graphs/{id}/colorings/{variable}", get(get_coloring))
        .route("/graphs/{id}/compare", post(post_compare))
        .route("/graphs/{id}/summary", get(get_summary))
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

#[derive(Debug, Default, Deserialize)]
struct UploadQuery {
    /// `comma` (default), `tab`, or a single character.
    delimiter: Option<String>,
    id: Option<String>,
    group: Option<String>,
}

impl UploadQuery {
    fn format(&self) -> Result<FormatSpec, ApiError> {
        let delimiter = match self.delimiter.as_deref() {
            None | Some("comma") => b',',
            Some("tab") => b'\t',
            Some(d) if d.len() == 1 => d.as_bytes()[0],
            Some(d) => return Err(ApiError::invalid(format!("unsupported delimiter {d:?}"))),
        };
        Ok(FormatSpec {
            delimiter,
            id_column: Some(self.id.clone().unwrap_or_else(|| "id".into())),
            group_column: self.group.clone(),
        })
    }
}

fn dataset_body(id: u64, table: &DataTable) -> String {
    let columns: Vec<Value> = table
        .columns()
        .iter()
        .map(|c| {
            let present = c.values.iter().flatten();
            let min = present.clone().copied().reduce(f64::min);
            let max = present.copied().reduce(f64::max);
            let mean = stats::mean_present(c.values.iter().copied());
            json!({
                "name": c.name,
                "count": mean.map_or(0, |(_, n)| n),
                "missing": c.missing_count(),
                "mean": mean.map(|(m, _)| m),
                "sd": stats::population_std(c.values.iter().copied()),
                "min": min,
                "max": max,
            })
        })
        .collect();
    let group = table.group().map(|g| {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for l in &g.labels {
            *counts.entry(l).or_default() += 1;
        }
        json!({ "name": g.name, "labels": counts })
    });
    json!({ "id": id, "rows": table.n_rows(), "columns": columns, "group": group }).to_string()
}

async fn post_dataset(
    State(state): State<Arc<AppState>>,
    query: Result<Query<UploadQuery>, QueryRejection>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let Query(query) = query.map_err(from_query_rejection)?;
    let format = query.format()?;
    let table = load_table(body.as_ref(), &format)?;
    let id = state.allocate_id();
    let text = dataset_body(id, &table);

    let file = match &state.config.artifact_dir {
        Some(dir) => {
            let format = FormatSpec { delimiter: b',', ..format };
            let mut buf = Vec::new();
            write_table(&table, &format, &mut buf).map_err(|e| ApiError::internal(e.to_string()))?;
            let path = dir.join(format!("dataset-{id}.csv"));
            fs::write(&path, &buf).map_err(|e| ApiError::internal(format!("{}: {e}", path.display())))?;
            let path = fs::canonicalize(&path).map_err(|e| ApiError::internal(e.to_string()))?;
            Some((path, sha256_hex(&buf)))
        }
        None => None,
    };

    state.reserve(body.len() + text.len())?;
    let dataset = Arc::new(Dataset { id, table, body: text, file });
    state.datasets.write().unwrap().insert(id, Arc::clone(&dataset));
    Ok(json_response(StatusCode::CREATED, &dataset.body))
}

async fn get_dataset(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let dataset = state.dataset(&id)?;
    Ok(json_response(StatusCode::OK, &dataset.body))
}

fn default_winsor() -> Option<[f64; 2]> {
    Some([0.005, 0.995])
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BuildRequest {
    axes: Vec<String>,
    epsilon: f64,
    #[serde(default)]
    strategy: LandmarkStrategy,
    #[serde(default)]
    seed: u64,
    /// `[lower_q, upper_q]`; `null` disables winsorisation.
    #[serde(default = "default_winsor")]
    winsor: Option<[f64; 2]>,
}

async fn post_graph(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    request: Result<Json<BuildRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let dataset = state.dataset(&id)?;
    let Json(request) = request.map_err(from_json_rejection)?;
    if request.axes.is_empty() {
        return Err(ApiError::invalid("at least one axis column is required"));
    }
    let params = CoverParams { epsilon: request.epsilon, strategy: request.strategy, seed: request.seed };
    params.validate()?;
    let winsor = request.winsor.map(|[lo, hi]| WinsorSpec::new(lo, hi)).transpose()?;
    let rows = dataset.table.n_rows();
    if rows > state.config.max_build_points {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "too_large",
            format!("{rows} rows exceeds the build limit of {}", state.config.max_build_points),
        )
        .detail(json!({ "rows": rows, "limit": state.config.max_build_points })));
    }

    let graph_id = state.allocate_id();
    let build_state = Arc::clone(&state);
    tokio::task::spawn_blocking(move || build(&build_state, graph_id, dataset, request.axes, params, winsor))
        .await
        .map_err(|e| ApiError::internal(format!("build task failed: {e}")))?
}

fn build(
    state: &AppState,
    graph_id: u64,
    dataset: Arc<Dataset>,
    axes: Vec<String>,
    params: CoverParams,
    winsor: Option<WinsorSpec>,
) -> Result<Response, ApiError> {
    let prepared = prepare(&dataset.table, &axes, winsor.as_ref())?;
    let cover = Cover::build(&prepared.cloud, params)?;
    let graph: BallMapperGraph = build_graph(&cover);
    // Hashed as compact JSON with sorted keys, which clients can reproduce.
    let doc = serde_json::to_value(GraphDocument::new(&cover, &graph, &prepared.cloud))
        .expect("graph document serialises");
    let compact = doc.to_string();
    let winsor_bounds = winsor.map(|w| [w.lower_q, w.upper_q]);
    let body = json!({
        "graph_id": graph_id,
        "dataset_id": dataset.id,
        "axes": axes,
        "winsor": winsor_bounds,
        "points": prepared.cloud.len(),
        "dropped_rows": prepared.dropped,
        "content_hash": sha256_hex(compact.as_bytes()),
        "graph": doc,
    })
    .to_string();

    if let (Some(dir), Some((path, sha256))) = (&state.config.artifact_dir, &dataset.file) {
        let artifact = CoverArtifact {
            version: ARTIFACT_VERSION,
            source: SourceRef {
                path: path.clone(),
                sha256: sha256.clone(),
                format: FormatSpec {
                    delimiter: b',',
                    id_column: Some("id".into()),
                    group_column: dataset.table.group().map(|g| g.name.clone()),
                },
            },
            subset: None,
            axes: axes.clone(),
            winsor,
            row_ids: prepared.cloud.row_ids().to_vec(),
            cover: cover.clone(),
        };
        let out = dir.join(format!("graph-{graph_id}.json"));
        fs::write(&out, artifact.to_json())
            .map_err(|e| ApiError::internal(format!("{}: {e}", out.display())))?;
    }

    let members: usize = cover.members.iter().map(Vec::len).sum();
    state.reserve(body.len() + members * std::mem::size_of::<usize>())?;
    let stored = Arc::new(Graph { dataset, axes, prepared, cover, body });
    state.graphs.write().unwrap().insert(graph_id, Arc::clone(&stored));
    Ok(json_response(StatusCode::CREATED, &stored.body))
}

async fn get_graph(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let graph = state.graph(&id)?;
    Ok(json_response(StatusCode::OK, &graph.body))
}

fn coloring_value(c: &Coloring) -> Value {
    let missing: Vec<usize> =
        c.values.iter().enumerate().filter(|(_, v)| v.is_none()).map(|(i, _)| i + 1).collect();
    json!({ "variable": c.variable, "values": c.values, "counts": c.counts, "missing": missing })
}

async fn get_coloring(
    State(state): State<Arc<AppState>>,
    Path((id, variable)): Path<(String, String)>,
) -> Result<Json<Value>, ApiError> {
    let g = state.graph(&id)?;
    let coloring = color_by(&g.cover, &g.prepared.cloud, &g.prepared.table, &variable)?;
    Ok(Json(coloring_value(&coloring)))
}

#[derive(Debug, Default, Deserialize)]
struct SummaryQuery {
    /// Comma-separated; defaults to the graph's axes.
    variables: Option<String>,
}

fn split_list(list: &str) -> Vec<String> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

async fn get_summary(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<SummaryQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let g = state.graph(&id)?;
    let Query(query) = query.map_err(from_query_rejection)?;
    let variables = query.variables.as_deref().map_or_else(|| g.axes.clone(), split_list);
    let variables: Vec<&str> = variables.iter().map(String::as_str).collect();
    let colorings = variables
        .iter()
        .map(|v| color_by(&g.cover, &g.prepared.cloud, &g.prepared.table, v))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = summary_from_colorings(&g.cover, &colorings);
    Ok(json_response(StatusCode::OK, &export::summary_json(&rows, &variables)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareRequest {
    group_a: Vec<usize>,
    group_b: Vec<usize>,
    /// Defaults to the graph's axes.
    variables: Option<Vec<String>>,
}

async fn post_compare(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    request: Result<Json<CompareRequest>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let g = state.graph(&id)?;
    let Json(request) = request.map_err(from_json_rejection)?;
    let variables = request.variables.unwrap_or_else(|| g.axes.clone());
    let variables: Vec<&str> = variables.iter().map(String::as_str).collect();
    let table = with_indicators(&g.prepared.table, &variables)?;
    let report =
        compare_balls(&g.cover, &g.prepared.cloud, &table, &request.group_a, &request.group_b, &variables)?;
    Ok(Json(export::comparison_value(&report)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegressRequest {
    response: String,
    regressors: Vec<String>,
    /// Graph on which to colour the residuals.
    graph_id: Option<u64>,
}

/// Mean residual and mean absolute residual per ball, matching cloud points
/// to fitted rows by row id.
fn residual_colorings(fit: &RegressionFit, g: &Graph) -> Result<(Coloring, Coloring), ApiError> {
    let by_id: HashMap<&str, Option<f64>> =
        fit.table_row_ids.iter().map(String::as_str).zip(fit.residuals_by_row()).collect();
    let values: Vec<Option<f64>> =
        g.prepared.cloud.row_ids().iter().map(|id| by_id.get(id.as_str()).copied().flatten()).collect();
    let abs: Vec<Option<f64>> = values.iter().map(|v| v.map(f64::abs)).collect();
    Ok((
        Coloring::from_point_values("residual", &g.cover, &values)?,
        Coloring::from_point_values("abs_residual", &g.cover, &abs)?,
    ))
}

async fn post_regress(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    request: Result<Json<RegressRequest>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let dataset = state.dataset(&id)?;
    let Json(request) = request.map_err(from_json_rejection)?;
    let graph = match request.graph_id {
        Some(gid) => {
            let g = state.graph(&gid.to_string())?;
            if g.dataset.id != dataset.id {
                return Err(ApiError::invalid(format!(
                    "graph {gid} was not built from dataset {}",
                    dataset.id
                )));
            }
            Some(g)
        }
        None => None,
    };
    let regressors: Vec<&str> = request.regressors.iter().map(String::as_str).collect();
    let fit = ols_fit_table(&dataset.table, &regressors, &request.response)?;
    let mut body = json!({
        "response": fit.response,
        "terms": fit.terms,
        "coefficients": fit.coefficients,
        "standard_errors": fit.standard_errors,
        "t_abs": fit.t_abs,
        "stars": fit.stars(),
        "r_squared": fit.r_squared,
        "rss": fit.rss,
        "n_obs": fit.n_obs(),
        "table": export::regression_table(&fit),
    });
    if let Some(g) = graph {
        let (residual, abs) = residual_colorings(&fit, &g)?;
        body["residual_colorings"] = json!({
            "graph_id": request.graph_id,
            "residual": coloring_value(&residual),
            "abs_residual": coloring_value(&abs),
        });
    }
    Ok(Json(body))
}
