//! Service contract checks. Each check panics on failure; all of them run
//! against a live server over HTTP.

use std::collections::BTreeMap;

use ballmapper::artifact::CoverArtifact;
use ballmapper::service::ServiceConfig;
use serde_json::{json, Value};

use super::{firm_table, fixture_text, spawn_server};

#[derive(Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

pub struct Reply {
    pub status: u16,
    pub text: String,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.text).unwrap_or_else(|e| panic!("{e}: {}", self.text))
    }
}

impl Client {
    pub fn new(base: &str) -> Self {
        Client { base: base.to_string(), http: reqwest::Client::new() }
    }

    async fn finish(resp: reqwest::Response) -> Reply {
        let status = resp.status().as_u16();
        Reply { status, text: resp.text().await.unwrap() }
    }

    pub async fn get(&self, path: &str) -> Reply {
        Self::finish(self.http.get(format!("{}{path}", self.base)).send().await.unwrap()).await
    }

    pub async fn post_text(&self, path: &str, body: &str) -> Reply {
        let req = self.http.post(format!("{}{path}", self.base)).body(body.to_string());
        Self::finish(req.send().await.unwrap()).await
    }

    pub async fn post_json(&self, path: &str, body: &Value) -> Reply {
        Self::finish(self.http.post(format!("{}{path}", self.base)).json(body).send().await.unwrap()).await
    }

    /// Uploads a table and returns its id.
    pub async fn upload(&self, query: &str, body: &str) -> u64 {
        let r = self.post_text(&format!("/datasets{query}"), body).await;
        assert_eq!(r.status, 201, "{}", r.text);
        r.json()["id"].as_u64().unwrap()
    }

    /// Builds a graph and returns the full response.
    pub async fn build(&self, dataset: u64, request: Value) -> Value {
        let r = self.post_json(&format!("/datasets/{dataset}/graphs"), &request).await;
        assert_eq!(r.status, 201, "{}", r.text);
        r.json()
    }
}

fn assert_close(got: &Value, want: f64, tol: f64) {
    let g = got.as_f64().unwrap_or_else(|| panic!("not a number: {got}"));
    assert!((g - want).abs() <= tol, "{g} vs {want}");
}

fn assert_error(r: &Reply, status: u16, code: &str) {
    assert_eq!(r.status, status, "{}", r.text);
    let v = r.json();
    assert_eq!(v["code"], code, "{v}");
    assert!(v["message"].as_str().is_some_and(|m| !m.is_empty()));
    assert!(v.get("detail").is_some());
}

fn leaf_count(graph: &Value) -> usize {
    let mut degree: BTreeMap<u64, usize> = BTreeMap::new();
    for v in graph["vertices"].as_array().unwrap() {
        degree.insert(v["id"].as_u64().unwrap(), 0);
    }
    for e in graph["edges"].as_array().unwrap() {
        *degree.get_mut(&e["source"].as_u64().unwrap()).unwrap() += 1;
        *degree.get_mut(&e["target"].as_u64().unwrap()).unwrap() += 1;
    }
    degree.values().filter(|&&d| d == 1).count()
}

fn chain_request() -> Value {
    json!({ "axes": ["x"], "epsilon": 0.25, "winsor": null })
}

pub async fn upload_valid_table(base: String) {
    let c = Client::new(&base);
    let r = c.post_text("/datasets", "id,x,y\na,1,10\nb,2,\nc,4,30\n").await;
    assert_eq!(r.status, 201, "{}", r.text);
    let v = r.json();
    assert!(v["id"].as_u64().is_some());
    assert_eq!(v["rows"], 3);
    let x = &v["columns"][0];
    assert_eq!(x["name"], "x");
    assert_eq!((x["count"].as_u64(), x["missing"].as_u64()), (Some(3), Some(0)));
    assert_close(&x["mean"], 7.0 / 3.0, 1e-12);
    // Population SD of 1, 2, 4.
    assert_close(&x["sd"], (14.0f64 / 9.0).sqrt(), 1e-12);
    assert_eq!((x["min"].as_f64(), x["max"].as_f64()), (Some(1.0), Some(4.0)));
    assert_eq!((v["columns"][1]["count"].as_u64(), v["columns"][1]["missing"].as_u64()), (Some(2), Some(1)));
}

pub async fn duplicate_upload_gets_new_id(base: String) {
    let c = Client::new(&base);
    let body = fixture_text("chain.csv");
    let a = c.upload("", &body).await;
    let b = c.upload("", &body).await;
    assert_ne!(a, b);
    let (ra, rb) = (c.get(&format!("/datasets/{a}")).await, c.get(&format!("/datasets/{b}")).await);
    assert_eq!(ra.json()["columns"], rb.json()["columns"]);
}

pub async fn eight_column_summaries(base: String) {
    let c = Client::new(&base);
    let (text, missing) = firm_table(120, 7, 3);
    let r = c.post_text("/datasets?delimiter=tab&id=ticker&group=month", &text).await;
    assert_eq!(r.status, 201, "{}", r.text);
    let v = r.json();
    let columns = v["columns"].as_array().unwrap();
    assert_eq!(columns.len(), 8);
    assert_eq!(v["rows"], 120);
    assert_eq!(columns[7]["missing"].as_u64(), Some(missing as u64));
    for col in columns {
        assert!(col["min"].as_f64().unwrap() <= col["max"].as_f64().unwrap());
        assert!(col["sd"].as_f64().unwrap() >= 0.0);
    }
    assert_eq!(v["group"]["labels"]["2018-06"], 120);
}

pub async fn parse_errors_are_400(base: String) {
    let c = Client::new(&base);
    let r = c.post_text("/datasets", "id,x\nr1,1\nr2,abc\n").await;
    assert_error(&r, 400, "parse_error");
    let d = r.json()["detail"].clone();
    assert_eq!(
        (d["line"].as_u64(), d["column"].as_str(), d["row"].as_str()),
        (Some(3), Some("x"), Some("r2"))
    );
    assert_error(&c.post_text("/datasets", "").await, 400, "parse_error");
    assert_error(&c.post_text("/datasets", "a,b\n1,2,3\n").await, 400, "parse_error");
    assert_error(&c.post_text("/datasets?group=month", "a,b\n1,2\n").await, 400, "parse_error");
}

pub async fn build_above_diameter_is_one_vertex(base: String) {
    let c = Client::new(&base);
    let id = c.upload("?group=part", &fixture_text("y_cloud.csv")).await;
    // Normalised two-axis data has diameter at most sqrt(2).
    let v = c.build(id, json!({ "axes": ["x", "y"], "epsilon": 1.5 })).await;
    let vertices = v["graph"]["vertices"].as_array().unwrap();
    assert_eq!(vertices.len(), 1);
    assert_eq!(vertices[0]["weight"], 600);
    assert_eq!(v["graph"]["edges"].as_array().unwrap().len(), 0);
}

pub async fn repeat_build_same_content(base: String) {
    let c = Client::new(&base);
    let id = c.upload("?group=kind", &fixture_text("heavy_tailed.csv")).await;
    let request = json!({ "axes": ["x0", "x1", "x2"], "epsilon": 0.3, "strategy": "random", "seed": 11 });
    let a = c.build(id, request.clone()).await;
    let b = c.build(id, request).await;
    assert_ne!(a["graph_id"], b["graph_id"]);
    assert_eq!(a["content_hash"], b["content_hash"]);
    assert_eq!(a["graph"], b["graph"]);
    let hash = a["content_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    let compact = serde_json::to_string(&a["graph"]).unwrap();
    assert_eq!(ballmapper::artifact::sha256_hex(compact.as_bytes()), hash);
}

pub async fn y_cloud_has_three_leaves(base: String) {
    let c = Client::new(&base);
    let id = c.upload("?group=part", &fixture_text("y_cloud.csv")).await;
    for winsor in [json!(null), json!([0.005, 0.995])] {
        let v = c.build(id, json!({ "axes": ["x", "y"], "epsilon": 0.1, "winsor": winsor })).await;
        assert_eq!(leaf_count(&v["graph"]), 3);
        let members: usize = v["graph"]["vertices"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v["weight"].as_u64().unwrap() as usize)
            .sum();
        assert!(members >= 600);
    }
}

pub async fn build_errors(base: String) {
    let c = Client::new(&base);
    let r = c.post_json("/datasets/9999/graphs", &json!({ "axes": ["x"], "epsilon": 0.1 })).await;
    assert_error(&r, 404, "not_found");
    let id = c.upload("", &fixture_text("chain.csv")).await;
    let path = format!("/datasets/{id}/graphs");
    assert_error(
        &c.post_json(&path, &json!({ "axes": ["x"], "epsilon": 0.0 })).await,
        422,
        "invalid_request",
    );
    assert_error(&c.post_json(&path, &json!({ "axes": [], "epsilon": 0.1 })).await, 422, "invalid_request");
    assert_error(
        &c.post_json(&path, &json!({ "axes": ["x"], "epsilon": 0.1, "winsor": [0.6, 0.9] })).await,
        422,
        "invalid_request",
    );
    let r = c.post_json(&path, &json!({ "axes": ["x", "nope"], "epsilon": 0.1 })).await;
    assert_error(&r, 422, "unknown_variable");
    assert_eq!(r.json()["detail"]["column"], "nope");
    let r = c.post_json(&path, &json!({ "axes": ["x"], "epsilon": "big" })).await;
    assert_eq!(r.status, 422, "{}", r.text);
    let r = c.post_text(&path, "{not json").await;
    assert!(r.status == 400 || r.status == 415, "{}", r.text);
    assert_error(&c.get("/graphs/424242").await, 404, "not_found");
    assert_error(&c.get("/datasets/abc").await, 404, "not_found");
}

pub async fn colorings(base: String) {
    let c = Client::new(&base);
    let chain = c.upload("", &fixture_text("chain.csv")).await;
    let g = c.build(chain, chain_request()).await["graph_id"].as_u64().unwrap();
    let r = c.get(&format!("/graphs/{g}/colorings/v")).await;
    assert_eq!(r.status, 200, "{}", r.text);
    let v = r.json();
    assert_eq!(v["variable"], "v");
    // Balls {p0,p1}, {p1,p2,p3}, {p3,p4} over v = 1, 2, 3, 4, 10.
    assert_eq!(v["values"], json!([1.5, 3.0, 7.0]));
    assert_eq!(v["counts"], json!([2, 3, 2]));
    assert_eq!(v["missing"], json!([]));

    let text = "id,x,k,m\na,0,5,\nb,0.1,5,\nc,1,5,2\n";
    let d = c.upload("", text).await;
    let g2 = c.build(d, json!({ "axes": ["x"], "epsilon": 0.2, "winsor": null })).await["graph_id"]
        .as_u64()
        .unwrap();
    let k = c.get(&format!("/graphs/{g2}/colorings/k")).await.json();
    assert_eq!(k["values"], json!([5.0, 5.0]));
    let m = c.get(&format!("/graphs/{g2}/colorings/m")).await.json();
    assert_eq!(m["values"], json!([null, 2.0]));
    assert_eq!(m["missing"], json!([1]));

    let y = c.upload("?group=part", &fixture_text("y_cloud.csv")).await;
    let gy = c.build(y, json!({ "axes": ["x", "y"], "epsilon": 0.1 })).await;
    let weights: Vec<u64> =
        gy["graph"]["vertices"].as_array().unwrap().iter().map(|v| v["weight"].as_u64().unwrap()).collect();
    let hub = c.get(&format!("/graphs/{}/colorings/part=hub", gy["graph_id"])).await;
    assert_eq!(hub.status, 200, "{}", hub.text);
    let hub = hub.json();
    let mut total = vec![0.0; weights.len()];
    for label in ["hub", "arm1", "arm2", "arm3"] {
        let share = c.get(&format!("/graphs/{}/colorings/part={label}", gy["graph_id"])).await.json();
        for (t, s) in total.iter_mut().zip(share["values"].as_array().unwrap()) {
            let s = s.as_f64().unwrap();
            assert!((0.0..=1.0).contains(&s));
            *t += s;
        }
    }
    assert!(total.iter().all(|t| (t - 1.0).abs() < 1e-12));
    assert_eq!(
        hub["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).collect::<Vec<_>>(),
        weights
    );

    assert_error(&c.get(&format!("/graphs/{g}/colorings/zzz")).await, 422, "unknown_variable");
    assert_error(&c.get("/graphs/999999/colorings/v").await, 404, "not_found");
}

pub async fn comparisons(base: String) {
    let c = Client::new(&base);
    let chain = c.upload("", &fixture_text("chain.csv")).await;
    let g = c.build(chain, chain_request()).await["graph_id"].as_u64().unwrap();
    let path = format!("/graphs/{g}/compare");

    let same = c.post_json(&path, &json!({ "group_a": [2], "group_b": [2], "variables": ["x", "v"] })).await;
    assert_eq!(same.status, 200, "{}", same.text);
    let same = same.json();
    for row in same["rows"].as_array().unwrap() {
        assert_eq!((row["diff"].as_f64(), row["dist"].as_f64()), (Some(0.0), Some(0.0)));
    }
    assert_eq!(same["flags"], json!([]));

    let r =
        c.post_json(&path, &json!({ "group_a": [1], "group_b": [3], "variables": ["x", "v"] })).await.json();
    let (x, v) = (&r["rows"][0], &r["rows"][1]);
    assert_close(&x["mean_a"], 0.125, 1e-15);
    assert_close(&x["mean_b"], 0.875, 1e-15);
    assert_close(&x["diff"], -0.75, 1e-15);
    assert_close(&x["sigma"], 0.125f64.sqrt(), 1e-15);
    assert_close(&x["dist"], -0.75 / 0.125f64.sqrt(), 1e-12);
    assert_close(&v["diff"], 1.5 - 7.0, 1e-15);
    assert_close(&v["sigma"], 10f64.sqrt(), 1e-12);
    assert_eq!(r["flags"], json!(["x"]));
    assert_eq!((r["n_a"].as_u64(), r["n_b"].as_u64()), (Some(2), Some(2)));

    let shift = c.upload("", &fixture_text("shift.csv")).await;
    let s = c.build(shift, json!({ "axes": ["x"], "epsilon": 0.1 })).await["graph_id"].as_u64().unwrap();
    let r = c
        .post_json(
            &format!("/graphs/{s}/compare"),
            &json!({ "group_a": [1], "group_b": [2], "variables": ["a", "b", "c"] }),
        )
        .await
        .json();
    assert_eq!(r["flags"], json!(["a"]));
    assert_close(&r["rows"][0]["dist"], 3.0, 1e-9);
    assert_close(&r["rows"][1]["dist"], 0.0, 1e-12);
    assert_close(&r["rows"][2]["dist"], 1.0, 1e-9);

    assert_error(&c.post_json(&path, &json!({ "group_a": [9], "group_b": [1] })).await, 422, "unknown_ball");
    assert_error(
        &c.post_json(&path, &json!({ "group_a": [], "group_b": [1] })).await,
        422,
        "invalid_request",
    );
    assert_error(
        &c.post_json("/graphs/777777/compare", &json!({ "group_a": [1], "group_b": [1] })).await,
        404,
        "not_found",
    );
}

pub async fn summaries(base: String) {
    let c = Client::new(&base);
    let chain = c.upload("", &fixture_text("chain.csv")).await;
    let g = c.build(chain, chain_request()).await["graph_id"].as_u64().unwrap();
    let r = c.get(&format!("/graphs/{g}/summary")).await;
    assert_eq!(r.status, 200, "{}", r.text);
    let v = r.json();
    assert_eq!(v["variables"], json!(["x"]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0], json!({ "ball": 1, "means": [0.125], "obs": 2 }));
    assert_eq!(rows[1], json!({ "ball": 2, "means": [0.5], "obs": 3 }));
    let v = c.get(&format!("/graphs/{g}/summary?variables=v,x")).await.json();
    assert_eq!(v["rows"][2]["means"], json!([7.0, 0.875]));
    assert_error(&c.get(&format!("/graphs/{g}/summary?variables=q")).await, 422, "unknown_variable");
}

pub async fn regressions(base: String) {
    let c = Client::new(&base);
    let mut text = String::from("id,x,z,w,y\n");
    for i in 0..60 {
        let x = i as f64 / 59.0;
        let z = ((i * 37) % 60) as f64 / 60.0;
        let e = if i % 2 == 0 { 0.01 } else { -0.01 };
        text.push_str(&format!("r{i},{x},{z},{},{}\n", 2.0 * x, 1.0 + 2.0 * x - z + e));
    }
    let d = c.upload("", &text).await;
    let g = c.build(d, json!({ "axes": ["x", "z"], "epsilon": 0.3 })).await;
    let path = format!("/datasets/{d}/regress");
    let r = c
        .post_json(&path, &json!({ "response": "y", "regressors": ["x", "z"], "graph_id": g["graph_id"] }))
        .await;
    assert_eq!(r.status, 200, "{}", r.text);
    let v = r.json();
    assert_eq!(v["terms"], json!(["const", "x", "z"]));
    assert_close(&v["coefficients"][1], 2.0, 0.01);
    assert_close(&v["coefficients"][2], -1.0, 0.01);
    assert_eq!(v["n_obs"], 60);
    assert!(v["r_squared"].as_f64().unwrap() > 0.99);
    assert_eq!(v["stars"][1], "***");
    assert!(v["table"].as_str().unwrap().starts_with(",Const.,x,z,Obs"));
    let n_vertices = g["graph"]["vertices"].as_array().unwrap().len();
    let res = &v["residual_colorings"];
    assert_eq!(res["residual"]["values"].as_array().unwrap().len(), n_vertices);
    for (m, a) in res["residual"]["values"]
        .as_array()
        .unwrap()
        .iter()
        .zip(res["abs_residual"]["values"].as_array().unwrap())
    {
        assert!(m.as_f64().unwrap().abs() <= a.as_f64().unwrap() + 1e-15);
    }

    let r = c.post_json(&path, &json!({ "response": "y", "regressors": ["x", "w"] })).await;
    assert_error(&r, 422, "rank_deficient");
    assert!(r.json()["detail"]["columns"].as_array().unwrap().contains(&json!("w")));
    assert_error(
        &c.post_json(&path, &json!({ "response": "q", "regressors": ["x"] })).await,
        422,
        "unknown_variable",
    );
    let other = c.upload("", &fixture_text("chain.csv")).await;
    let og = c.build(other, chain_request()).await["graph_id"].clone();
    let r = c.post_json(&path, &json!({ "response": "y", "regressors": ["x"], "graph_id": og })).await;
    assert_error(&r, 422, "invalid_request");
}

/// GETs leave no trace: repeated and concurrent reads return identical
/// bytes, and no ids are consumed.
pub async fn gets_are_pure_reads(base: String) {
    let c = Client::new(&base);
    let d = c.upload("?group=part", &fixture_text("y_cloud.csv")).await;
    let g = c.build(d, json!({ "axes": ["x", "y"], "epsilon": 0.1 })).await["graph_id"].as_u64().unwrap();
    let paths = [
        format!("/datasets/{d}"),
        format!("/graphs/{g}"),
        format!("/graphs/{g}/colorings/x"),
        format!("/graphs/{g}/colorings/part=arm2"),
        format!("/graphs/{g}/summary?variables=x,y,part=hub"),
        "/graphs/0".to_string(),
    ];
    for path in &paths {
        let first = c.get(path).await;
        let reads = (0..16).map(|_| {
            let (c, path) = (c.clone(), path.clone());
            async move { c.get(&path).await }
        });
        for r in futures_join(reads).await {
            assert_eq!((r.status, &r.text), (first.status, &first.text), "{path}");
        }
    }
    let next = c.upload("", "id,x\na,1\n").await;
    assert_eq!(next, g + 1, "GET requests must not allocate ids");
}

async fn futures_join<F: std::future::Future<Output = Reply> + Send + 'static>(
    futures: impl Iterator<Item = F>,
) -> Vec<Reply> {
    let handles: Vec<_> = futures.map(tokio::spawn).collect();
    let mut out = Vec::new();
    for h in handles {
        out.push(h.await.unwrap());
    }
    out
}

pub async fn limits() {
    let small = Client::new(&spawn_server(ServiceConfig { max_build_points: 4, ..Default::default() }).await);
    let d = small.upload("", &fixture_text("chain.csv")).await;
    let r = small.post_json(&format!("/datasets/{d}/graphs"), &chain_request()).await;
    assert_error(&r, 422, "too_large");
    assert_eq!(r.json()["detail"]["limit"], 4);

    let tiny =
        Client::new(&spawn_server(ServiceConfig { max_store_bytes: 2000, ..Default::default() }).await);
    let d = tiny.upload("", &fixture_text("chain.csv")).await;
    let r = tiny.post_text("/datasets", &fixture_text("shift.csv")).await;
    assert_error(&r, 507, "store_full");
    assert_eq!(tiny.get(&format!("/datasets/{}", d + 1)).await.status, 404);
}

pub async fn write_through_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServiceConfig { artifact_dir: Some(dir.path().to_path_buf()), ..Default::default() };
    let c = Client::new(&spawn_server(config).await);
    let d = c.upload("?group=kind", &fixture_text("heavy_tailed.csv")).await;
    let v = c.build(d, json!({ "axes": ["x0", "x1"], "epsilon": 0.2 })).await;
    let g = v["graph_id"].as_u64().unwrap();
    assert!(dir.path().join(format!("dataset-{d}.csv")).exists());
    let artifact = CoverArtifact::read(&dir.path().join(format!("graph-{g}.json"))).unwrap();
    let session = artifact.open().unwrap();
    let members: Vec<Vec<String>> = v["graph"]["vertices"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["members"].as_array().unwrap().iter().map(|m| m.as_str().unwrap().to_string()).collect())
        .collect();
    let ids = session.prepared.cloud.row_ids();
    let stored: Vec<Vec<String>> =
        session.artifact.cover.members.iter().map(|m| m.iter().map(|&p| ids[p].clone()).collect()).collect();
    assert_eq!(stored, members);
    assert_eq!(session.graph.edges.len(), v["graph"]["edges"].as_array().unwrap().len());
}

/// Every check against one server; the ones needing their own
/// configuration start their own.
pub async fn run_all(base: String) {
    upload_valid_table(base.clone()).await;
    duplicate_upload_gets_new_id(base.clone()).await;
    eight_column_summaries(base.clone()).await;
    parse_errors_are_400(base.clone()).await;
    build_above_diameter_is_one_vertex(base.clone()).await;
    repeat_build_same_content(base.clone()).await;
    y_cloud_has_three_leaves(base.clone()).await;
    build_errors(base.clone()).await;
    colorings(base.clone()).await;
    comparisons(base.clone()).await;
    summaries(base.clone()).await;
    regressions(base.clone()).await;
    gets_are_pure_reads(base).await;
    limits().await;
    write_through_artifacts().await;
}
