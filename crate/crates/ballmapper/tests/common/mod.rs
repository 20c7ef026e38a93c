//! Fixtures and a live-server helper shared by the integration tests.
#![allow(dead_code)]

pub mod contract;

use std::path::PathBuf;

use ballmapper::service::{self, AppState, ServiceConfig};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

/// Every bundled fixture with its axis columns and group column.
pub const FIXTURES: &[(&str, &[&str], Option<&str>)] = &[
    ("y_cloud.csv", &["x", "y"], Some("part")),
    ("heavy_tailed.csv", &["x0", "x1", "x2"], Some("kind")),
    ("chain.csv", &["x"], None),
    ("shift.csv", &["x"], None),
];

/// Starts the service on an ephemeral port and returns its base URL.
pub async fn spawn_server(config: ServiceConfig) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(service::serve(listener, AppState::new(config)));
    format!("http://{addr}")
}

/// Deterministic generator for synthetic tables (SplitMix64).
pub struct Rng(pub u64);

impl Rng {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Firm-characteristics-shaped table: ticker ids, a month column and eight
/// numeric columns, tab-delimited, with `NA` in every `missing_every`-th
/// cell of the last column. Returns the text and the number of `NA` cells.
pub fn firm_table(rows: usize, missing_every: usize, seed: u64) -> (String, usize) {
    const COLUMNS: [&str; 8] = ["bm", "roe", "size", "cash", "debt", "rd", "mom", "ret"];
    let mut rng = Rng(seed);
    let mut out = format!("ticker\tmonth\t{}\n", COLUMNS.join("\t"));
    let mut missing = 0;
    for r in 0..rows {
        out.push_str(&format!("F{r:05}\t2018-06"));
        for (c, _) in COLUMNS.iter().enumerate() {
            if c == COLUMNS.len() - 1 && r % missing_every == 0 {
                out.push_str("\tNA");
                missing += 1;
            } else {
                let v = (rng.unit() - 0.5) * 10f64.powi(c as i32 % 4);
                out.push_str(&format!("\t{v}"));
            }
        }
        out.push('\n');
    }
    (out, missing)
}
