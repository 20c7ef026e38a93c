//! Ball Mapper engine.
//!
//! Turns a table of numeric characteristics into a point cloud, covers the
//! cloud with closed ε-balls centred on a greedy ε-net, and summarises the
//! overlaps as a weighted abstract graph. Per-point variables are averaged
//! over each ball to colour the graph, balls can be pooled into groups and
//! compared in standard-deviation units, and two companion models (an OLS
//! cross-sectional fit and Lloyd k-means) are provided for residual colouring
//! and clustering contrasts.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, the CLI and the
//! HTTP service live in the `ballmapper` crate.

#![no_std]

extern crate alloc;

pub mod cloud;
pub mod coloring;
pub mod cover;
pub mod error;
pub mod graph;
pub mod kmeans;
pub mod ols;
pub mod stats;
pub mod synth;
pub mod table;

pub use cloud::{AxisScaling, PointCloud};
pub use coloring::{
    assign_unique, ball_summary, compare_balls, induce_coloring, standardized_difference, BallSummaryRow,
    Coloring, ComparisonReport, ComparisonRow, UniquePartition, FLAG_THRESHOLD,
};
pub use cover::{
    build_cover, build_epsilon_net, diameter_bound_check, BallDiameter, Cover, CoverParams, DiameterReport,
    LandmarkStrategy,
};
pub use error::{Error, Result};
pub use graph::{build_graph, BallMapperGraph, Edge, Vertex};
pub use kmeans::{cluster_size_report, kmeans, ClusterSizeReport, Clustering};
pub use ols::{ols_fit, ols_fit_table, residual_coloring, RegressionFit};
pub use table::{
    normalize_minmax, winsorize, Column, DataTable, DroppedRow, GroupColumn, NormalizeOutput, QuantileRule,
    WinsorMode, WinsorSpec,
};
