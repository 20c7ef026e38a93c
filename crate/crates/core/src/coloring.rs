//! Induced colourings, per-ball summaries and ball-group comparisons.
//!
//! Everything here reads variables from the original [`DataTable`], so means
//! are in the table's units even though the cover was built on normalised
//! coordinates.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::cloud::PointCloud;
use crate::cover::Cover;
use crate::error::{Error, Result};
use crate::stats;
use crate::table::DataTable;

/// `|dist|` at or above this many whole-sample standard deviations is flagged.
pub const FLAG_THRESHOLD: f64 = 2.0;

/// Per-ball mean of one variable.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Coloring {
    pub variable: String,
    /// Indexed by `ball id - 1`; `None` when no member has a value.
    pub values: Vec<Option<f64>>,
    /// Members that contributed a value.
    pub counts: Vec<usize>,
}

impl Coloring {
    /// Averages `point_values` (one entry per cloud point) over each ball.
    pub fn from_point_values(
        variable: impl Into<String>,
        cover: &Cover,
        point_values: &[Option<f64>],
    ) -> Result<Self> {
        if point_values.len() != cover.n_points {
            return Err(Error::RowMismatch(format!(
                "{} values for {} covered points",
                point_values.len(),
                cover.n_points
            )));
        }
        let (values, counts) = cover
            .members
            .iter()
            .map(|m| match stats::mean_present(m.iter().map(|&p| point_values[p])) {
                Some((mean, count)) => (Some(mean), count),
                None => (None, 0),
            })
            .unzip();
        Ok(Coloring { variable: variable.into(), values, counts })
    }

    /// `(min, max)` over the defined vertex values.
    pub fn range(&self) -> Option<(f64, f64)> {
        self.values.iter().flatten().fold(None, |acc, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }
}

/// Values of `variable` for each cloud point, in point order.
pub fn point_values(cloud: &PointCloud, table: &DataTable, variable: &str) -> Result<Vec<Option<f64>>> {
    let column = table.column(variable)?;
    check_alignment(cloud, table)?;
    Ok(cloud.source_rows().iter().map(|&r| column.values[r]).collect())
}

fn check_alignment(cloud: &PointCloud, table: &DataTable) -> Result<()> {
    let ids = table.row_ids();
    for (p, (&r, id)) in cloud.source_rows().iter().zip(cloud.row_ids()).enumerate() {
        if ids.get(r) != Some(id) {
            return Err(Error::RowMismatch(format!("point {p} (row {id}) does not match the table")));
        }
    }
    Ok(())
}

fn check_cover(cover: &Cover, cloud: &PointCloud) -> Result<()> {
    if cover.n_points == cloud.len() {
        Ok(())
    } else {
        Err(Error::RowMismatch(format!("cover spans {} points, cloud has {}", cover.n_points, cloud.len())))
    }
}

/// Colours each ball by the mean of `variable` over its members.
pub fn induce_coloring(
    cover: &Cover,
    cloud: &PointCloud,
    table: &DataTable,
    variable: &str,
) -> Result<Coloring> {
    check_cover(cover, cloud)?;
    let values = point_values(cloud, table, variable)?;
    Coloring::from_point_values(variable, cover, &values)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BallSummaryRow {
    pub ball: usize,
    /// Per requested variable, in request order.
    pub means: Vec<Option<f64>>,
    /// Member count; points in several balls are counted in each.
    pub obs: usize,
}

/// One row per ball with the mean of every requested variable.
pub fn ball_summary(
    cover: &Cover,
    cloud: &PointCloud,
    table: &DataTable,
    variables: &[&str],
) -> Result<Vec<BallSummaryRow>> {
    let colorings =
        variables.iter().map(|v| induce_coloring(cover, cloud, table, v)).collect::<Result<Vec<_>>>()?;
    Ok(cover
        .members
        .iter()
        .enumerate()
        .map(|(i, m)| BallSummaryRow {
            ball: i + 1,
            means: colorings.iter().map(|c| c.values[i]).collect(),
            obs: m.len(),
        })
        .collect())
}

/// `diff / sigma`, or `None` when `sigma` is zero.
pub fn standardized_difference(diff: f64, sigma: f64) -> Option<f64> {
    (sigma > 0.0).then(|| diff / sigma)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonRow {
    pub variable: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub diff: f64,
    /// Whole-sample population standard deviation.
    pub sigma: f64,
    /// `None` when `sigma == 0`.
    pub dist: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonReport {
    pub group_a: Vec<usize>,
    pub group_b: Vec<usize>,
    /// Distinct points pooled in each group.
    pub n_a: usize,
    pub n_b: usize,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn flags(&self) -> Vec<&str> {
        self.rows.iter().filter(|r| r.flagged).map(|r| r.variable.as_str()).collect()
    }
}

/// Compares two groups of balls variable by variable.
///
/// Each group is the deduplicated union of its balls' members. `diff` is the
/// difference of the pooled means; `dist` divides it by the standard deviation
/// of the variable over every point of the cloud.
pub fn compare_balls(
    cover: &Cover,
    cloud: &PointCloud,
    table: &DataTable,
    group_a: &[usize],
    group_b: &[usize],
    variables: &[&str],
) -> Result<ComparisonReport> {
    check_cover(cover, cloud)?;
    if group_a.is_empty() || group_b.is_empty() {
        return Err(Error::InvalidParameter("ball groups must be non-empty".into()));
    }
    let pooled_a = cover.pooled_members(group_a)?;
    let pooled_b = cover.pooled_members(group_b)?;

    let mut rows = Vec::with_capacity(variables.len());
    for &variable in variables {
        let values = point_values(cloud, table, variable)?;
        let group_mean = |pooled: &[usize]| {
            stats::mean_present(pooled.iter().map(|&p| values[p]))
                .map(|(m, _)| m)
                .ok_or_else(|| Error::NoObservations(variable.into()))
        };
        let mean_a = group_mean(&pooled_a)?;
        let mean_b = group_mean(&pooled_b)?;
        let sigma = stats::population_std(values.iter().copied())
            .ok_or_else(|| Error::NoObservations(variable.into()))?;
        let diff = mean_a - mean_b;
        let dist = standardized_difference(diff, sigma);
        rows.push(ComparisonRow {
            variable: variable.into(),
            mean_a,
            mean_b,
            diff,
            sigma,
            dist,
            flagged: dist.is_some_and(|d| d.abs() >= FLAG_THRESHOLD),
        });
    }
    Ok(ComparisonReport {
        group_a: group_a.to_vec(),
        group_b: group_b.to_vec(),
        n_a: pooled_a.len(),
        n_b: pooled_b.len(),
        rows,
    })
}

/// Hard partition obtained by giving each point to its lowest-numbered ball.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UniquePartition {
    /// Ball id of each point.
    pub assignment: Vec<usize>,
    /// `(ball id, points)` for balls that received at least one point.
    pub groups: Vec<(usize, Vec<usize>)>,
}

impl UniquePartition {
    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|(_, g)| g.len()).collect()
    }
}

pub fn assign_unique(cover: &Cover) -> UniquePartition {
    let mut assignment = alloc::vec![0usize; cover.n_points];
    // Balls are visited in id order so the first writer is the lowest id.
    for (i, members) in cover.members.iter().enumerate() {
        for &p in members {
            if assignment[p] == 0 {
                assignment[p] = i + 1;
            }
        }
    }
    let mut buckets = alloc::vec![Vec::new(); cover.n_balls()];
    for (p, &b) in assignment.iter().enumerate() {
        debug_assert!(b > 0, "cover is incomplete");
        buckets[b - 1].push(p);
    }
    let groups =
        buckets.into_iter().enumerate().filter(|(_, g)| !g.is_empty()).map(|(i, g)| (i + 1, g)).collect();
    UniquePartition { assignment, groups }
}
