use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::table::{Column, DataTable};

/// Min/max used to map one axis onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AxisScaling {
    pub min: f64,
    pub max: f64,
    /// `min == max`; every coordinate on this axis is zero.
    pub degenerate: bool,
}

impl AxisScaling {
    pub fn identity() -> Self {
        AxisScaling { min: 0.0, max: 1.0, degenerate: false }
    }

    pub fn normalize(&self, x: f64) -> f64 {
        if self.degenerate {
            0.0
        } else {
            (x - self.min) / (self.max - self.min)
        }
    }

    pub fn denormalize(&self, u: f64) -> f64 {
        self.min + u * (self.max - self.min)
    }
}

/// Normalised coordinates of the retained rows, row-major `n × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    axis_names: Vec<String>,
    scaling: Vec<AxisScaling>,
    source_rows: Vec<usize>,
    row_ids: Vec<String>,
}

impl PointCloud {
    pub(crate) fn from_parts(
        dim: usize,
        coords: Vec<f64>,
        axis_names: Vec<String>,
        scaling: Vec<AxisScaling>,
        source_rows: Vec<usize>,
        row_ids: Vec<String>,
    ) -> Self {
        debug_assert_eq!(coords.len(), dim * source_rows.len());
        PointCloud { dim, coords, axis_names, scaling, source_rows, row_ids }
    }

    /// Builds a cloud from coordinates that are already in `[0, 1]`.
    ///
    /// Point `i` maps to table row `i` with row id `i`; scaling is the identity.
    pub fn from_unit_coords(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidParameter(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            if let Some(x) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(Error::InvalidParameter(format!("point {i} coordinate {x} outside [0, 1]")));
            }
            coords.extend_from_slice(p);
        }
        let n = points.len();
        Ok(PointCloud {
            dim,
            coords,
            axis_names: (0..dim).map(|a| format!("x{a}")).collect(),
            scaling: alloc::vec![AxisScaling::identity(); dim],
            source_rows: (0..n).collect(),
            row_ids: (0..n).map(|i| i.to_string()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.source_rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn axis_names(&self) -> &[String] {
        &self.axis_names
    }

    pub fn scaling(&self) -> &[AxisScaling] {
        &self.scaling
    }

    /// Table row index of each point.
    pub fn source_rows(&self) -> &[usize] {
        &self.source_rows
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    /// Euclidean distance between points `a` and `b`.
    pub fn distance(&self, a: usize, b: usize) -> Result<f64> {
        let n = self.len();
        for index in [a, b] {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, len: n });
            }
        }
        Ok(euclidean(self.point(a), self.point(b)))
    }

    /// Value of axis `axis` for point `i` in original units.
    pub fn denormalized(&self, i: usize, axis: usize) -> f64 {
        self.scaling[axis].denormalize(self.point(i)[axis])
    }

    /// Largest pairwise distance, by exhaustive scan.
    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                best = best.max(euclidean(self.point(i), self.point(j)));
            }
        }
        best
    }

    /// Smallest distance between two distinct points, by exhaustive scan.
    pub fn min_pairwise_distance(&self) -> Option<f64> {
        let n = self.len();
        let mut best: Option<f64> = None;
        for i in 0..n {
            for j in i + 1..n {
                let d = euclidean(self.point(i), self.point(j));
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }

    /// The normalised coordinates as a table (one column per axis).
    pub fn to_table(&self) -> DataTable {
        let columns = (0..self.dim)
            .map(|a| Column::new(self.axis_names[a].clone(), self.points().map(|p| Some(p[a])).collect()))
            .collect();
        DataTable::new(self.row_ids.clone(), columns, None).expect("cloud axes are unique and aligned")
    }
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(squared_euclidean(a, b))
}

#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
