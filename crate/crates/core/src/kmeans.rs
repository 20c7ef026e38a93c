//! Lloyd k-means with seeded initialisation, and cluster-size reports used to
//! contrast k-means groups with Ball Mapper balls.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cloud::{squared_euclidean, PointCloud};
use crate::coloring::UniquePartition;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Clustering {
    pub k: usize,
    /// Cluster index in `0..k` for each point.
    pub assignments: Vec<usize>,
    /// Row-major `k × d`.
    pub centroids: Vec<f64>,
    pub dim: usize,
    /// Sum of squared distances from each point to its centroid.
    pub objective: f64,
    /// Objective after every assignment step.
    pub objective_history: Vec<f64>,
    pub iterations_run: usize,
    /// Stopped on an assignment fixpoint rather than `max_iter`.
    pub converged: bool,
}

impl Clustering {
    pub fn centroid(&self, c: usize) -> &[f64] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Lloyd iterations from `k` distinct data points drawn with a ChaCha8 stream
/// seeded by `seed`.
///
/// Each iteration assigns every point to its nearest centroid (lowest index
/// on ties) and then moves centroids to the means of their points. A centroid
/// left without points is moved onto the point farthest from where it was.
/// The run stops when an assignment step changes nothing or after `max_iter`
/// assignment steps; either way the returned assignments are nearest-centroid
/// for the returned centroids.
pub fn kmeans(cloud: &PointCloud, k: usize, seed: u64, max_iter: usize) -> Result<Clustering> {
    let n = cloud.len();
    let dim = cloud.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} must be in 1..={n}")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids: Vec<f64> = Vec::with_capacity(k * dim);
    for i in rand::seq::index::sample(&mut rng, n, k).into_iter() {
        centroids.extend_from_slice(cloud.point(i));
    }

    let mut assignments: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations_run = 0;
    for it in 1..=max_iter {
        let (next, objective) = assign(cloud, &centroids, k);
        history.push(objective);
        iterations_run = it;
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
        if it == max_iter {
            break;
        }
        update(cloud, &assignments, &mut centroids, k);
    }

    Ok(Clustering {
        k,
        assignments,
        centroids,
        dim,
        objective: *history.last().expect("at least one iteration"),
        objective_history: history,
        iterations_run,
        converged,
    })
}

fn assign(cloud: &PointCloud, centroids: &[f64], k: usize) -> (Vec<usize>, f64) {
    let dim = cloud.dim();
    let mut objective = 0.0;
    let labels = cloud
        .points()
        .map(|p| {
            let mut best = (0, f64::INFINITY);
            for c in 0..k {
                let d = squared_euclidean(p, &centroids[c * dim..(c + 1) * dim]);
                if d < best.1 {
                    best = (c, d);
                }
            }
            objective += best.1;
            best.0
        })
        .collect();
    (labels, objective)
}

fn update(cloud: &PointCloud, assignments: &[usize], centroids: &mut [f64], k: usize) {
    let dim = cloud.dim();
    let mut sums = alloc::vec![0.0; k * dim];
    let mut counts = alloc::vec![0usize; k];
    for (p, &a) in cloud.points().zip(assignments) {
        counts[a] += 1;
        for (s, x) in sums[a * dim..(a + 1) * dim].iter_mut().zip(p) {
            *s += x;
        }
    }
    let mut reseeded: Vec<usize> = Vec::new();
    for (c, &count) in counts.iter().enumerate() {
        let slot = c * dim..(c + 1) * dim;
        if count > 0 {
            for (dst, s) in centroids[slot.clone()].iter_mut().zip(&sums[slot]) {
                *dst = s / count as f64;
            }
            continue;
        }
        let old = &centroids[slot.clone()];
        let mut far = (usize::MAX, f64::NEG_INFINITY);
        for (i, p) in cloud.points().enumerate() {
            if reseeded.contains(&i) {
                continue;
            }
            let d = squared_euclidean(p, old);
            if d > far.1 {
                far = (i, d);
            }
        }
        if far.0 != usize::MAX {
            reseeded.push(far.0);
            centroids[slot].copy_from_slice(cloud.point(far.0));
        }
    }
}

/// Group-size summary for one partitioning method.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClusterSizeReport {
    pub method: String,
    pub groups: usize,
    pub min: usize,
    pub max: usize,
    pub total: usize,
}

impl ClusterSizeReport {
    pub fn from_sizes(method: impl Into<String>, sizes: &[usize]) -> Self {
        ClusterSizeReport {
            method: method.into(),
            groups: sizes.len(),
            min: sizes.iter().copied().min().unwrap_or(0),
            max: sizes.iter().copied().max().unwrap_or(0),
            total: sizes.iter().sum(),
        }
    }
}

/// One row for the Ball Mapper partition followed by one per k-means run.
pub fn cluster_size_report(
    ball_mapper: &UniquePartition,
    epsilon: f64,
    kmeans_runs: &[&Clustering],
) -> Vec<ClusterSizeReport> {
    let mut rows = alloc::vec![ClusterSizeReport::from_sizes(
        format!("ball-mapper (eps={epsilon})"),
        &ball_mapper.sizes(),
    )];
    rows.extend(
        kmeans_runs.iter().map(|c| ClusterSizeReport::from_sizes(format!("k-means ({})", c.k), &c.sizes())),
    );
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn line(n: usize) -> PointCloud {
        let pts: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / (n - 1) as f64]).collect();
        PointCloud::from_unit_coords(1, &pts).unwrap()
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let cloud = line(6);
        let c = kmeans(&cloud, 6, 3, 50).unwrap();
        assert_eq!(c.objective, 0.0);
        assert_eq!(c.sizes(), vec![1; 6]);
        assert!(c.converged);
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let cloud = line(5);
        let c = kmeans(&cloud, 1, 11, 50).unwrap();
        assert!(c.assignments.iter().all(|&a| a == 0));
        assert!((c.centroid(0)[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bad_k() {
        let cloud = line(3);
        assert!(kmeans(&cloud, 0, 1, 10).is_err());
        assert!(kmeans(&cloud, 4, 1, 10).is_err());
        assert!(kmeans(&cloud, 2, 1, 0).is_err());
    }

    #[test]
    fn max_iter_one_still_nearest() {
        let cloud = line(20);
        let c = kmeans(&cloud, 3, 5, 1).unwrap();
        assert_eq!(c.iterations_run, 1);
        assert!(!c.converged);
        for (i, p) in cloud.points().enumerate() {
            let own = squared_euclidean(p, c.centroid(c.assignments[i]));
            for j in 0..3 {
                assert!(own <= squared_euclidean(p, c.centroid(j)));
            }
        }
    }

    #[test]
    fn size_report_rows() {
        let part = UniquePartition {
            assignment: vec![1, 1, 2, 2, 3],
            groups: vec![(1, vec![0, 1]), (2, vec![2, 3]), (3, vec![4])],
        };
        let rows = cluster_size_report(&part, 0.25, &[]);
        assert_eq!(rows[0].min, 1);
        assert_eq!(rows[0].max, 2);
        assert_eq!(rows[0].total, 5);
        assert_eq!(rows[0].groups, 3);
    }
}
