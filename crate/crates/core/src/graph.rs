use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::cover::Cover;

/// A ball; `weight` is its member count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vertex {
    pub id: usize,
    pub weight: usize,
}

/// Two overlapping balls, `source < target`; `weight` counts shared points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: usize,
}

/// Weighted nerve of a cover: one vertex per ball, one edge per nonempty
/// pairwise intersection.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BallMapperGraph {
    pub vertices: Vec<Vertex>,
    /// Sorted by `(source, target)`.
    pub edges: Vec<Edge>,
}

/// Builds the Ball Mapper graph of `cover`.
///
/// Each point lists the balls containing it; every pair of those balls
/// shares that point, so counting pairs over all points yields exactly the
/// intersection cardinalities without comparing every pair of balls.
pub fn build_graph(cover: &Cover) -> BallMapperGraph {
    let vertices =
        cover.members.iter().enumerate().map(|(i, m)| Vertex { id: i + 1, weight: m.len() }).collect();

    let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for balls in cover.balls_of_points() {
        for (a, &i) in balls.iter().enumerate() {
            for &j in &balls[a + 1..] {
                *counts.entry((i, j)).or_insert(0) += 1;
            }
        }
    }
    let edges =
        counts.into_iter().map(|((source, target), weight)| Edge { source, target, weight }).collect();
    BallMapperGraph { vertices, edges }
}

/// Size of the intersection of two ascending index lists.
pub fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

impl BallMapperGraph {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Degree of each vertex, indexed by `id - 1`.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = alloc::vec![0; self.vertices.len()];
        for e in &self.edges {
            deg[e.source - 1] += 1;
            deg[e.target - 1] += 1;
        }
        deg
    }

    /// Ids of degree-one vertices.
    pub fn leaves(&self) -> Vec<usize> {
        self.degrees().iter().enumerate().filter(|(_, d)| **d == 1).map(|(i, _)| i + 1).collect()
    }

    /// Connected components as sorted vertex-id lists, ordered by smallest id.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in &self.edges {
            let a = find(&mut parent, e.source - 1);
            let b = find(&mut parent, e.target - 1);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..n {
            let root = find(&mut parent, v);
            groups.entry(root).or_default().push(v + 1);
        }
        groups.into_values().collect()
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }
}
