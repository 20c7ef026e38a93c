//! Greedy ε-net and the closed-ball cover built on it.
//!
//! Ball membership uses `dist <= epsilon` on raw `f64` values with no
//! tolerance, so a cover is bit-reproducible from the cloud and parameters.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cloud::{euclidean, PointCloud};
use crate::error::{Error, Result};

/// How the next landmark is picked among the still-uncovered points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum LandmarkStrategy {
    /// Lowest uncovered point index.
    #[default]
    First,
    /// Uniformly at random among uncovered points, from a seeded ChaCha8 stream.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverParams {
    pub epsilon: f64,
    pub strategy: LandmarkStrategy,
    /// Only read by [`LandmarkStrategy::Random`].
    pub seed: u64,
}

impl CoverParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        let p = CoverParams { epsilon, strategy: LandmarkStrategy::First, seed: 0 };
        p.validate()?;
        Ok(p)
    }

    pub fn random(epsilon: f64, seed: u64) -> Result<Self> {
        let p = CoverParams { epsilon, strategy: LandmarkStrategy::Random, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon > 0.0 && self.epsilon.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)))
        }
    }
}

/// Landmarks `X'` and the members of each closed ε-ball.
///
/// Ball `i` (1-based id `i + 1`) is centred on `landmarks[i]`; `members[i]` is
/// sorted ascending and always contains the landmark itself.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cover {
    pub landmarks: Vec<usize>,
    pub members: Vec<Vec<usize>>,
    pub params: CoverParams,
    /// Number of points in the covered cloud.
    pub n_points: usize,
}

impl Cover {
    /// Builds the ε-net and the cover in one go.
    pub fn build(cloud: &PointCloud, params: CoverParams) -> Result<Self> {
        let landmarks = build_epsilon_net(cloud, &params)?;
        build_cover(cloud, &landmarks, params)
    }

    pub fn n_balls(&self) -> usize {
        self.landmarks.len()
    }

    /// Members of the ball with 1-based id `ball`.
    pub fn ball(&self, ball: usize) -> Result<&[usize]> {
        ball.checked_sub(1)
            .and_then(|i| self.members.get(i))
            .map(Vec::as_slice)
            .ok_or(Error::UnknownBall(ball))
    }

    /// 1-based ids of the balls containing each point.
    pub fn balls_of_points(&self) -> Vec<Vec<usize>> {
        let mut out = alloc::vec![Vec::new(); self.n_points];
        for (i, members) in self.members.iter().enumerate() {
            for &p in members {
                out[p].push(i + 1);
            }
        }
        out
    }

    /// Sorted, deduplicated union of the members of the given balls.
    pub fn pooled_members(&self, balls: &[usize]) -> Result<Vec<usize>> {
        let mut hit = alloc::vec![false; self.n_points];
        for &b in balls {
            for &p in self.ball(b)? {
                hit[p] = true;
            }
        }
        Ok(hit.iter().enumerate().filter(|(_, h)| **h).map(|(p, _)| p).collect())
    }
}

/// Greedy ε-net: pick an uncovered point, cover its closed ε-ball, repeat.
pub fn build_epsilon_net(cloud: &PointCloud, params: &CoverParams) -> Result<Vec<usize>> {
    params.validate()?;
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let n = cloud.len();
    let eps = params.epsilon;
    let mut covered = alloc::vec![false; n];
    let mut landmarks = Vec::new();

    match params.strategy {
        LandmarkStrategy::First => {
            let mut next = 0;
            while next < n {
                landmarks.push(next);
                mark_covered(cloud, next, eps, &mut covered);
                while next < n && covered[next] {
                    next += 1;
                }
            }
        }
        LandmarkStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            // Uncovered indices in ascending order; compacted after each ball.
            let mut uncovered: Vec<usize> = (0..n).collect();
            while !uncovered.is_empty() {
                let pick = uncovered[rng.random_range(0..uncovered.len())];
                landmarks.push(pick);
                mark_covered(cloud, pick, eps, &mut covered);
                uncovered.retain(|&p| !covered[p]);
            }
        }
    }
    Ok(landmarks)
}

fn mark_covered(cloud: &PointCloud, center: usize, eps: f64, covered: &mut [bool]) {
    let c = cloud.point(center);
    for (p, flag) in covered.iter_mut().enumerate() {
        if !*flag && euclidean(c, cloud.point(p)) <= eps {
            *flag = true;
        }
    }
}

/// Members of each closed ε-ball around `landmarks`, overlaps included.
pub fn build_cover(cloud: &PointCloud, landmarks: &[usize], params: CoverParams) -> Result<Cover> {
    params.validate()?;
    let n = cloud.len();
    if let Some(&index) = landmarks.iter().find(|&&l| l >= n) {
        return Err(Error::IndexOutOfRange { index, len: n });
    }
    let members = landmarks
        .iter()
        .map(|&l| {
            let c = cloud.point(l);
            (0..n).filter(|&p| euclidean(c, cloud.point(p)) <= params.epsilon).collect()
        })
        .collect();
    Ok(Cover { landmarks: landmarks.to_vec(), members, params, n_points: n })
}

/// Largest intra-ball distance of one ball.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BallDiameter {
    pub ball: usize,
    pub max_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiameterReport {
    pub epsilon: f64,
    pub balls: Vec<BallDiameter>,
    /// Ball ids whose members are more than `2 * epsilon` apart.
    pub violations: Vec<usize>,
}

impl DiameterReport {
    pub fn max_distance(&self) -> f64 {
        self.balls.iter().map(|b| b.max_distance).fold(0.0, f64::max)
    }
}

/// Checks that members of every ball are pairwise within `2ε`.
pub fn diameter_bound_check(cover: &Cover, cloud: &PointCloud) -> Result<DiameterReport> {
    if cover.n_points != cloud.len() {
        return Err(Error::RowMismatch(format!(
            "cover spans {} points, cloud has {}",
            cover.n_points,
            cloud.len()
        )));
    }
    let bound = 2.0 * cover.params.epsilon;
    let mut balls = Vec::with_capacity(cover.n_balls());
    let mut violations = Vec::new();
    for (i, members) in cover.members.iter().enumerate() {
        let mut max_distance = 0.0f64;
        for (a, &p) in members.iter().enumerate() {
            for &q in &members[a + 1..] {
                max_distance = max_distance.max(euclidean(cloud.point(p), cloud.point(q)));
            }
        }
        if max_distance > bound {
            violations.push(i + 1);
        }
        balls.push(BallDiameter { ball: i + 1, max_distance });
    }
    Ok(DiameterReport { epsilon: cover.params.epsilon, balls, violations })
}
