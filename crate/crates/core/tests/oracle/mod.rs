//! Brute-force reference implementations used to check the engine.
//!
//! None of these call into the code paths they verify beyond reading plain
//! data (coordinates, member lists, raw vectors).

#![allow(dead_code)]

use std::collections::BTreeMap;

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Smallest `v` in the data with `#{x <= v} >= q * m`.
pub fn nearest_rank_by_counting(values: &[f64], q: f64) -> f64 {
    let m = values.len() as f64;
    let mut candidates: Vec<f64> = values.to_vec();
    candidates.sort_by(f64::total_cmp);
    for &v in &candidates {
        let at_or_below = values.iter().filter(|&&x| x <= v).count() as f64;
        if at_or_below >= q * m - 1e-9 * m {
            return v;
        }
    }
    *candidates.last().unwrap()
}

/// Points not within `eps` of any landmark.
pub fn uncovered_points(points: &[Vec<f64>], landmarks: &[usize], eps: f64) -> Vec<usize> {
    (0..points.len()).filter(|&p| !landmarks.iter().any(|&l| dist(&points[p], &points[l]) <= eps)).collect()
}

/// Expected members of each ball, by direct scan.
pub fn ball_members(points: &[Vec<f64>], landmarks: &[usize], eps: f64) -> Vec<Vec<usize>> {
    landmarks
        .iter()
        .map(|&l| (0..points.len()).filter(|&p| dist(&points[p], &points[l]) <= eps).collect())
        .collect()
}

/// `(i, j) -> |C_i ∩ C_j|` for every pair of 1-based ball ids with a
/// nonempty intersection, by comparing every pair of balls.
pub fn intersections(members: &[Vec<usize>]) -> BTreeMap<(usize, usize), usize> {
    let mut out = BTreeMap::new();
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            let n = members[i].iter().filter(|p| members[j].contains(p)).count();
            if n > 0 {
                out.insert((i + 1, j + 1), n);
            }
        }
    }
    out
}

/// Max pairwise distance within each member list.
pub fn ball_diameters(points: &[Vec<f64>], members: &[Vec<usize>]) -> Vec<f64> {
    members
        .iter()
        .map(|m| {
            let mut best = 0.0f64;
            for &a in m {
                for &b in m {
                    best = best.max(dist(&points[a], &points[b]));
                }
            }
            best
        })
        .collect()
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, piv);
        b.swap(k, piv);
        let (top, rest) = a.split_at_mut(k + 1);
        let pivot_row = &top[k];
        for (off, row) in rest.iter_mut().enumerate() {
            let f = row[k] / pivot_row[k];
            for (x, p) in row[k..].iter_mut().zip(&pivot_row[k..]) {
                *x -= f * p;
            }
            b[k + 1 + off] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

pub struct NormalEquationsFit {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub r_squared: f64,
}

/// OLS with an intercept through `(XᵀX)⁻¹ Xᵀ y`, forming `XᵀX` explicitly.
pub fn normal_equations(columns: &[Vec<f64>], y: &[f64]) -> NormalEquationsFit {
    let n = y.len();
    let mut x: Vec<Vec<f64>> = vec![vec![1.0; n]];
    x.extend(columns.iter().cloned());
    let p = x.len();
    let xtx: Vec<Vec<f64>> =
        (0..p).map(|i| (0..p).map(|j| (0..n).map(|r| x[i][r] * x[j][r]).sum()).collect()).collect();
    let xty: Vec<f64> = (0..p).map(|i| (0..n).map(|r| x[i][r] * y[r]).sum()).collect();
    let beta = dense_solve(xtx.clone(), xty);
    let resid: Vec<f64> = (0..n).map(|r| y[r] - (0..p).map(|j| x[j][r] * beta[j]).sum::<f64>()).collect();
    let rss: f64 = resid.iter().map(|e| e * e).sum();
    let s2 = rss / (n - p) as f64;
    let standard_errors = (0..p)
        .map(|j| {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            (s2 * dense_solve(xtx.clone(), e)[j]).sqrt()
        })
        .collect();
    let mean = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    NormalEquationsFit { coefficients: beta, standard_errors, r_squared: 1.0 - rss / tss }
}

/// Small deterministic generator for fixtures (SplitMix64).
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Random cloud in `[0, 1]^dim`.
pub fn random_points(rng: &mut SplitMix, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.unit()).collect()).collect()
}
