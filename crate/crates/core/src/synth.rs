//! Seeded synthetic data sets.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::table::{Column, DataTable, GroupColumn};

/// Radius that resolves a default Y cloud into a hub plus three paths.
pub const Y_REFERENCE_EPSILON: f64 = 0.1;

/// Hub radius as a fraction of the arm length; small enough that one ball
/// at the reference radius swallows the whole hub after normalisation.
const HUB_RADIUS: f64 = 0.06;

/// Arm directions in degrees: two arms up and out, one straight down.
const ARM_ANGLES: [f64; 3] = [30.0, 150.0, 270.0];

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * PI * u2)
}

/// A "Y": a dense hub at the origin with three arms radiating from it.
///
/// A quarter of the points fill a disc of radius `0.06 * arm_length`; the
/// rest are spread evenly along three segments of length `arm_length` and
/// then jittered by isotropic Gaussian noise with standard deviation `noise`.
/// Columns are `x` and `y`; the group column `part` labels each row `hub`,
/// `arm1`, `arm2` or `arm3`.
pub fn generate_y_cloud(n: usize, arm_length: f64, noise: f64, seed: u64) -> Result<DataTable> {
    if n < 30 {
        return Err(Error::InvalidParameter(format!("Y cloud needs n >= 30, got {n}")));
    }
    if !(arm_length > 0.0 && arm_length.is_finite()) {
        return Err(Error::InvalidParameter(format!("arm length must be positive, got {arm_length}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise must be non-negative, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_hub = n / 4;
    let n_arms = n - n_hub;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut labels: Vec<String> = Vec::with_capacity(n);

    let hub_r = HUB_RADIUS * arm_length;
    for _ in 0..n_hub {
        let r = hub_r * libm::sqrt(rng.random::<f64>());
        let theta = 2.0 * PI * rng.random::<f64>();
        xs.push(r * libm::cos(theta));
        ys.push(r * libm::sin(theta));
        labels.push("hub".into());
    }
    for (a, angle) in ARM_ANGLES.iter().enumerate() {
        let m = n_arms / 3 + usize::from(a < n_arms % 3);
        let (s, c) = libm::sincos(angle.to_radians());
        for j in 0..m {
            let t = (j + 1) as f64 / m as f64 * arm_length;
            let (mut x, mut y) = (t * c, t * s);
            if noise > 0.0 {
                x += noise * standard_normal(&mut rng);
                y += noise * standard_normal(&mut rng);
            }
            xs.push(x);
            ys.push(y);
            labels.push(format!("arm{}", a + 1));
        }
    }
    DataTable::with_row_numbers(
        alloc::vec![Column::from_values("x", &xs), Column::from_values("y", &ys)],
        Some(GroupColumn { name: "part".into(), labels }),
    )
}

/// A dense Laplace-distributed mass with `n_outliers` isolated points planted
/// around it.
///
/// The mass holds `n - n_outliers` points with independent Laplace(0, 1)
/// coordinates, clipped to `[-4, 4]`. Outliers sit at radius 6 in evenly
/// spaced directions of the first two axes (other axes 0), so they are far
/// from the mass and from each other yet stay within the range a few k-means
/// centroids would span. Columns are `x0..x{dim-1}`; the group column `kind`
/// labels `mass` or `outlier`.
pub fn generate_heavy_tailed(n: usize, dim: usize, n_outliers: usize, seed: u64) -> Result<DataTable> {
    if dim < 2 {
        return Err(Error::InvalidParameter("heavy-tailed cloud needs dim >= 2".into()));
    }
    if n_outliers >= n / 2 {
        return Err(Error::InvalidParameter(format!("{n_outliers} outliers is too many for {n} points")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(n); dim];
    let mut labels: Vec<String> = Vec::with_capacity(n);
    for _ in 0..n - n_outliers {
        for col in cols.iter_mut() {
            let u: f64 = rng.random::<f64>() - 0.5;
            let x = -u.signum() * libm::log(1.0 - 2.0 * u.abs());
            col.push(x.clamp(-4.0, 4.0));
        }
        labels.push("mass".into());
    }
    let phase = 2.0 * PI * rng.random::<f64>();
    for o in 0..n_outliers {
        let theta = phase + 2.0 * PI * o as f64 / n_outliers as f64;
        for (a, col) in cols.iter_mut().enumerate() {
            col.push(match a {
                0 => 6.0 * libm::cos(theta),
                1 => 6.0 * libm::sin(theta),
                _ => 0.0,
            });
        }
        labels.push("outlier".into());
    }
    DataTable::with_row_numbers(
        cols.iter().enumerate().map(|(a, c)| Column::from_values(format!("x{a}"), c)).collect(),
        Some(GroupColumn { name: "kind".into(), labels }),
    )
}
