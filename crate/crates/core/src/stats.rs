//! Small descriptive statistics shared by the preprocessing and colouring code.
//!
//! All sums run in slice order so results are reproducible bit for bit.

use alloc::vec::Vec;

/// Arithmetic mean of the present values; `None` when nothing is present.
pub fn mean_present<I>(values: I) -> Option<(f64, usize)>
where
    I: IntoIterator<Item = Option<f64>>,
{
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values.into_iter().flatten() {
        sum += v;
        count += 1;
    }
    (count > 0).then(|| (sum / count as f64, count))
}

/// Population standard deviation (divisor n) of the present values.
pub fn population_std<I>(values: I) -> Option<f64>
where
    I: IntoIterator<Item = Option<f64>>,
{
    let present: Vec<f64> = values.into_iter().flatten().collect();
    if present.is_empty() {
        return None;
    }
    let n = present.len() as f64;
    let mean = present.iter().sum::<f64>() / n;
    let ss: f64 = present.iter().map(|v| (v - mean) * (v - mean)).sum();
    Some(libm::sqrt(ss / n))
}

/// 1-based nearest rank `ceil(q * m)`, clamped to `[1, m]`.
///
/// `q * m` is snapped to the nearest integer when it lies within a few ulps of
/// one, so that e.g. `0.995 * 1000` selects rank 995 rather than 996.
pub fn nearest_rank(q: f64, m: usize) -> usize {
    let r = q * m as f64;
    let nearest = libm::round(r);
    let rank = if libm::fabs(r - nearest) <= 1e-9 * r.abs().max(1.0) { nearest } else { libm::ceil(r) };
    (rank as usize).clamp(1, m.max(1))
}

/// Nearest-rank quantile of an ascending slice.
pub fn quantile_nearest_rank(sorted: &[f64], q: f64) -> f64 {
    sorted[nearest_rank(q, sorted.len()) - 1]
}

/// Linearly interpolated quantile (type 7) of an ascending slice.
pub fn quantile_linear(sorted: &[f64], q: f64) -> f64 {
    let m = sorted.len();
    if m == 1 {
        return sorted[0];
    }
    let h = q * (m - 1) as f64;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(m - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sorts finite values ascending with a total order.
pub fn sorted_copy(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_by(f64::total_cmp);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_snaps_products_near_integers() {
        assert_eq!(nearest_rank(0.005, 1000), 5);
        assert_eq!(nearest_rank(0.995, 1000), 995);
        assert_eq!(nearest_rank(0.5, 3), 2);
        assert_eq!(nearest_rank(1.0, 7), 7);
        assert_eq!(nearest_rank(0.0, 7), 1);
    }

    #[test]
    fn population_std_uses_divisor_n() {
        let sd = population_std([Some(1.0), Some(3.0), None]).unwrap();
        assert_eq!(sd, 1.0);
    }

    #[test]
    fn mean_skips_missing() {
        assert_eq!(mean_present([Some(2.0), None, Some(4.0)]), Some((3.0, 2)));
        assert_eq!(mean_present([None, None]), None);
    }

    #[test]
    fn linear_quantile_interpolates() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_linear(&s, 0.5), 2.5);
        assert_eq!(quantile_linear(&s, 0.0), 1.0);
        assert_eq!(quantile_linear(&s, 1.0), 4.0);
    }
}
