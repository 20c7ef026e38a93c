//! Ordinary least squares via Householder QR, and residual colourings.
//!
//! Standard errors are the classical homoskedastic ones,
//! `sqrt(s² · diag((XᵀX)⁻¹))` with `s² = RSS / (n − p)`, computed from `R⁻¹`
//! so `XᵀX` is never formed.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::cloud::PointCloud;
use crate::coloring::Coloring;
use crate::cover::Cover;
use crate::error::{Error, Result};
use crate::table::DataTable;

/// Name given to the intercept term.
pub const INTERCEPT: &str = "const";

/// Relative size of a QR pivot below which a column counts as collinear.
const RANK_TOLERANCE: f64 = 1e-9;

/// Two-sided normal critical values for the 5%, 1% and 0.1% levels.
const CRITICAL_5: f64 = 1.959_963_984_540_054;
const CRITICAL_1: f64 = 2.575_829_303_548_901;
const CRITICAL_01: f64 = 3.290_526_731_491_926;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegressionFit {
    pub response: String,
    /// Term names; the intercept, when present, comes first.
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    /// `|coef / se|`; `None` when the standard error is zero.
    pub t_abs: Vec<Option<f64>>,
    /// One residual per fitted row, in `rows` order.
    pub residuals: Vec<f64>,
    pub r_squared: f64,
    pub rss: f64,
    /// Table row indices used in the fit.
    pub rows: Vec<usize>,
    /// Row ids of the whole table the fit was run on.
    pub table_row_ids: Vec<String>,
}

impl RegressionFit {
    pub fn n_obs(&self) -> usize {
        self.rows.len()
    }

    pub fn has_intercept(&self) -> bool {
        self.terms.first().is_some_and(|t| t == INTERCEPT)
    }

    /// Residual for every table row; `None` for rows excluded from the fit.
    pub fn residuals_by_row(&self) -> Vec<Option<f64>> {
        let mut out = alloc::vec![None; self.table_row_ids.len()];
        for (&r, &e) in self.rows.iter().zip(&self.residuals) {
            out[r] = Some(e);
        }
        out
    }

    pub fn stars(&self) -> Vec<&'static str> {
        self.t_abs.iter().map(|t| significance_stars(t.unwrap_or(0.0))).collect()
    }
}

/// `*`, `**`, `***` at the 5%, 1% and 0.1% two-sided normal levels.
pub fn significance_stars(t_abs: f64) -> &'static str {
    if t_abs >= CRITICAL_01 {
        "***"
    } else if t_abs >= CRITICAL_1 {
        "**"
    } else if t_abs >= CRITICAL_5 {
        "*"
    } else {
        ""
    }
}

/// Fits `response ~ [1 +] regressors` on complete data.
pub fn ols_fit(
    regressors: &[(&str, &[f64])],
    response: (&str, &[f64]),
    intercept: bool,
) -> Result<RegressionFit> {
    let n = response.1.len();
    if let Some((name, col)) = regressors.iter().find(|(_, c)| c.len() != n) {
        return Err(Error::ColumnLength { name: (*name).into(), expected: n, actual: col.len() });
    }
    let mut terms: Vec<String> = Vec::new();
    let mut design: Vec<f64> = Vec::with_capacity(n * (regressors.len() + 1));
    if intercept {
        terms.push(INTERCEPT.into());
        design.extend(core::iter::repeat_n(1.0, n));
    }
    for (name, col) in regressors {
        terms.push((*name).into());
        design.extend_from_slice(col);
    }
    let fit = solve(design, terms, response.1.to_vec())?;
    Ok(RegressionFit {
        response: response.0.into(),
        rows: (0..n).collect(),
        table_row_ids: (1..=n).map(|i| i.to_string()).collect(),
        ..fit
    })
}

/// Fits `response ~ 1 + regressors` on the table rows with no missing value
/// in any of the involved columns.
pub fn ols_fit_table(table: &DataTable, regressors: &[&str], response: &str) -> Result<RegressionFit> {
    let y = table.column(response)?;
    let xs = regressors.iter().map(|r| table.column(r)).collect::<Result<Vec<_>>>()?;
    let rows: Vec<usize> = (0..table.n_rows())
        .filter(|&r| y.values[r].is_some() && xs.iter().all(|c| c.values[r].is_some()))
        .collect();
    let n = rows.len();
    let mut terms = alloc::vec![String::from(INTERCEPT)];
    let mut design: Vec<f64> = Vec::with_capacity(n * (xs.len() + 1));
    design.extend(core::iter::repeat_n(1.0, n));
    for c in &xs {
        terms.push(c.name.clone());
        design.extend(rows.iter().map(|&r| c.values[r].expect("complete row")));
    }
    let yv = rows.iter().map(|&r| y.values[r].expect("complete row")).collect();
    let fit = solve(design, terms, yv)?;
    Ok(RegressionFit { response: response.into(), rows, table_row_ids: table.row_ids().to_vec(), ..fit })
}

/// Column-major `design` (`n × p`) least squares.
fn solve(mut a: Vec<f64>, terms: Vec<String>, y: Vec<f64>) -> Result<RegressionFit> {
    let n = y.len();
    let p = terms.len();
    let regressors = p - usize::from(terms.first().is_some_and(|t| t == INTERCEPT));
    if n <= regressors + 1 || n <= p {
        return Err(Error::TooFewRows { rows: n, needed: (regressors + 1).max(p) });
    }
    let x = a.clone();
    let col_norms: Vec<f64> = (0..p).map(|j| norm(&a[j * n..(j + 1) * n])).collect();
    let mut qty = y.clone();

    let mut collinear = Vec::new();
    for k in 0..p {
        let (col_k, rest) = a[k * n..].split_at_mut(n);
        let sub = &mut col_k[k..];
        let sigma = norm(sub);
        if sigma <= RANK_TOLERANCE * col_norms[k] || col_norms[k] == 0.0 {
            collinear.push(terms[k].clone());
            continue;
        }
        let alpha = if sub[0] > 0.0 { -sigma } else { sigma };
        let mut v: Vec<f64> = sub.to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        sub[0] = alpha;
        for x in &mut sub[1..] {
            *x = 0.0;
        }
        let reflect = |target: &mut [f64]| {
            let s: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * s / vv;
            for (t, vi) in target.iter_mut().zip(&v) {
                *t -= f * vi;
            }
        };
        for j in 0..p - k - 1 {
            reflect(&mut rest[j * n + k..(j + 1) * n]);
        }
        reflect(&mut qty[k..]);
    }
    if !collinear.is_empty() {
        return Err(Error::RankDeficient(collinear));
    }

    let r = |i: usize, j: usize| a[j * n + i];
    let mut beta = alloc::vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|j| r(i, j) * beta[j]).sum();
        beta[i] = (qty[i] - s) / r(i, i);
    }

    // R⁻¹ by back substitution, column by column.
    let mut rinv = alloc::vec![0.0; p * p];
    for j in 0..p {
        for i in (0..=j).rev() {
            let e = if i == j { 1.0 } else { 0.0 };
            let s: f64 = (i + 1..=j).map(|k| r(i, k) * rinv[j * p + k]).sum();
            rinv[j * p + i] = (e - s) / r(i, i);
        }
    }

    let residuals: Vec<f64> =
        (0..n).map(|i| y[i] - (0..p).map(|j| x[j * n + i] * beta[j]).sum::<f64>()).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let s2 = rss / (n - p) as f64;
    let standard_errors: Vec<f64> = (0..p)
        .map(|i| libm::sqrt(s2 * (i..p).map(|j| rinv[j * p + i] * rinv[j * p + i]).sum::<f64>()))
        .collect();
    let t_abs =
        beta.iter().zip(&standard_errors).map(|(b, se)| (*se > 0.0).then(|| (b / se).abs())).collect();

    let has_intercept = p > regressors;
    let centre = if has_intercept { y.iter().sum::<f64>() / n as f64 } else { 0.0 };
    let tss: f64 = y.iter().map(|v| (v - centre) * (v - centre)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };

    Ok(RegressionFit {
        response: String::new(),
        terms,
        coefficients: beta,
        standard_errors,
        t_abs,
        residuals,
        r_squared,
        rss,
        rows: Vec::new(),
        table_row_ids: Vec::new(),
    })
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

/// Per-ball mean residual and mean absolute residual.
pub fn residual_coloring(
    fit: &RegressionFit,
    cover: &Cover,
    cloud: &PointCloud,
) -> Result<(Coloring, Coloring)> {
    if cover.n_points != cloud.len() {
        return Err(Error::RowMismatch(format!(
            "cover spans {} points, cloud has {}",
            cover.n_points,
            cloud.len()
        )));
    }
    let by_row = fit.residuals_by_row();
    let ids: BTreeMap<&str, usize> =
        fit.table_row_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut values = Vec::with_capacity(cloud.len());
    for (&src, id) in cloud.source_rows().iter().zip(cloud.row_ids()) {
        match ids.get(id.as_str()) {
            Some(&row) if row == src => values.push(by_row[row]),
            _ => {
                return Err(Error::RowMismatch(format!(
                    "cloud row {id} is not row {src} of the fitted table"
                )))
            }
        }
    }
    let abs: Vec<Option<f64>> = values.iter().map(|v| v.map(f64::abs)).collect();
    Ok((
        Coloring::from_point_values("residual", cover, &values)?,
        Coloring::from_point_values("abs_residual", cover, &abs)?,
    ))
}
