//! Least-squares kernel shared by every estimator.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative pivot tolerance for the rank check.
pub const RANK_TOL: f64 = 1e-10;

pub struct LeastSquares {
    pub beta: DVector<f64>,
    /// (X'X)^{-1}
    pub xtx_inv: DMatrix<f64>,
}

/// Column indices that are (numerically) linear combinations of earlier
/// pivots. Columns are scaled to unit norm first so the check does not
/// depend on units.
pub fn collinear_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let k = x.ncols();
    if k == 0 {
        return Vec::new();
    }
    let mut scaled = x.clone();
    let mut zero = Vec::new();
    for j in 0..k {
        let norm = scaled.column(j).norm();
        if norm == 0.0 || !norm.is_finite() {
            zero.push(j);
        } else {
            scaled.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    if !zero.is_empty() {
        return zero;
    }
    if x.nrows() < k {
        // fewer rows than columns: everything past the row count is dependent
        return (x.nrows()..k).collect();
    }
    let qr = scaled.col_piv_qr();
    let r = qr.r();
    let mut order = DMatrix::<f64>::from_fn(1, k, |_, j| j as f64);
    qr.p().permute_columns(&mut order);
    let lead = r[(0, 0)].abs();
    (0..k)
        .filter(|&j| r[(j, j)].abs() <= RANK_TOL * lead)
        .map(|j| order[(0, j)] as usize)
        .collect()
}

/// OLS of `y` on `x` with a rank check; `names` label the columns in errors.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<LeastSquares> {
    let bad = collinear_columns(x);
    if !bad.is_empty() {
        let mut columns: Vec<String> = bad
            .iter()
            .map(|&j| names.get(j).cloned().unwrap_or_else(|| format!("x{j}")))
            .collect();
        columns.sort();
        return Err(Error::RankDeficient { columns });
    }
    let k = x.ncols();
    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * y;
    let beta = r.solve_upper_triangular(&qty).ok_or_else(|| Error::RankDeficient {
        columns: names.to_vec(),
    })?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::RankDeficient {
            columns: names.to_vec(),
        })?;
    let xtx_inv = &r_inv * r_inv.transpose();
    Ok(LeastSquares { beta, xtx_inv })
}

/// Inverse of a symmetric positive definite matrix, `None` if it is not
/// numerically positive definite.
pub fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min <= 1e-12 * max {
        return None;
    }
    sym.cholesky().map(|c| c.inverse())
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n−1 divisor); 0 for fewer than two values.
pub fn sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let ma = mean(a);
    let mb = mean(b);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
