//! Feasible GLS for panels with AR(1) errors within regions and
//! heteroskedasticity across regions.
//!
//! Each iteration takes the composite residuals `y − Xβ − μ_i`, estimates
//! the AR(1) coefficient from consecutive-year pairs, Prais-Winsten
//! transforms every region's rows (region dummies included), estimates the
//! per-region variances of the transformed residuals and refits by
//! weighted least squares. The variances share out the residual degrees of
//! freedom in proportion to each region's row count, so with ρ fixed at 0
//! and equal weights the covariance is exactly the classical OLS one. Iteration stops when the largest slope change
//! drops below `tol`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::design::{DesignMatrix, UsableRows};
use super::ols::{fit_ols_fe, r_squared_of};
use super::result::{CovarianceKind, EstimatorTag, FitResult, Inference, ResidualRow};
use crate::error::{Error, Result};
use crate::linalg::{least_squares, symmetrize};

const RHO_BOUND: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ar1Mode {
    /// One coefficient pooled across regions.
    Common,
    PanelSpecific,
    /// Held fixed, e.g. 0 to switch the correction off.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FglsConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub ar1: Ar1Mode,
    pub heteroskedastic: bool,
}

impl Default for FglsConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-8,
            ar1: Ar1Mode::Common,
            heteroskedastic: true,
        }
    }
}

/// FGLS with a common AR(1) coefficient and region-specific variances.
/// Non-convergence is not an error: the last iterate is returned with
/// `converged == false`.
pub fn fit_fgls_ar1_het(dm: &DesignMatrix, max_iter: usize, tol: f64) -> Result<FitResult> {
    fit_fgls(
        dm,
        &FglsConfig {
            max_iter,
            tol,
            ..FglsConfig::default()
        },
    )
}

pub fn fit_fgls(dm: &DesignMatrix, cfg: &FglsConfig) -> Result<FitResult> {
    let rows = dm.usable();
    let n_regions = dm.regions.len();
    let groups = rows.groups(n_regions);
    for (r, g) in groups.iter().enumerate() {
        if let Some((s, e)) = g {
            if e - s < 4 {
                return Err(Error::TooFewObservations(format!(
                    "region `{}` has {} usable periods, FGLS needs at least 4",
                    dm.regions[r],
                    e - s
                )));
            }
        }
    }
    if let Ar1Mode::Fixed(r) = cfg.ar1 {
        if !(r.abs() < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "fixed AR(1) coefficient {r} outside (-1, 1)"
            )));
        }
    }

    let start = fit_ols_fe(dm, false)?;
    let k = dm.n_columns();
    let active: Vec<usize> = (0..n_regions).filter(|&r| groups[r].is_some()).collect();
    let mut beta = DVector::from_vec(start.coefficients.clone());
    let mut effects: Vec<f64> = start.region_effects.iter().map(|m| m.unwrap_or(0.0)).collect();

    let n = rows.n();
    // consecutive-year predecessor within the same region
    let prev: Vec<Option<usize>> = (0..n)
        .map(|i| {
            if i > 0 && rows.region[i - 1] == rows.region[i] && rows.year[i - 1] + 1 == rows.year[i] {
                Some(i - 1)
            } else {
                None
            }
        })
        .collect();

    let mut names = dm.column_names.clone();
    names.extend(active.iter().map(|&r| format!("fe:{}", dm.regions[r])));

    let resid_dof = n.saturating_sub(k + active.len());
    let dof_scale = if resid_dof > 0 {
        n as f64 / resid_dof as f64
    } else {
        1.0
    };

    let mut converged = false;
    let mut iterations = 0;
    let mut rho_by_region = vec![0.0; n_regions];
    let mut sigma = vec![1.0; n_regions];
    let mut cov_full = DMatrix::zeros(k + active.len(), k + active.len());

    for it in 1..=cfg.max_iter.max(1) {
        iterations = it;
        let e = composite_residuals(&rows, &beta, &effects);
        rho_by_region = estimate_rho(&e, &prev, &rows, n_regions, cfg.ar1);

        // transformed design [X*, D*] and response y*
        let (xs, ys) = prais_winsten(&rows, &prev, &rho_by_region, &active);
        let coef = {
            let mut c = beta.iter().copied().collect::<Vec<_>>();
            c.extend(active.iter().map(|&r| effects[r]));
            DVector::from_vec(c)
        };
        let u = &ys - &xs * &coef;
        sigma = region_sigmas(&u, &rows, n_regions, cfg.heteroskedastic, dof_scale);

        let mut xw = xs;
        let mut yw = ys;
        for i in 0..n {
            let w = 1.0 / sigma[rows.region[i]];
            xw.row_mut(i).scale_mut(w);
            yw[i] *= w;
        }
        let ls = least_squares(&xw, &yw, &names)?;
        let new_beta = ls.beta.rows(0, k).into_owned();
        let change = (&new_beta - &beta).amax();
        beta = new_beta;
        for (j, &r) in active.iter().enumerate() {
            effects[r] = ls.beta[k + j];
        }
        cov_full = ls.xtx_inv;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "FGLS did not converge in {} iterations; returning last iterate",
            cfg.max_iter
        );
    }

    let mut covariance = cov_full.view((0, 0), (k, k)).into_owned();
    symmetrize(&mut covariance);
    let xb = &rows.x * &beta;
    let result_rows: Vec<ResidualRow> = (0..n)
        .map(|i| {
            let fitted = xb[i] + effects[rows.region[i]];
            ResidualRow {
                region: rows.region[i],
                year: rows.year[i],
                observed: rows.y[i],
                fitted,
                residual: rows.y[i] - fitted,
            }
        })
        .collect();
    let r_squared = r_squared_of(&result_rows);
    let region_effects = (0..n_regions).map(|r| groups[r].map(|_| effects[r])).collect();
    let rho = match cfg.ar1 {
        Ar1Mode::PanelSpecific => None,
        _ => Some(rho_by_region.first().copied().unwrap_or(0.0)),
    };

    Ok(FitResult {
        estimator: EstimatorTag::FglsAr1Het,
        covariance_kind: CovarianceKind::Fgls,
        response_name: dm.response_name.clone(),
        coefficient_names: dm.column_names.clone(),
        coefficients: beta.iter().copied().collect(),
        covariance,
        regions: dm.regions.clone(),
        region_effects,
        rows: result_rows,
        nobs: n,
        dof: n - k - active.len(),
        r_squared,
        inference: Inference::Normal,
        rho,
        rho_by_region: Some(rho_by_region),
        sigma_by_region: Some(sigma),
        iterations,
        converged,
    })
}

fn composite_residuals(rows: &UsableRows, beta: &DVector<f64>, effects: &[f64]) -> DVector<f64> {
    let xb = &rows.x * beta;
    DVector::from_fn(rows.n(), |i, _| rows.y[i] - xb[i] - effects[rows.region[i]])
}

fn estimate_rho(
    e: &DVector<f64>,
    prev: &[Option<usize>],
    rows: &UsableRows,
    n_regions: usize,
    mode: Ar1Mode,
) -> Vec<f64> {
    let clamp = |r: f64| {
        if r.is_finite() {
            r.clamp(-RHO_BOUND, RHO_BOUND)
        } else {
            0.0
        }
    };
    match mode {
        Ar1Mode::Fixed(r) => vec![r; n_regions],
        Ar1Mode::Common => {
            let (mut num, mut den) = (0.0, 0.0);
            for (i, p) in prev.iter().enumerate() {
                if let Some(p) = *p {
                    num += e[i] * e[p];
                    den += e[p] * e[p];
                }
            }
            vec![clamp(num / den); n_regions]
        }
        Ar1Mode::PanelSpecific => {
            let mut num = vec![0.0; n_regions];
            let mut den = vec![0.0; n_regions];
            for (i, p) in prev.iter().enumerate() {
                if let Some(p) = *p {
                    num[rows.region[i]] += e[i] * e[p];
                    den[rows.region[i]] += e[p] * e[p];
                }
            }
            (0..n_regions).map(|r| clamp(num[r] / den[r])).collect()
        }
    }
}

/// Prais-Winsten quasi-differencing of slopes and region dummies. Rows
/// without a consecutive predecessor get the `sqrt(1 − ρ²)` scaling.
fn prais_winsten(
    rows: &UsableRows,
    prev: &[Option<usize>],
    rho: &[f64],
    active: &[usize],
) -> (DMatrix<f64>, DVector<f64>) {
    let n = rows.n();
    let k = rows.x.ncols();
    let mut pos = vec![usize::MAX; rho.len()];
    for (j, &r) in active.iter().enumerate() {
        pos[r] = j;
    }
    let mut xs = DMatrix::zeros(n, k + active.len());
    let mut ys = DVector::zeros(n);
    for i in 0..n {
        let r = rows.region[i];
        let p = rho[r];
        match prev[i] {
            Some(q) => {
                for j in 0..k {
                    xs[(i, j)] = rows.x[(i, j)] - p * rows.x[(q, j)];
                }
                xs[(i, k + pos[r])] = 1.0 - p;
                ys[i] = rows.y[i] - p * rows.y[q];
            }
            None => {
                let s = (1.0 - p * p).sqrt();
                for j in 0..k {
                    xs[(i, j)] = s * rows.x[(i, j)];
                }
                xs[(i, k + pos[r])] = s;
                ys[i] = s * rows.y[i];
            }
        }
    }
    (xs, ys)
}

fn region_sigmas(u: &DVector<f64>, rows: &UsableRows, n_regions: usize, het: bool, dof_scale: f64) -> Vec<f64> {
    let mut ss = vec![0.0; n_regions];
    let mut cnt = vec![0usize; n_regions];
    for i in 0..rows.n() {
        ss[rows.region[i]] += u[i] * u[i];
        cnt[rows.region[i]] += 1;
    }
    let pooled = (dof_scale * ss.iter().sum::<f64>() / rows.n() as f64).sqrt();
    let mut out: Vec<f64> = if het {
        (0..n_regions)
            .map(|r| {
                if cnt[r] > 0 {
                    (dof_scale * ss[r] / cnt[r] as f64).sqrt()
                } else {
                    pooled
                }
            })
            .collect()
    } else {
        vec![pooled; n_regions]
    };
    // exact fits: fall back to unit weights / floor tiny variances
    let max = out.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) || !max.is_finite() {
        return vec![1.0; n_regions];
    }
    for s in &mut out {
        *s = s.max(max * 1e-6);
    }
    out
}
