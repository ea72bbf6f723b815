//! Fixed-effects OLS through the within transformation.

use nalgebra::{DMatrix, DVector};

use super::design::{DesignMatrix, UsableRows};
use super::result::{CovarianceKind, EstimatorTag, FitResult, Inference, ResidualRow};
use crate::error::{Error, Result};
use crate::linalg::{correlation, least_squares, symmetrize};

/// Subtracts per-region means from `y` and every column of `x`.
pub(crate) fn demean(rows: &UsableRows, n_regions: usize) -> (DVector<f64>, DMatrix<f64>) {
    let mut y = rows.y.clone();
    let mut x = rows.x.clone();
    for (s, e) in rows.groups(n_regions).into_iter().flatten() {
        let len = (e - s) as f64;
        let my = y.rows(s, e - s).sum() / len;
        y.rows_mut(s, e - s).add_scalar_mut(-my);
        for j in 0..x.ncols() {
            let mx = x.view((s, j), (e - s, 1)).sum() / len;
            x.view_mut((s, j), (e - s, 1)).add_scalar_mut(-mx);
        }
    }
    (y, x)
}

/// Fixed-effects OLS. `robust` selects region-clustered covariance,
/// otherwise the classical one.
pub fn fit_ols_fe(dm: &DesignMatrix, robust: bool) -> Result<FitResult> {
    let kind = if robust {
        CovarianceKind::Clustered
    } else {
        CovarianceKind::Classical
    };
    fit_ols_fe_with(dm, kind)
}

pub fn fit_ols_fe_with(dm: &DesignMatrix, kind: CovarianceKind) -> Result<FitResult> {
    let rows = dm.usable();
    let n_regions = dm.regions.len();
    let groups = rows.groups(n_regions);
    for (r, g) in groups.iter().enumerate() {
        if let Some((s, e)) = g {
            if e - s < 2 {
                return Err(Error::TooFewObservations(format!(
                    "region `{}` has {} usable row(s), fixed effects need at least 2",
                    dm.regions[r],
                    e - s
                )));
            }
        }
    }
    let n = rows.n();
    let k = dm.n_columns();
    let n_groups = groups.iter().flatten().count();
    if n <= k + n_groups {
        return Err(Error::TooFewObservations(format!(
            "{n} usable rows for {k} slopes and {n_groups} region effects"
        )));
    }

    let (yd, xd) = demean(&rows, n_regions);
    let ls = least_squares(&xd, &yd, &dm.column_names)?;
    let beta = ls.beta;
    let resid = &yd - &xd * &beta;

    // region effects from the untransformed data
    let xb = &rows.x * &beta;
    let mut effects = vec![None; n_regions];
    for (r, g) in groups.iter().enumerate() {
        if let Some((s, e)) = *g {
            let m = (s..e).map(|i| rows.y[i] - xb[i]).sum::<f64>() / (e - s) as f64;
            effects[r] = Some(m);
        }
    }

    let dof = n - k - n_groups;
    let ssr = resid.norm_squared();
    let bread = &ls.xtx_inv;
    let mut covariance = match kind {
        CovarianceKind::Classical | CovarianceKind::Fgls => bread * (ssr / dof as f64),
        CovarianceKind::Hc1 => {
            let mut meat = DMatrix::zeros(k, k);
            for i in 0..n {
                let xi = xd.row(i).transpose();
                meat += &xi * xi.transpose() * resid[i].powi(2);
            }
            bread * meat * bread * (n as f64 / dof as f64)
        }
        CovarianceKind::Clustered => {
            let mut meat = DMatrix::zeros(k, k);
            for (s, e) in groups.iter().flatten() {
                let score = xd.rows(*s, e - s).transpose() * resid.rows(*s, e - s);
                meat += &score * score.transpose();
            }
            let g = n_groups as f64;
            let adj = g / (g - 1.0) * (n as f64 - 1.0) / (n - k) as f64;
            bread * meat * bread * adj
        }
    };
    symmetrize(&mut covariance);
    let inference = match kind {
        CovarianceKind::Clustered => Inference::StudentT {
            dof: (n_groups.max(2) - 1) as f64,
        },
        _ => Inference::StudentT { dof: dof as f64 },
    };

    let result_rows: Vec<ResidualRow> = (0..n)
        .map(|i| {
            let fitted = xb[i] + effects[rows.region[i]].unwrap();
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

    Ok(FitResult {
        estimator: EstimatorTag::OlsFe,
        covariance_kind: if kind == CovarianceKind::Fgls {
            CovarianceKind::Classical
        } else {
            kind
        },
        response_name: dm.response_name.clone(),
        coefficient_names: dm.column_names.clone(),
        coefficients: beta.iter().copied().collect(),
        covariance,
        regions: dm.regions.clone(),
        region_effects: effects,
        rows: result_rows,
        nobs: n,
        dof,
        r_squared,
        inference,
        rho: None,
        rho_by_region: None,
        sigma_by_region: None,
        iterations: 1,
        converged: true,
    })
}

/// Squared correlation between fitted and observed response.
pub(crate) fn r_squared_of(rows: &[ResidualRow]) -> f64 {
    let obs: Vec<f64> = rows.iter().map(|r| r.observed).collect();
    let fit: Vec<f64> = rows.iter().map(|r| r.fitted).collect();
    let c = correlation(&obs, &fit);
    if c.is_finite() {
        c * c
    } else {
        // constant fitted values (no slopes, one region) or a perfect constant response
        if rows.iter().all(|r| r.residual == 0.0) {
            1.0
        } else {
            0.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::least_squares;
    use proptest::prelude::*;

    /// 2 regions × 4 years.
    fn fixture() -> DesignMatrix {
        let regions = vec!["A".to_string(), "B".to_string()];
        let row_region = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let row_year = vec![2000, 2001, 2002, 2003, 2000, 2001, 2002, 2003];
        let y = vec![1.0, 2.5, 2.0, 4.0, 10.0, 11.0, 13.5, 12.0];
        let x = vec![0.5, 1.0, 1.5, 3.0, 2.0, 2.5, 4.0, 3.0];
        let mut dm = DesignMatrix::new(regions, row_region, row_year, "y", y.into_iter().map(Some).collect()).unwrap();
        dm.push_column("x", x.into_iter().map(Some).collect()).unwrap();
        dm
    }

    /// OLS on [x, region dummies] without any demeaning.
    fn dummy_ols(dm: &DesignMatrix) -> Vec<f64> {
        let rows = dm.usable();
        let k = dm.n_columns();
        let g = dm.regions.len();
        let x = DMatrix::from_fn(rows.n(), k + g, |i, j| {
            if j < k {
                rows.x[(i, j)]
            } else if rows.region[i] == j - k {
                1.0
            } else {
                0.0
            }
        });
        let names: Vec<String> = (0..k + g).map(|j| format!("c{j}")).collect();
        least_squares(&x, &rows.y, &names)
            .unwrap()
            .beta
            .iter()
            .copied()
            .collect()
    }

    #[test]
    fn hand_solved_normal_equations() {
        // demeaned x: A: [-1, -.5, 0, 1.5]  B: [-.875, -.375, 1.125, .125]
        // demeaned y: A: [-1.375, .125, -.375, 1.625]  B: [-1.625, -.625, 1.875, .375]
        // Sxx = 3.5 + 2.1875 = 5.6875 ; Sxy = 3.75 + 3.8125 = 7.5625
        let fit = fit_ols_fe(&fixture(), false).unwrap();
        let expect = 7.5625 / 5.6875;
        assert!((fit.coefficients[0] - expect).abs() < 1e-12);
        let dummies = dummy_ols(&fixture());
        assert!((fit.coefficients[0] - dummies[0]).abs() < 1e-12);
        assert!((fit.region_effects[0].unwrap() - dummies[1]).abs() < 1e-12);
        assert!((fit.region_effects[1].unwrap() - dummies[2]).abs() < 1e-12);
        assert_eq!(fit.dof, 8 - 1 - 2);
    }

    #[test]
    fn exact_linear_data() {
        let mut dm = fixture();
        let x: Vec<f64> = dm.columns[0].iter().map(|v| v.unwrap()).collect();
        dm.response = x
            .iter()
            .zip(&dm.row_region)
            .map(|(x, &r)| Some(2.0 * x + if r == 0 { -3.0 } else { 7.0 }))
            .collect();
        let fit = fit_ols_fe(&dm, true).unwrap();
        assert!((fit.coefficients[0] - 2.0).abs() < 1e-10);
        assert!(fit.rows.iter().all(|r| r.residual.abs() < 1e-10));
        assert!((fit.region_effects[0].unwrap() + 3.0).abs() < 1e-10);
    }

    #[test]
    fn rank_deficiency_names_columns() {
        let mut dm = fixture();
        let x2: Vec<Option<f64>> = dm.columns[0].iter().map(|v| v.map(|x| 3.0 * x)).collect();
        dm.push_column("x_times_3", x2).unwrap();
        match fit_ols_fe(&dm, false).unwrap_err() {
            Error::RankDeficient { columns } => assert_eq!(columns.len(), 1),
            e => panic!("unexpected {e}"),
        }
        // a region-constant regressor is absorbed by the fixed effects
        let mut dm = fixture();
        dm.push_column(
            "const_by_region",
            dm.row_region.iter().map(|&r| Some(r as f64 + 1.0)).collect(),
        )
        .unwrap();
        match fit_ols_fe(&dm, false).unwrap_err() {
            Error::RankDeficient { columns } => assert_eq!(columns, vec!["const_by_region".to_string()]),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn too_few_rows_per_region() {
        let dm = fixture().select_rows(&[0, 1, 2, 4]);
        assert!(matches!(fit_ols_fe(&dm, false), Err(Error::TooFewObservations(_))));
    }

    #[test]
    fn missing_cells_are_masked() {
        let mut dm = fixture();
        dm.columns[0][3] = None;
        let fit = fit_ols_fe(&dm, false).unwrap();
        assert_eq!(fit.nobs, 7);
        let expect = fit_ols_fe(&fixture().select_rows(&[0, 1, 2, 4, 5, 6, 7]), false).unwrap();
        assert_eq!(fit.coefficients, expect.coefficients);
    }

    #[test]
    fn r_squared_matches_anova_for_ols_fe() {
        let fit = fit_ols_fe(&fixture(), false).unwrap();
        let ybar = fit.rows.iter().map(|r| r.observed).sum::<f64>() / fit.nobs as f64;
        let sst: f64 = fit.rows.iter().map(|r| (r.observed - ybar).powi(2)).sum();
        let anova = 1.0 - fit.residual_ssr() / sst;
        assert!((fit.r_squared - anova).abs() < 1e-12);
    }

    fn random_design(seed: u64, n_regions: usize, t: usize, k: usize) -> DesignMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let regions: Vec<String> = (0..n_regions).map(|i| format!("R{i}")).collect();
        let mut rr = Vec::new();
        let mut yy = Vec::new();
        for r in 0..n_regions {
            for s in 0..t {
                rr.push(r);
                yy.push(2000 + s as i32);
            }
        }
        let n = rr.len();
        let y: Vec<Option<f64>> = (0..n).map(|i| Some(rng.gen_range(-1.0..1.0) + rr[i] as f64)).collect();
        let mut dm = DesignMatrix::new(regions, rr, yy, "y", y).unwrap();
        for j in 0..k {
            let col: Vec<Option<f64>> = (0..n).map(|_| Some(rng.gen_range(-2.0..2.0))).collect();
            dm.push_column(format!("x{j}"), col).unwrap();
        }
        dm
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn within_equals_dummy_ols(seed in any::<u64>(), n_regions in 2usize..6, t in 4usize..9, k in 1usize..4) {
            let dm = random_design(seed, n_regions, t, k);
            let fit = fit_ols_fe(&dm, false).unwrap();
            let d = dummy_ols(&dm);
            for j in 0..k {
                prop_assert!((fit.coefficients[j] - d[j]).abs() < 1e-10);
            }
        }

        #[test]
        fn demeaned_columns_sum_to_zero(seed in any::<u64>()) {
            let dm = random_design(seed, 4, 6, 3);
            let rows = dm.usable();
            let (_, xd) = demean(&rows, 4);
            for (s, e) in rows.groups(4).into_iter().flatten() {
                for j in 0..3 {
                    prop_assert!(xd.view((s, j), (e - s, 1)).sum().abs() < 1e-10);
                }
            }
        }

        #[test]
        fn residuals_orthogonal_to_within_regressors(seed in any::<u64>()) {
            let dm = random_design(seed, 5, 7, 3);
            let fit = fit_ols_fe(&dm, true).unwrap();
            let rows = dm.usable();
            let (_, xd) = demean(&rows, 5);
            for j in 0..3 {
                let col = xd.column(j);
                let norm = col.norm();
                let dot: f64 = fit.rows.iter().enumerate().map(|(i, r)| r.residual * col[i]).sum();
                prop_assert!((dot / norm).abs() < 1e-8);
            }
        }

        #[test]
        fn response_scaling(seed in any::<u64>(), s in 0.1f64..10.0) {
            let dm = random_design(seed, 4, 6, 2);
            let mut scaled = dm.clone();
            scaled.response = dm.response.iter().map(|v| v.map(|y| y * s)).collect();
            for robust in [false, true] {
                let a = fit_ols_fe(&dm, robust).unwrap();
                let b = fit_ols_fe(&scaled, robust).unwrap();
                for j in 0..2 {
                    prop_assert!((b.coefficients[j] - s * a.coefficients[j]).abs() < 1e-9 * (1.0 + a.coefficients[j].abs() * s));
                    for l in 0..2 {
                        let expect = s * s * a.covariance[(j, l)];
                        prop_assert!((b.covariance[(j, l)] - expect).abs() < 1e-9 * (1.0 + expect.abs()));
                    }
                }
            }
        }

        #[test]
        fn covariance_is_symmetric_psd(seed in any::<u64>()) {
            let dm = random_design(seed, 5, 6, 3);
            for kind in [CovarianceKind::Classical, CovarianceKind::Hc1, CovarianceKind::Clustered] {
                let fit = fit_ols_fe_with(&dm, kind).unwrap();
                let c = &fit.covariance;
                prop_assert!((c - c.transpose()).norm() < 1e-12);
                let min_eig = c.clone().symmetric_eigen().eigenvalues.min();
                prop_assert!(min_eig > -1e-8);
            }
        }
    }
}
