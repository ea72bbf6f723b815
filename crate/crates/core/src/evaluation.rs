//! Goodness-of-fit against the panel AR(4) growth benchmark, and the
//! Monte Carlo driver used by the calibration checks.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{CovarianceKind, FitResult};
use crate::growth::{
    build_growth_design, ec_column, fit_growth, CommonFactor, EstimatorChoice, GrowthEstimate, GrowthModelSpec,
    ShortRunVar,
};
use crate::linalg::correlation;
use crate::longrun::{fit_longrun, pedroni_pp_test, AdjustmentTable, Bandwidth, LongRunSpec, PpVariant};
use crate::panel::{vars, PanelDataset};
use crate::synthetic::{cointegration_panel, generate, DgpConfig, LevelsResidual};

/// Lags of the benchmark autoregression.
pub const BENCHMARK_LAGS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Squared correlation of fitted and observed growth on the common rows.
    pub r_squared: f64,
    /// In percentage points of growth.
    pub rmse: f64,
    pub relative_rmse: f64,
    pub benchmark_rmse: f64,
}

/// Δlog GDP on its own first four lags with region effects, plain OLS.
pub fn benchmark_spec(window: Option<(i32, i32)>) -> GrowthModelSpec {
    GrowthModelSpec {
        short_run: (1..=BENCHMARK_LAGS)
            .map(|l| ShortRunVar::log_diff(vars::GDP, l))
            .collect(),
        common_factor: CommonFactor::None,
        ec_lag: None,
        window,
        estimator: EstimatorChoice::OlsFe {
            covariance: CovarianceKind::Classical,
        },
        ..GrowthModelSpec::default()
    }
}

pub fn fit_benchmark(ds: &PanelDataset, window: Option<(i32, i32)>) -> Result<FitResult> {
    let spec = benchmark_spec(window);
    let dm = build_growth_design(ds, None, None, &spec)?;
    Ok(fit_growth(&dm, &spec)?.fit)
}

/// Compares a fitted growth model with the AR(4) benchmark estimated on
/// the same panel and window. Both RMSEs are taken over the region-years
/// the two fits share.
pub fn relative_rmse(model: &GrowthEstimate, ds: &PanelDataset) -> Result<EvalReport> {
    let bench = fit_benchmark(ds, model.spec.window)?;
    evaluate_fits(&model.fit, &bench)
}

pub fn evaluate_fits(model: &FitResult, benchmark: &FitResult) -> Result<EvalReport> {
    let key = |f: &FitResult, r: usize, y: i32| (f.regions[r].clone(), y);
    let bench: HashMap<(String, i32), f64> = benchmark
        .rows
        .iter()
        .map(|r| (key(benchmark, r.region, r.year), r.residual))
        .collect();
    let (mut obs, mut fitted, mut ss_m, mut ss_b) = (Vec::new(), Vec::new(), 0.0, 0.0);
    for row in &model.rows {
        if let Some(b) = bench.get(&key(model, row.region, row.year)) {
            obs.push(row.observed);
            fitted.push(row.fitted);
            ss_m += (100.0 * row.residual).powi(2);
            ss_b += (100.0 * b).powi(2);
        }
    }
    if obs.is_empty() {
        return Err(Error::WindowMismatch(
            "model and benchmark share no region-year rows".into(),
        ));
    }
    let n = obs.len() as f64;
    let rmse = (ss_m / n).sqrt();
    let benchmark_rmse = (ss_b / n).sqrt();
    let c = correlation(&obs, &fitted);
    Ok(EvalReport {
        r_squared: if c.is_finite() { c * c } else { 0.0 },
        rmse,
        relative_rmse: rmse / benchmark_rmse,
        benchmark_rmse,
    })
}

/// Seed of replication `rep` under `master`.
pub fn replicate_seed(master: u64, rep: u64) -> u64 {
    master.wrapping_add(rep.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Runs `f(rep, seed)` for every replication in parallel; results come
/// back in replication order, so reductions are deterministic.
pub fn monte_carlo<T, F>(reps: usize, master: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync + Send,
{
    (0..reps)
        .into_par_iter()
        .map(|rep| f(rep, replicate_seed(master, rep as u64)))
        .collect()
}

/// True BF coefficient and error-correction speed of the recovery design.
pub const RECOVERY_BETA_BF: f64 = 0.010;
pub const RECOVERY_PHI: f64 = -0.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryDraw {
    pub beta_bf: f64,
    pub phi: f64,
    /// Whether the 95% interval contains the true value.
    pub beta_bf_covered: bool,
    pub phi_covered: bool,
}

/// One finland_like panel with β_BF and φ set to the recovery values,
/// the ec estimated from the long-run equation, and the growth equation
/// fitted by OLS-FE with region-clustered errors.
pub fn recovery_draw(seed: u64) -> Result<RecoveryDraw> {
    let mut cfg = DgpConfig::finland_like(seed);
    cfg.beta[5] = RECOVERY_BETA_BF;
    cfg.phi = RECOVERY_PHI;
    let s = generate(&cfg)?;
    let lr = fit_longrun(&s.panel, &LongRunSpec::default())?;
    let spec = GrowthModelSpec::table_column(4)?;
    let dm = build_growth_design(&s.panel, Some(&lr), Some(&s.national_growth), &spec)?;
    let fit = fit_growth(&dm, &spec)?.fit;
    let bf = spec
        .short_run
        .iter()
        .find(|v| v.variable == vars::BF)
        .map(ShortRunVar::column_name)
        .ok_or_else(|| Error::UnknownCoefficient("BF".into()))?;
    let ec = ec_column(spec.ec_lag.unwrap_or(3));
    let ci = |name: &str| {
        fit.confidence_interval(name, 0.95)
            .ok_or_else(|| Error::UnknownCoefficient(name.to_string()))
    };
    let ((bl, bh), (pl, ph)) = (ci(&bf)?, ci(&ec)?);
    Ok(RecoveryDraw {
        beta_bf: fit.coefficient(&bf).unwrap(),
        phi: fit.coefficient(&ec).unwrap(),
        beta_bf_covered: bl <= RECOVERY_BETA_BF && RECOVERY_BETA_BF <= bh,
        phi_covered: pl <= RECOVERY_PHI && RECOVERY_PHI <= ph,
    })
}

/// Relative RMSE of the factor + ec model (reference column 5) on one
/// finland_like panel.
pub fn relative_rmse_draw(seed: u64) -> Result<EvalReport> {
    let s = generate(&DgpConfig::finland_like(seed))?;
    let lr = fit_longrun(&s.panel, &LongRunSpec::default())?;
    let spec = GrowthModelSpec::table_column(5)?;
    let dm = build_growth_design(&s.panel, Some(&lr), Some(&s.national_growth), &spec)?;
    relative_rmse(&fit_growth(&dm, &spec)?, &s.panel)
}

/// p-value of the loading-equality Wald test on one finland_like panel
/// whose loadings are spaced over `lambda_range`. The growth equation is
/// the factor + ec model fitted with `estimator`.
pub fn wald_draw(seed: u64, lambda_range: (f64, f64), estimator: EstimatorChoice) -> Result<f64> {
    let mut cfg = DgpConfig::finland_like(seed);
    cfg.lambda_range = lambda_range;
    let s = generate(&cfg)?;
    let lr = fit_longrun(&s.panel, &LongRunSpec::default())?;
    let spec = GrowthModelSpec {
        estimator,
        ..GrowthModelSpec::table_column(4)?
    };
    let dm = build_growth_design(&s.panel, Some(&lr), Some(&s.national_growth), &spec)?;
    let est = fit_growth(&dm, &spec)?;
    est.wald_equal_loadings
        .map(|w| w.p_value)
        .ok_or_else(|| Error::TestInapplicable("loading-equality test unavailable".into()))
}

/// Whether the panel PP test rejects no-cointegration at 5% on one
/// 18 × 24 levels panel with the given equilibrium error.
pub fn cointegration_draw(seed: u64, residual: LevelsResidual, table: &AdjustmentTable) -> Result<bool> {
    let ds = cointegration_panel(seed, 18, 24, residual)?;
    let lr = fit_longrun(&ds, &LongRunSpec::default())?;
    Ok(pedroni_pp_test(&lr, Bandwidth::Automatic, PpVariant::Panel, table)?.decision_at_5pct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit_ols_fe_with;
    use proptest::prelude::*;

    #[test]
    fn benchmark_against_itself_is_exactly_one() {
        let s = generate(&DgpConfig::finland_like(5)).unwrap();
        let spec = benchmark_spec(None);
        let dm = build_growth_design(&s.panel, None, None, &spec).unwrap();
        let est = fit_growth(&dm, &spec).unwrap();
        let rep = relative_rmse(&est, &s.panel).unwrap();
        assert_eq!(rep.relative_rmse, 1.0);
        assert_eq!(rep.rmse, rep.benchmark_rmse);
    }

    #[test]
    fn zero_slope_model_never_beats_benchmark() {
        // region means only: nested in the benchmark, so its in-sample
        // error on any common rows is at least the benchmark's
        for seed in 0..5 {
            let s = generate(&DgpConfig::finland_like(seed)).unwrap();
            let lr = fit_longrun(&s.panel, &LongRunSpec::default()).unwrap();
            let spec = GrowthModelSpec::default();
            let dm = build_growth_design(&s.panel, Some(&lr), Some(&s.national_growth), &spec).unwrap();
            let mut est = fit_growth(&dm, &spec).unwrap();
            let rows = &mut est.fit.rows;
            let regions = est.fit.regions.len();
            for r in 0..regions {
                let ys: Vec<f64> = rows.iter().filter(|w| w.region == r).map(|w| w.observed).collect();
                let m = ys.iter().sum::<f64>() / ys.len() as f64;
                for w in rows.iter_mut().filter(|w| w.region == r) {
                    w.fitted = m;
                    w.residual = w.observed - m;
                }
            }
            let rep = relative_rmse(&est, &s.panel).unwrap();
            assert!(rep.relative_rmse >= 1.0, "seed {seed}: {}", rep.relative_rmse);
        }
    }

    #[test]
    fn relative_rmse_is_ratio_of_rmses() {
        let s = generate(&DgpConfig::finland_like(9)).unwrap();
        let lr = fit_longrun(&s.panel, &LongRunSpec::default()).unwrap();
        let spec = GrowthModelSpec::default();
        let dm = build_growth_design(&s.panel, Some(&lr), Some(&s.national_growth), &spec).unwrap();
        let est = fit_growth(&dm, &spec).unwrap();
        let rep = relative_rmse(&est, &s.panel).unwrap();
        assert_eq!(rep.relative_rmse, rep.rmse / rep.benchmark_rmse);
        // the model sample starts earlier than the benchmark's
        let bench = fit_benchmark(&s.panel, None).unwrap();
        assert!(est.fit.rows.len() > bench.rows.len());
        assert!(rep.relative_rmse < 1.0);
    }

    #[test]
    fn disjoint_windows_are_a_mismatch() {
        let s = generate(&DgpConfig::finland_like(2)).unwrap();
        let a = fit_benchmark(&s.panel, Some((2000, 2008))).unwrap();
        let b = fit_benchmark(&s.panel, Some((2010, 2018))).unwrap();
        assert!(matches!(evaluate_fits(&a, &b), Err(Error::WindowMismatch(_))));
    }

    #[test]
    fn monte_carlo_is_ordered_and_reproducible() {
        let a = monte_carlo(16, 7, |rep, seed| (rep, seed));
        let b = monte_carlo(16, 7, |rep, seed| (rep, seed));
        assert_eq!(a, b);
        assert!(a.iter().enumerate().all(|(i, (r, _))| *r == i));
        assert_eq!(a[0].1, 7);
        assert_ne!(a[1].1, a[2].1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        // with region intercepts, squared correlation and 1 − SSR/SST agree
        #[test]
        fn r_squared_definitions_agree_for_ols_fe(seed in 0u64..1000) {
            let s = generate(&DgpConfig::minimal(seed)).unwrap();
            let spec = benchmark_spec(None);
            let dm = build_growth_design(&s.panel, None, None, &GrowthModelSpec {
                short_run: vec![ShortRunVar::log_diff(vars::GDP, 1)],
                ..spec
            }).unwrap();
            let fit = fit_ols_fe_with(&dm, CovarianceKind::Classical).unwrap();
            let ybar = fit.rows.iter().map(|r| r.observed).sum::<f64>() / fit.rows.len() as f64;
            let sst: f64 = fit.rows.iter().map(|r| (r.observed - ybar).powi(2)).sum();
            let anova = 1.0 - fit.residual_ssr() / sst;
            prop_assert!((fit.r_squared - anova).abs() < 1e-10);
        }
    }
}
