//! Recursive-substitution oracle for the growth forecast, written against
//! plain log-level tables. It shares the fitted coefficients with the
//! forecast but none of its extrapolation or evaluation code.
#![allow(dead_code)]

use std::collections::HashMap;

use panel_ecm::estimators::FitResult;
use panel_ecm::forecast::{ForecastResult, ForecastScenario, NationalCoupling};
use panel_ecm::growth::GrowthEstimate;
use panel_ecm::longrun::LongRunEstimate;
use panel_ecm::panel::{vars, NationalSeries, PanelDataset};

pub struct OracleInputs<'a> {
    pub panel: &'a PanelDataset,
    pub estimate: &'a GrowthEstimate,
    pub longrun: Option<&'a LongRunEstimate>,
    pub national_unemp: &'a NationalSeries,
    pub national_empl: &'a NationalSeries,
    pub scenario: &'a ForecastScenario,
    /// Source of the extrapolation coefficients.
    pub forecast: &'a ForecastResult,
}

fn fe(fit: &FitResult, region: &str) -> f64 {
    let i = fit.regions.iter().position(|r| r == region).unwrap();
    fit.region_effects[i].unwrap()
}

fn coef(fit: &FitResult, name: &str) -> f64 {
    fit.coefficient(name).unwrap_or_else(|| panic!("no coefficient {name}"))
}

type Table = HashMap<(String, i32), f64>;

fn lag_term(logs: &Table, column: &str, year: i32) -> f64 {
    let (stem, lag) = column.rsplit_once("_l").unwrap();
    let lag: i32 = lag.parse().unwrap();
    let at = |v: &str, y: i32| {
        *logs
            .get(&(v.to_string(), y))
            .unwrap_or_else(|| panic!("{v} {y} missing"))
    };
    if let Some(v) = stem.strip_prefix("dlog_") {
        at(v, year - lag) - at(v, year - lag - 1)
    } else if let Some(v) = stem.strip_prefix("log_") {
        at(v, year - lag)
    } else {
        panic!("oracle does not handle column {column}")
    }
}

/// Percent growth per (region, year) for every horizon year.
pub fn oracle_forecast(x: &OracleInputs) -> HashMap<(String, i32), f64> {
    let p = x.panel;
    let sc = x.scenario;
    let cutoff = x.forecast.cutoff;
    let last = *sc.horizon_years.last().unwrap();
    let est = &x.estimate.fit;
    let mut out = HashMap::new();

    for (ri, region) in p.regions().iter().enumerate() {
        let mut logs: Table = HashMap::new();
        for v in p.variables() {
            for y in p.first_year()..=cutoff {
                if let Ok(Some(val)) = p.get(v, ri, y) {
                    logs.insert((v.to_string(), y), val.ln());
                }
            }
        }
        for year in cutoff + 1..=last {
            // regressors are extrapolated one year short of the horizon end
            if year < last {
                for e in &x.forecast.extrapolations {
                    let v = e.variable.as_str();
                    let value = if let Some(ar) = &e.ar {
                        let mut l = fe(&ar.fit, region);
                        for k in 1..=ar.order {
                            l += ar.ar_coefficient(k).unwrap() * logs[&(v.to_string(), year - k as i32)];
                        }
                        if let Some(c) = ar.coupling {
                            let nat = if v == vars::UNEMP {
                                x.national_unemp
                            } else {
                                x.national_empl
                            };
                            let g = match c {
                                NationalCoupling::Unit => 1.0,
                                NationalCoupling::Estimated => coef(&ar.fit, &format!("national_{}", nat.name)),
                            };
                            l += g * nat.get(year).unwrap() / 100.0;
                        }
                        l
                    } else if let Some(aux) = &e.aux {
                        let mut l = fe(&aux.fit, region);
                        for name in &aux.fit.coefficient_names {
                            l += coef(&aux.fit, name) * lag_term(&logs, name, year);
                        }
                        l
                    } else {
                        assert_eq!(v, vars::BF);
                        let f = sc.funds.iter().find(|f| &f.region == region && f.year == year).unwrap();
                        let funds = f.traditional + sc.returns_discount * f.disruptive;
                        (1000.0 * funds).ln() - logs[&(vars::EMPL.to_string(), year)]
                    };
                    logs.insert((v.to_string(), year), value);
                }
            }
            let national = sc.national_growth.iter().find(|n| n.year == year).unwrap().value;
            let factor = if year == last {
                sc.rebound_discount * national
            } else {
                national
            };
            let mut g = fe(est, region);
            for (name, b) in est.coefficient_names.iter().zip(&est.coefficients) {
                let term = if name == "F" || *name == format!("F_x_{region}") {
                    factor / 100.0
                } else if name.starts_with("F_x_") {
                    0.0
                } else if let Some(lag) = name.strip_prefix("ec_l") {
                    let lag: i32 = lag.parse().unwrap();
                    x.longrun.unwrap().ec_at(ri, year - lag).unwrap()
                } else {
                    lag_term(&logs, name, year)
                };
                g += b * term;
            }
            let prev = logs[&(vars::GDP.to_string(), year - 1)];
            logs.insert((vars::GDP.to_string(), year), prev + g);
            out.insert((region.clone(), year), 100.0 * g);
        }
    }
    out
}

use panel_ecm::estimators::CovarianceKind;
use panel_ecm::forecast::{forecast_growth, ForecastInputs};
use panel_ecm::growth::{build_growth_design, fit_growth, CommonFactor, EstimatorChoice, GrowthModelSpec, ShortRunVar};
use panel_ecm::longrun::{fit_longrun, LongRunSpec};
use panel_ecm::synthetic::{generate, DgpConfig, SyntheticPanel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A forecast drawn with random discounts, estimators, factor structure,
/// national coupling and (sometimes) a lagged GDP growth regressor.
pub struct OracleCase {
    pub synthetic: SyntheticPanel,
    pub longrun: LongRunEstimate,
    pub estimate: GrowthEstimate,
    pub scenario: ForecastScenario,
    pub forecast: ForecastResult,
}

pub fn oracle_case(seed: u64) -> OracleCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let synthetic = generate(&DgpConfig::finland_like(seed)).unwrap();
    let longrun = fit_longrun(&synthetic.panel, &LongRunSpec::default()).unwrap();
    let mut spec = GrowthModelSpec::default();
    if rng.gen_bool(0.5) {
        spec.estimator = EstimatorChoice::OlsFe {
            covariance: CovarianceKind::Classical,
        };
    }
    if rng.gen_bool(0.3) {
        spec.common_factor = CommonFactor::Homogeneous;
    }
    if rng.gen_bool(0.4) {
        spec.short_run.push(ShortRunVar::log_diff(vars::GDP, 1));
    }
    let dm = build_growth_design(
        &synthetic.panel,
        Some(&longrun),
        Some(&synthetic.national_growth),
        &spec,
    )
    .unwrap();
    let estimate = fit_growth(&dm, &spec).unwrap();
    let c = rng.gen_range(0.2..=1.0);
    let r = rng.gen_range(0.2..=1.0);
    let mut scenario =
        ForecastScenario::rebound("oracle", &synthetic.national_growth, synthetic.funding.clone(), c, r).unwrap();
    if rng.gen_bool(0.5) {
        scenario.national_coupling = NationalCoupling::Unit;
    }
    if rng.gen_bool(0.5) {
        scenario.aux_estimator = EstimatorChoice::OlsFe {
            covariance: CovarianceKind::Classical,
        };
    }
    let inputs = ForecastInputs {
        panel: &synthetic.panel,
        estimate: &estimate,
        longrun: Some(&longrun),
        national_unemp: Some(&synthetic.national_unemp),
        national_empl: Some(&synthetic.national_empl),
    };
    let forecast = forecast_growth(&inputs, &scenario).unwrap();
    OracleCase {
        synthetic,
        longrun,
        estimate,
        scenario,
        forecast,
    }
}

/// Largest absolute gap, in percentage points, between the forecast and
/// the oracle over all regions and horizon years.
pub fn oracle_gap(case: &OracleCase) -> f64 {
    let want = oracle_forecast(&OracleInputs {
        panel: &case.synthetic.panel,
        estimate: &case.estimate,
        longrun: Some(&case.longrun),
        national_unemp: &case.synthetic.national_unemp,
        national_empl: &case.synthetic.national_empl,
        scenario: &case.scenario,
        forecast: &case.forecast,
    });
    assert_eq!(want.len(), case.forecast.rows.len());
    case.forecast
        .rows
        .iter()
        .map(|r| (r.growth_pct - want[&(r.region.clone(), r.year)]).abs())
        .fold(0.0, f64::max)
}
