//! Out-of-sample growth forecasts. Regional regressors are extrapolated
//! past the last observed year by per-variable rules, then the growth
//! equation is evaluated year by year and GDP levels are chained forward.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{fit_ols_fe_with, CovarianceKind, DesignMatrix, FitResult};
use crate::growth::{
    ec_column, factor_column, fit_aux, lag_aligned, AuxEstimate, AuxModelSpec, EstimatorChoice, GrowthEstimate,
    ShortRunVar, FACTOR_COLUMN,
};
use crate::linalg::{mean, sd};
use crate::longrun::LongRunEstimate;
use crate::panel::{vars, NationalSeries, PanelDataset, TransformKind, TransformTag};

pub const MAX_AR_ORDER: usize = 4;

/// Funds granted to a region in one year, in the units of `BF_FUNDS`,
/// split by program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundingRow {
    pub region: String,
    pub year: i32,
    pub traditional: f64,
    pub disruptive: f64,
}

impl FundingRow {
    pub fn total(&self) -> f64 {
        self.traditional + self.disruptive
    }

    /// Funds with the disruptive program weighted by the returns discount.
    pub fn effective(&self, r: f64) -> f64 {
        self.traditional + r * self.disruptive
    }

    pub fn disruptive_share(&self) -> f64 {
        let t = self.total();
        if t > 0.0 {
            self.disruptive / t
        } else {
            0.0
        }
    }
}

/// BF intensity (EUR per employee) from funds (million EUR) and employment
/// (thousand persons).
pub fn bf_intensity(funds: f64, empl: f64) -> f64 {
    1000.0 * funds / empl
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NationalCoupling {
    /// The national log change enters as a regressor.
    #[default]
    Estimated,
    /// The national log change is added with coefficient one.
    Unit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum ExtrapolationRule {
    /// Log level on up to four own lags with region effects.
    Ar4,
    /// `Ar4` plus the same year's national change (a percent log change).
    Ar4National {
        national: NationalSeries,
        #[serde(default)]
        coupling: NationalCoupling,
    },
    /// Auxiliary R&I equation, iterated on its own lags.
    Aux { spec: AuxModelSpec },
    /// Funds divided by employment, which must already be extrapolated.
    BfIntensity {
        funds: Vec<FundingRow>,
        returns_discount: f64,
    },
}

impl ExtrapolationRule {
    pub fn name(&self) -> &'static str {
        match self {
            ExtrapolationRule::Ar4 => "ar4",
            ExtrapolationRule::Ar4National { .. } => "ar4_national",
            ExtrapolationRule::Aux { .. } => "aux",
            ExtrapolationRule::BfIntensity { .. } => "bf_intensity",
        }
    }

    fn check_variable(&self, variable: &str) -> Result<()> {
        let ok = match self {
            ExtrapolationRule::Ar4 | ExtrapolationRule::Ar4National { .. } => {
                variable != vars::BF && variable != vars::BF_FUNDS
            }
            ExtrapolationRule::Aux { spec } => spec.response == variable,
            ExtrapolationRule::BfIntensity { .. } => variable == vars::BF,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::RuleVariableMismatch {
                rule: self.name().into(),
                variable: variable.into(),
            })
        }
    }
}

/// Where a value used by a forecast came from. Regions are implicit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Observed {
        variable: String,
        year: i32,
    },
    Extrapolated {
        variable: String,
        year: i32,
    },
    /// Growth forecast of an earlier horizon year.
    Forecast {
        variable: String,
        year: i32,
    },
    Funds {
        year: i32,
    },
    National {
        series: String,
        year: i32,
    },
    ErrorCorrection {
        year: i32,
    },
}

/// Panel AR fit used by the `Ar4` rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    pub variable: String,
    /// Lags 1..=order; the order drops below four when higher lags are
    /// collinear or lack rows.
    pub order: usize,
    pub national: Option<String>,
    pub coupling: Option<NationalCoupling>,
    pub fit: FitResult,
}

fn national_column(series: &str) -> String {
    format!("national_{series}")
}

impl ArModel {
    /// Coefficient on `log x_{t−k}`.
    pub fn ar_coefficient(&self, k: usize) -> Option<f64> {
        self.fit.coefficient(&ShortRunVar::log(&self.variable, k).column_name())
    }

    /// Multiplier of the national change (per unit of log change).
    pub fn national_coefficient(&self) -> Option<f64> {
        match (self.coupling?, &self.national) {
            (NationalCoupling::Unit, _) => Some(1.0),
            (NationalCoupling::Estimated, Some(name)) => self.fit.coefficient(&national_column(name)),
            _ => None,
        }
    }
}

pub fn fit_panel_ar(
    ds: &PanelDataset,
    variable: &str,
    national: Option<(&NationalSeries, NationalCoupling)>,
) -> Result<ArModel> {
    let n = ds.n_regions();
    let t = ds.n_years();
    let y = ds.derive(&TransformTag::new(TransformKind::Log, variable))?;
    let row_region: Vec<usize> = (0..n * t).map(|i| i / t).collect();
    let row_year: Vec<i32> = (0..n * t).map(|i| ds.first_year() + (i % t) as i32).collect();
    let nat: Option<Vec<Option<f64>>> =
        national.map(|(s, _)| row_year.iter().map(|&yr| s.get(yr).map(|v| v / 100.0)).collect());
    for order in (1..=MAX_AR_ORDER).rev() {
        let mut response = y.values().to_vec();
        if let (Some((_, NationalCoupling::Unit)), Some(nat)) = (national, &nat) {
            for (v, m) in response.iter_mut().zip(nat) {
                *v = v.zip(*m).map(|(a, b)| a - b);
            }
        }
        let mut dm = DesignMatrix::new(
            ds.regions().to_vec(),
            row_region.clone(),
            row_year.clone(),
            format!("log_{variable}"),
            response,
        )?;
        for k in 1..=order {
            dm.push_column(
                ShortRunVar::log(variable, k).column_name(),
                lag_aligned(y.values(), t, k),
            )?;
        }
        if let (Some((s, NationalCoupling::Estimated)), Some(nat)) = (national, &nat) {
            dm.push_column(national_column(&s.name), nat.clone())?;
        }
        match fit_ols_fe_with(&dm, CovarianceKind::Classical) {
            Ok(fit) => {
                return Ok(ArModel {
                    variable: variable.into(),
                    order,
                    national: national.map(|(s, _)| s.name.clone()),
                    coupling: national.map(|(_, c)| c),
                    fit,
                })
            }
            Err(Error::RankDeficient { .. } | Error::TooFewObservations(_)) if order > 1 => {
                log::debug!("AR({order}) for {variable} not estimable, dropping a lag");
            }
            Err(e) => return Err(e),
        }
    }
    unreachable!()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolatedCell {
    pub region: String,
    pub year: i32,
    /// Level, in the variable's own units.
    pub value: f64,
    pub inputs: Vec<Source>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub variable: String,
    pub rule: String,
    pub ar: Option<ArModel>,
    pub aux: Option<AuxEstimate>,
    pub cells: Vec<ExtrapolatedCell>,
}

impl Extrapolation {
    pub fn value(&self, region: &str, year: i32) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.region == region && c.year == year)
            .map(|c| c.value)
    }
}

/// In-sample panel extended with empty years, filled as values are
/// extrapolated or forecast.
struct Extended {
    ds: PanelDataset,
    cutoff: i32,
    origin: BTreeMap<(String, usize, i32), Source>,
}

impl Extended {
    fn new(in_sample: &PanelDataset, through: i32) -> Result<Self> {
        let cutoff = in_sample.last_year();
        let t_in = in_sample.n_years();
        let t_ext = (through.max(cutoff) - in_sample.first_year() + 1) as usize;
        let mut ds = PanelDataset::new(in_sample.regions().to_vec(), in_sample.first_year(), t_ext)?;
        let names: Vec<String> = in_sample.variables().map(String::from).collect();
        for name in names {
            let mut values = vec![None; in_sample.n_regions() * t_ext];
            for r in 0..in_sample.n_regions() {
                let path = in_sample.region_path(&name, r)?;
                values[r * t_ext..r * t_ext + t_in].copy_from_slice(path);
            }
            ds.insert(&name, values, in_sample.unit(&name).unwrap_or(""))?;
        }
        Ok(Self {
            ds,
            cutoff,
            origin: BTreeMap::new(),
        })
    }

    fn apply(&mut self, ex: &Extrapolation) -> Result<()> {
        for c in &ex.cells {
            let r = self.region(&c.region)?;
            self.put(
                &ex.variable,
                r,
                c.year,
                c.value,
                Source::Extrapolated {
                    variable: ex.variable.clone(),
                    year: c.year,
                },
            )?;
        }
        Ok(())
    }

    fn region(&self, name: &str) -> Result<usize> {
        self.ds
            .region_index(name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown region `{name}`")))
    }

    fn put(&mut self, variable: &str, r: usize, year: i32, value: f64, source: Source) -> Result<()> {
        if !self.ds.has(variable) {
            let cells = self.ds.n_regions() * self.ds.n_years();
            self.ds.insert(variable, vec![None; cells], vars::unit(variable))?;
        }
        self.ds.set(variable, r, year, Some(value))?;
        self.origin.insert((variable.to_string(), r, year), source);
        Ok(())
    }

    fn source(&self, variable: &str, r: usize, year: i32) -> Source {
        if year <= self.cutoff {
            Source::Observed {
                variable: variable.into(),
                year,
            }
        } else {
            self.origin
                .get(&(variable.to_string(), r, year))
                .cloned()
                .unwrap_or(Source::Extrapolated {
                    variable: variable.into(),
                    year,
                })
        }
    }

    fn missing(&self, r: usize, year: i32, column: &str) -> Error {
        Error::MissingRegressor {
            region: self.ds.regions()[r].clone(),
            year,
            column: column.into(),
        }
    }

    fn level(&self, variable: &str, r: usize, year: i32) -> Result<(f64, Source)> {
        let v = if self.ds.has(variable) {
            self.ds.get(variable, r, year)?
        } else {
            None
        };
        match v {
            Some(v) => Ok((v, self.source(variable, r, year))),
            None => Err(self.missing(r, year, variable)),
        }
    }

    fn log_level(&self, variable: &str, r: usize, year: i32) -> Result<(f64, Source)> {
        let (v, s) = self.level(variable, r, year)?;
        if v <= 0.0 {
            return Err(Error::NonPositiveForLog {
                variable: variable.into(),
                region: self.ds.regions()[r].clone(),
                year,
                value: v,
            });
        }
        Ok((v.ln(), s))
    }

    /// A short-run regressor evaluated at `year`, with the cells it reads.
    fn short_run(&self, v: &ShortRunVar, r: usize, year: i32) -> Result<(f64, Vec<Source>)> {
        let at = year - v.lag as i32;
        let reads: Vec<i32> = match v.transform {
            TransformKind::Diff | TransformKind::LogDiff | TransformKind::PctChange => vec![at, at - 1],
            _ => vec![at],
        };
        let mut sources = Vec::with_capacity(reads.len());
        for &y in &reads {
            sources.push(
                self.level(&v.variable, r, y)
                    .map_err(|_| self.missing(r, year, &v.column_name()))?
                    .1,
            );
        }
        let t = self
            .ds
            .year_index(year)
            .ok_or_else(|| self.missing(r, year, &v.column_name()))?;
        let col = v.values(&self.ds)?;
        let value = col[r * self.ds.n_years() + t].ok_or_else(|| self.missing(r, year, &v.column_name()))?;
        Ok((value, sources))
    }
}

fn region_effect(fit: &FitResult, region: &str, year: i32) -> Result<f64> {
    fit.regions
        .iter()
        .position(|x| x == region)
        .and_then(|i| fit.region_effects[i])
        .ok_or_else(|| Error::MissingRegressor {
            region: region.into(),
            year,
            column: "region effect".into(),
        })
}

fn predict_ar(
    m: &ArModel,
    ext: &Extended,
    r: usize,
    year: i32,
    national: Option<&NationalSeries>,
) -> Result<(f64, Vec<Source>)> {
    let region = &ext.ds.regions()[r];
    let mut value = region_effect(&m.fit, region, year)?;
    let mut inputs = Vec::new();
    for k in 1..=m.order {
        let (x, s) = ext.log_level(&m.variable, r, year - k as i32)?;
        value += m.ar_coefficient(k).unwrap() * x;
        inputs.push(s);
    }
    if let Some(nat) = national {
        let n = nat.require(year)? / 100.0;
        value += m.national_coefficient().unwrap() * n;
        inputs.push(Source::National {
            series: nat.name.clone(),
            year,
        });
    }
    Ok((value.exp(), inputs))
}

fn predict_aux(a: &AuxEstimate, ext: &Extended, r: usize, year: i32) -> Result<(f64, Vec<Source>)> {
    let region = &ext.ds.regions()[r];
    let mut value = region_effect(&a.fit, region, year)?;
    let mut inputs = Vec::new();
    for (name, b) in a.fit.coefficient_names.iter().zip(&a.fit.coefficients) {
        let x = if let Some(k) = a.spec.ar_lags.iter().find(|&&k| a.spec.ar_column(k) == *name) {
            let (x, s) = ext.log_level(&a.spec.response, r, year - *k as i32)?;
            inputs.push(s);
            x
        } else if let Some(v) = a.spec.short_run.iter().find(|v| v.column_name() == *name) {
            let (x, s) = ext.short_run(v, r, year)?;
            inputs.extend(s);
            x
        } else {
            return Err(ext.missing(r, year, name));
        };
        value += b * x;
    }
    Ok((value.exp(), inputs))
}

/// Extends `variable` from the year after `ds` ends through `through`.
/// `prior` holds extrapolations of other variables the rule may read
/// (employment for BF intensity, determinants for the auxiliary rule).
pub fn extrapolate_regressor(
    ds: &PanelDataset,
    variable: &str,
    rule: &ExtrapolationRule,
    through: i32,
    prior: &[Extrapolation],
) -> Result<Extrapolation> {
    rule.check_variable(variable)?;
    let years: Vec<i32> = (ds.last_year() + 1..=through).collect();
    if years.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "nothing to extrapolate: panel ends {}, target {through}",
            ds.last_year()
        )));
    }
    let mut ext = Extended::new(ds, through)?;
    for p in prior {
        ext.apply(p)?;
    }
    let mut out = Extrapolation {
        variable: variable.into(),
        rule: rule.name().into(),
        ar: None,
        aux: None,
        cells: Vec::new(),
    };
    let mut funds: BTreeMap<(&str, i32), f64> = BTreeMap::new();
    match rule {
        ExtrapolationRule::Ar4 => out.ar = Some(fit_panel_ar(ds, variable, None)?),
        ExtrapolationRule::Ar4National { national, coupling } => {
            for &y in &years {
                national.require(y)?;
            }
            out.ar = Some(fit_panel_ar(ds, variable, Some((national, *coupling)))?);
        }
        ExtrapolationRule::Aux { spec } => out.aux = Some(fit_aux(ds, spec)?),
        ExtrapolationRule::BfIntensity {
            funds: rows,
            returns_discount,
        } => {
            for f in rows {
                *funds.entry((f.region.as_str(), f.year)).or_default() += f.effective(*returns_discount);
            }
        }
    }
    for &year in &years {
        for r in 0..ds.n_regions() {
            let region = ds.regions()[r].clone();
            let (value, inputs) = match rule {
                ExtrapolationRule::Ar4 => predict_ar(out.ar.as_ref().unwrap(), &ext, r, year, None)?,
                ExtrapolationRule::Ar4National { national, .. } => {
                    predict_ar(out.ar.as_ref().unwrap(), &ext, r, year, Some(national))?
                }
                ExtrapolationRule::Aux { .. } => predict_aux(out.aux.as_ref().unwrap(), &ext, r, year)?,
                ExtrapolationRule::BfIntensity { .. } => {
                    let f = *funds
                        .get(&(region.as_str(), year))
                        .ok_or_else(|| ext.missing(r, year, vars::BF_FUNDS))?;
                    let (e, s) = ext.level(vars::EMPL, r, year)?;
                    (bf_intensity(f, e), vec![Source::Funds { year }, s])
                }
            };
            ext.put(
                variable,
                r,
                year,
                value,
                Source::Extrapolated {
                    variable: variable.into(),
                    year,
                },
            )?;
            out.cells.push(ExtrapolatedCell {
                region,
                year,
                value,
                inputs,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YearValue {
    pub year: i32,
    pub value: f64,
}

fn default_aux_estimator() -> EstimatorChoice {
    EstimatorChoice::fgls()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastScenario {
    pub name: String,
    pub horizon_years: Vec<i32>,
    /// National GDP growth in percent for every horizon year, before the
    /// rebound discount.
    pub national_growth: Vec<YearValue>,
    /// Multiplies the national growth of the final horizon year.
    pub rebound_discount: f64,
    /// Weight of disruptive-program funds relative to traditional funds.
    pub returns_discount: f64,
    pub funds: Vec<FundingRow>,
    #[serde(default)]
    pub national_coupling: NationalCoupling,
    #[serde(default = "default_aux_estimator")]
    pub aux_estimator: EstimatorChoice,
}

impl ForecastScenario {
    /// Horizon from the first funded year through the year after the last
    /// one. National growth is taken from `national` for funded years; the
    /// final year rebounds by the magnitude of the last funded year's value.
    pub fn rebound(name: &str, national: &NationalSeries, funds: Vec<FundingRow>, c: f64, r: f64) -> Result<Self> {
        let years: BTreeSet<i32> = funds.iter().map(|f| f.year).collect();
        let (first, last) = match (years.first(), years.last()) {
            (Some(a), Some(b)) => (*a, *b),
            _ => return Err(Error::InvalidArgument("scenario needs funding rows".into())),
        };
        let mut national_growth = Vec::new();
        for y in first..=last {
            national_growth.push(YearValue {
                year: y,
                value: national.require(y)?,
            });
        }
        national_growth.push(YearValue {
            year: last + 1,
            value: national.require(last)?.abs(),
        });
        let s = Self {
            name: name.into(),
            horizon_years: (first..=last + 1).collect(),
            national_growth,
            rebound_discount: c,
            returns_discount: r,
            funds,
            national_coupling: NationalCoupling::default(),
            aux_estimator: default_aux_estimator(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (label, v) in [("rebound", self.rebound_discount), ("returns", self.returns_discount)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidArgument(format!("{label} discount {v} outside (0, 1]")));
            }
        }
        if self.horizon_years.is_empty() || self.horizon_years.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(Error::InvalidArgument(
                "horizon years must be consecutive and non-empty".into(),
            ));
        }
        for &y in &self.horizon_years {
            if !self.national_growth.iter().any(|v| v.year == y) {
                return Err(Error::MissingNationalValue {
                    series: "national growth (scenario)".into(),
                    year: y,
                });
            }
        }
        if let Some(f) = self
            .funds
            .iter()
            .find(|f| !(f.traditional >= 0.0 && f.disruptive >= 0.0 && f.total().is_finite()))
        {
            return Err(Error::InvalidArgument(format!(
                "funds for `{}` in {} must be non-negative",
                f.region, f.year
            )));
        }
        Ok(())
    }

    /// Common factor value (percent) used for `year`.
    pub fn factor(&self, year: i32) -> Result<f64> {
        let base = self
            .national_growth
            .iter()
            .find(|v| v.year == year)
            .map(|v| v.value)
            .ok_or_else(|| Error::MissingNationalValue {
                series: "national growth (scenario)".into(),
                year,
            })?;
        let last = *self.horizon_years.last().unwrap();
        Ok(if year == last {
            self.rebound_discount * base
        } else {
            base
        })
    }

    /// Disruptive share of each region's funds in `year`, in `regions` order.
    pub fn disruptive_share(&self, regions: &[String], year: i32) -> Vec<f64> {
        regions
            .iter()
            .map(|r| {
                self.funds
                    .iter()
                    .find(|f| &f.region == r && f.year == year)
                    .map_or(0.0, FundingRow::disruptive_share)
            })
            .collect()
    }
}

/// Everything a forecast reads besides the scenario.
#[derive(Debug, Clone, Copy)]
pub struct ForecastInputs<'a> {
    pub panel: &'a PanelDataset,
    pub estimate: &'a GrowthEstimate,
    pub longrun: Option<&'a LongRunEstimate>,
    /// Percent log change of national unemployment.
    pub national_unemp: Option<&'a NationalSeries>,
    /// Percent log change of national employment.
    pub national_empl: Option<&'a NationalSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub region: String,
    pub year: i32,
    /// Predicted Δlog GDP per employee.
    pub log_growth: f64,
    pub growth_pct: f64,
    /// GDP per employee chained from the last observed level.
    pub gdp_level: Option<f64>,
    pub fixed_effect: f64,
    /// Regressor values in `ForecastResult::columns` order.
    pub regressors: Vec<f64>,
    pub sources: Vec<Source>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub year: i32,
    pub mean: f64,
    pub sd: f64,
    pub lower: f64,
    pub upper: f64,
}

/// BF intensity by program, EUR per employee. In-sample years count as
/// traditional funding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityRow {
    pub region: String,
    pub year: i32,
    pub traditional: f64,
    pub disruptive: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub scenario: ForecastScenario,
    /// Last year of regional observations used.
    pub cutoff: i32,
    pub regions: Vec<String>,
    pub columns: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Region-major, horizon years ascending.
    pub rows: Vec<ForecastRow>,
    pub band: Vec<BandRow>,
    pub extrapolations: Vec<Extrapolation>,
    pub intensities: Vec<IntensityRow>,
}

impl ForecastResult {
    pub fn row(&self, region: &str, year: i32) -> Option<&ForecastRow> {
        self.rows.iter().find(|r| r.region == region && r.year == year)
    }

    pub fn years(&self) -> Vec<i32> {
        self.scenario.horizon_years.clone()
    }

    pub fn growth_by_region(&self, year: i32) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.year == year)
            .map(|r| r.growth_pct)
            .collect()
    }

    /// Largest gap between a stored forecast and its recomputation from the
    /// stored regressors, in log units.
    pub fn audit_gap(&self) -> f64 {
        self.rows
            .iter()
            .map(|row| {
                let x: f64 = self.coefficients.iter().zip(&row.regressors).map(|(b, v)| b * v).sum();
                (x + row.fixed_effect - row.log_growth).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Fails unless every row carries a full regressor vector.
    pub fn check_audit(&self) -> Result<()> {
        if let Some(r) = self.rows.iter().find(|r| r.regressors.len() != self.columns.len()) {
            return Err(Error::AuditTrailIncomplete(format!(
                "{} {}: {} regressors for {} columns",
                r.region,
                r.year,
                r.regressors.len(),
                self.columns.len()
            )));
        }
        Ok(())
    }
}

/// No regional observation after the cutoff may feed a forecast; BF funds
/// and national series are exempt.
pub fn check_provenance(result: &ForecastResult) -> Result<()> {
    let violation = |s: &Source| match s {
        Source::Observed { variable, year } if *year > result.cutoff => Some((variable.clone(), *year)),
        Source::ErrorCorrection { year } if *year > result.cutoff => Some(("ec".to_string(), *year)),
        _ => None,
    };
    let all = result.rows.iter().flat_map(|r| r.sources.iter()).chain(
        result
            .extrapolations
            .iter()
            .flat_map(|e| e.cells.iter().flat_map(|c| c.inputs.iter())),
    );
    for s in all {
        if let Some((variable, year)) = violation(s) {
            return Err(Error::ProvenanceViolation {
                variable,
                year,
                cutoff: result.cutoff,
            });
        }
    }
    Ok(())
}

/// Cross-region mean ± 2 sample standard deviations per year (percent).
pub fn forecast_band(rows: &[ForecastRow]) -> Vec<BandRow> {
    let years: BTreeSet<i32> = rows.iter().map(|r| r.year).collect();
    years
        .into_iter()
        .map(|year| {
            let g: Vec<f64> = rows.iter().filter(|r| r.year == year).map(|r| r.growth_pct).collect();
            let m = mean(&g);
            let s = sd(&g);
            BandRow {
                year,
                mean: m,
                sd: s,
                lower: m - 2.0 * s,
                upper: m + 2.0 * s,
            }
        })
        .collect()
}

fn default_rule(
    variable: &str,
    inputs: &ForecastInputs,
    scenario: &ForecastScenario,
    cutoff: i32,
) -> Result<ExtrapolationRule> {
    let national = |s: Option<&NationalSeries>, label: &str| {
        s.cloned().ok_or_else(|| Error::MissingNationalValue {
            series: label.into(),
            year: cutoff + 1,
        })
    };
    Ok(match variable {
        v if v == vars::UNEMP => ExtrapolationRule::Ar4National {
            national: national(inputs.national_unemp, "national unemployment")?,
            coupling: scenario.national_coupling,
        },
        v if v == vars::EMPL => ExtrapolationRule::Ar4National {
            national: national(inputs.national_empl, "national employment")?,
            coupling: scenario.national_coupling,
        },
        v if v == vars::RD_EXP_BUS || v == vars::RD_EXP_PUB || v == vars::PATENT => ExtrapolationRule::Aux {
            spec: AuxModelSpec {
                estimator: scenario.aux_estimator,
                ..AuxModelSpec::for_response(v)
            },
        },
        v if v == vars::BF => ExtrapolationRule::BfIntensity {
            funds: scenario.funds.clone(),
            returns_discount: scenario.returns_discount,
        },
        _ => ExtrapolationRule::Ar4,
    })
}

/// Variables to extrapolate, in an order where every rule's inputs come
/// first: AR rules, then BF intensity, then the auxiliary equations.
fn extrapolation_order(needed: &[String], scenario_aux: &AuxModelSpec) -> Vec<String> {
    let mut set: BTreeSet<String> = needed.iter().filter(|v| v.as_str() != vars::GDP).cloned().collect();
    let is_aux = |v: &str| v == vars::RD_EXP_BUS || v == vars::RD_EXP_PUB || v == vars::PATENT;
    if set.iter().any(|v| is_aux(v)) {
        for d in &scenario_aux.short_run {
            set.insert(d.variable.clone());
        }
    }
    if set.contains(vars::BF) {
        set.insert(vars::EMPL.into());
    }
    let rank = |v: &str| {
        if v == vars::BF {
            1
        } else if is_aux(v) {
            2
        } else {
            0
        }
    };
    let mut out: Vec<String> = set.into_iter().collect();
    out.sort_by_key(|v| rank(v));
    out
}

/// Evaluates the growth equation for every horizon year and region:
/// Δgdp̂ = β'x_{t−1} + λ_i F_t + φ ec_{t−lag} + μ_i, with regressors
/// extrapolated past the last year of the estimate.
pub fn forecast_growth(inputs: &ForecastInputs, scenario: &ForecastScenario) -> Result<ForecastResult> {
    scenario.validate()?;
    let est = inputs.estimate;
    let fit = &est.fit;
    let cutoff = fit
        .rows
        .iter()
        .map(|r| r.year)
        .max()
        .ok_or_else(|| Error::WindowTooShort("growth estimate has no rows".into()))?;
    if inputs.panel.last_year() < cutoff {
        return Err(Error::InvalidArgument(format!(
            "panel ends {} before the estimate's last year {cutoff}",
            inputs.panel.last_year()
        )));
    }
    if scenario.horizon_years[0] != cutoff + 1 {
        return Err(Error::InvalidArgument(format!(
            "horizon must start in {}, the year after the estimation sample",
            cutoff + 1
        )));
    }
    let ds = inputs.panel.slice_years(inputs.panel.first_year(), cutoff)?;
    let last = *scenario.horizon_years.last().unwrap();

    // regressor extrapolation through the year before the last forecast
    let needed: Vec<String> = est.spec.short_run.iter().map(|v| v.variable.clone()).collect();
    let mut extrapolations: Vec<Extrapolation> = Vec::new();
    if last - 1 > cutoff {
        let aux_template = AuxModelSpec::for_response(vars::RD_EXP_BUS);
        for v in extrapolation_order(&needed, &aux_template) {
            let rule = default_rule(&v, inputs, scenario, cutoff)?;
            let ex = extrapolate_regressor(&ds, &v, &rule, last - 1, &extrapolations)?;
            extrapolations.push(ex);
        }
    }

    let mut ext = Extended::new(&ds, last)?;
    for e in &extrapolations {
        ext.apply(e)?;
    }

    let lr_index: Option<Vec<Option<usize>>> = inputs.longrun.map(|lr| {
        ds.regions()
            .iter()
            .map(|r| lr.regions.iter().position(|x| x == r))
            .collect()
    });
    let columns = fit.coefficient_names.clone();
    let mut rows: Vec<ForecastRow> = Vec::new();
    let mut log_level: Vec<Option<f64>> = (0..ds.n_regions())
        .map(|r| {
            ds.get(vars::GDP, r, cutoff)
                .ok()
                .flatten()
                .filter(|v| *v > 0.0)
                .map(f64::ln)
        })
        .collect();
    for &year in &scenario.horizon_years {
        let f = scenario.factor(year)?;
        for r in 0..ds.n_regions() {
            let region = ds.regions()[r].clone();
            let mu = region_effect(fit, &region, year)?;
            let mut x = Vec::with_capacity(columns.len());
            let mut sources = Vec::new();
            for name in &columns {
                let value = if let Some(v) = est.spec.short_run.iter().find(|v| v.column_name() == *name) {
                    let (value, s) = ext.short_run(v, r, year)?;
                    sources.extend(s);
                    value
                } else if name == FACTOR_COLUMN || *name == factor_column(&region) {
                    sources.push(Source::National {
                        series: est.spec.factor_name.clone(),
                        year,
                    });
                    f / 100.0
                } else if fit.regions.iter().any(|g| *name == factor_column(g)) {
                    0.0
                } else if est.spec.ec_lag.map(ec_column).as_deref() == Some(name.as_str()) {
                    let lag = est.spec.ec_lag.unwrap() as i32;
                    let lr = inputs
                        .longrun
                        .ok_or_else(|| Error::MissingArtifact("long-run estimate for the ec term".into()))?;
                    let at = year - lag;
                    if at > cutoff {
                        return Err(ext.missing(r, year, name));
                    }
                    let li = lr_index.as_ref().unwrap()[r].ok_or_else(|| ext.missing(r, year, name))?;
                    sources.push(Source::ErrorCorrection { year: at });
                    lr.ec_at(li, at).ok_or_else(|| ext.missing(r, year, name))?
                } else {
                    return Err(ext.missing(r, year, name));
                };
                x.push(value);
            }
            let log_growth = fit.coefficients.iter().zip(&x).map(|(b, v)| b * v).sum::<f64>() + mu;
            log_level[r] = log_level[r].map(|l| l + log_growth);
            let gdp_level = log_level[r].map(f64::exp);
            if let Some(level) = gdp_level {
                ext.put(
                    vars::GDP,
                    r,
                    year,
                    level,
                    Source::Forecast {
                        variable: vars::GDP.into(),
                        year,
                    },
                )?;
            }
            sources.sort();
            sources.dedup();
            rows.push(ForecastRow {
                region,
                year,
                log_growth,
                growth_pct: 100.0 * log_growth,
                gdp_level,
                fixed_effect: mu,
                regressors: x,
                sources,
            });
        }
    }
    rows.sort_by_key(|r| (ds.region_index(&r.region), r.year));

    let intensities = program_intensities(&ds, &extrapolations, scenario, cutoff)?;
    let result = ForecastResult {
        scenario: scenario.clone(),
        cutoff,
        regions: ds.regions().to_vec(),
        columns,
        coefficients: fit.coefficients.clone(),
        band: forecast_band(&rows),
        rows,
        extrapolations,
        intensities,
    };
    check_provenance(&result)?;
    Ok(result)
}

/// Intensity by program for the last two in-sample years and every funded
/// horizon year, using extrapolated employment after the cutoff.
fn program_intensities(
    ds: &PanelDataset,
    extrapolations: &[Extrapolation],
    scenario: &ForecastScenario,
    cutoff: i32,
) -> Result<Vec<IntensityRow>> {
    let Some(empl) = extrapolations.iter().find(|e| e.variable == vars::EMPL) else {
        return Ok(Vec::new());
    };
    if !ds.has(vars::BF) {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for (r, region) in ds.regions().iter().enumerate() {
        for year in [cutoff - 1, cutoff] {
            if let Some(v) = ds.get(vars::BF, r, year)? {
                out.push(IntensityRow {
                    region: region.clone(),
                    year,
                    traditional: v,
                    disruptive: 0.0,
                });
            }
        }
        let mut funded: Vec<&FundingRow> = scenario.funds.iter().filter(|f| &f.region == region).collect();
        funded.sort_by_key(|f| f.year);
        for f in funded {
            if let Some(e) = empl.value(region, f.year) {
                out.push(IntensityRow {
                    region: region.clone(),
                    year: f.year,
                    traditional: bf_intensity(f.traditional, e),
                    disruptive: bf_intensity(f.disruptive, e),
                });
            }
        }
    }
    Ok(out)
}

/// Mean observed and fitted growth per year (percent), plus per-region paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionPath {
    pub mean: Vec<PathPoint>,
    pub regions: Vec<RegionPath>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub year: i32,
    pub observed: f64,
    pub fitted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPath {
    pub region: String,
    pub points: Vec<PathPoint>,
}

pub fn in_sample_prediction_path(estimate: &GrowthEstimate) -> PredictionPath {
    let fit = &estimate.fit;
    let mut by_year: BTreeMap<i32, (f64, f64, usize)> = BTreeMap::new();
    let mut regions: Vec<RegionPath> = fit
        .regions
        .iter()
        .map(|r| RegionPath {
            region: r.clone(),
            points: Vec::new(),
        })
        .collect();
    for row in &fit.rows {
        let e = by_year.entry(row.year).or_insert((0.0, 0.0, 0));
        e.0 += 100.0 * row.observed;
        e.1 += 100.0 * row.fitted;
        e.2 += 1;
        regions[row.region].points.push(PathPoint {
            year: row.year,
            observed: 100.0 * row.observed,
            fitted: 100.0 * row.fitted,
        });
    }
    for r in &mut regions {
        r.points.sort_by_key(|p| p.year);
    }
    regions.retain(|r| !r.points.is_empty());
    PredictionPath {
        mean: by_year
            .into_iter()
            .map(|(year, (o, f, n))| PathPoint {
                year,
                observed: o / n as f64,
                fitted: f / n as f64,
            })
            .collect(),
        regions,
    }
}

/// Number of interior local extrema of a series.
pub fn turning_points(xs: &[f64]) -> usize {
    xs.windows(3).filter(|w| (w[1] - w[0]) * (w[2] - w[1]) < 0.0).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::{build_growth_design, fit_growth, GrowthModelSpec};
    use crate::longrun::{fit_longrun, LongRunSpec};
    use crate::synthetic::{generate, DgpConfig, SyntheticPanel};

    struct Setup {
        s: SyntheticPanel,
        lr: LongRunEstimate,
        est: GrowthEstimate,
    }

    fn setup(seed: u64) -> Setup {
        let s = generate(&DgpConfig::finland_like(seed)).unwrap();
        let lr = fit_longrun(&s.panel, &LongRunSpec::default()).unwrap();
        let spec = GrowthModelSpec::default();
        let dm = build_growth_design(&s.panel, Some(&lr), Some(&s.national_growth), &spec).unwrap();
        let est = fit_growth(&dm, &spec).unwrap();
        Setup { s, lr, est }
    }

    impl Setup {
        fn inputs(&self) -> ForecastInputs<'_> {
            ForecastInputs {
                panel: &self.s.panel,
                estimate: &self.est,
                longrun: Some(&self.lr),
                national_unemp: Some(&self.s.national_unemp),
                national_empl: Some(&self.s.national_empl),
            }
        }

        fn scenario(&self, c: f64, r: f64) -> ForecastScenario {
            ForecastScenario::rebound("test", &self.s.national_growth, self.s.funding.clone(), c, r).unwrap()
        }

        fn run(&self, c: f64, r: f64) -> ForecastResult {
            forecast_growth(&self.inputs(), &self.scenario(c, r)).unwrap()
        }
    }

    fn geometric_panel() -> PanelDataset {
        let mut ds = PanelDataset::new(vec!["A".into(), "B".into(), "C".into()], 2000, 12).unwrap();
        let vals = [3.0, 7.5, 11.0]
            .iter()
            .flat_map(|&a| (0..12).map(move |t| a * 0.5f64.powi(t)))
            .collect();
        ds.insert_dense(vars::GFCF, vals, "").unwrap();
        ds
    }

    #[test]
    fn ar4_on_exact_ar1_recovers_one_step() {
        let ds = geometric_panel();
        let ex = extrapolate_regressor(&ds, vars::GFCF, &ExtrapolationRule::Ar4, 2012, &[]).unwrap();
        assert_eq!(ex.ar.as_ref().unwrap().order, 1);
        for (r, region) in ds.regions().iter().enumerate() {
            let last = ds.get(vars::GFCF, r, 2011).unwrap().unwrap();
            let v = ex.value(region, 2012).unwrap();
            assert!(
                (v - 0.5 * last).abs() < 1e-8 * last.max(1e-300),
                "{v} vs {}",
                0.5 * last
            );
        }
    }

    #[test]
    fn aux_rule_reads_only_lag_three_and_four_years() {
        let t = setup(3);
        let spec = AuxModelSpec::for_response(vars::RD_EXP_PUB);
        let ex = extrapolate_regressor(
            &t.s.panel,
            vars::RD_EXP_PUB,
            &ExtrapolationRule::Aux { spec },
            2020,
            &[],
        )
        .unwrap();
        for cell in &ex.cells {
            let want = [cell.year - 4, cell.year - 3];
            for s in &cell.inputs {
                match s {
                    Source::Observed { year, .. } => assert!(want.contains(year), "{} read {year}", cell.year),
                    other => panic!("unexpected input {other:?}"),
                }
            }
        }
        let c2020 = ex.cells.iter().find(|c| c.year == 2020).unwrap();
        let years: BTreeSet<i32> = c2020
            .inputs
            .iter()
            .map(|s| match s {
                Source::Observed { year, .. } => *year,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(years, BTreeSet::from([2016, 2017]));
    }

    #[test]
    fn doubling_funds_doubles_intensity() {
        let t = setup(1);
        let empl_rule = ExtrapolationRule::Ar4National {
            national: t.s.national_empl.clone(),
            coupling: NationalCoupling::Estimated,
        };
        let empl = extrapolate_regressor(&t.s.panel, vars::EMPL, &empl_rule, 2020, &[]).unwrap();
        let bf = |scale: f64| {
            let funds =
                t.s.funding
                    .iter()
                    .map(|f| FundingRow {
                        traditional: f.traditional * scale,
                        disruptive: f.disruptive * scale,
                        ..f.clone()
                    })
                    .collect();
            let rule = ExtrapolationRule::BfIntensity {
                funds,
                returns_discount: 1.0,
            };
            extrapolate_regressor(&t.s.panel, vars::BF, &rule, 2020, std::slice::from_ref(&empl)).unwrap()
        };
        let (one, two) = (bf(1.0), bf(2.0));
        for (a, b) in one.cells.iter().zip(&two.cells) {
            assert_eq!(b.value, 2.0 * a.value);
        }
        let c = &one.cells[one.cells.len() - 1];
        let f =
            t.s.funding
                .iter()
                .find(|f| f.region == c.region && f.year == c.year)
                .unwrap();
        assert_eq!(c.value, bf_intensity(f.total(), empl.value(&c.region, c.year).unwrap()));
    }

    #[test]
    fn rule_errors() {
        let t = setup(2);
        let mismatch = extrapolate_regressor(&t.s.panel, vars::BF, &ExtrapolationRule::Ar4, 2020, &[]);
        assert!(matches!(mismatch, Err(Error::RuleVariableMismatch { .. })));
        let aux = ExtrapolationRule::Aux {
            spec: AuxModelSpec::for_response(vars::PATENT),
        };
        assert!(matches!(
            extrapolate_regressor(&t.s.panel, vars::GFCF, &aux, 2020, &[]),
            Err(Error::RuleVariableMismatch { .. })
        ));
        let short = NationalSeries::new("n", 1995, vec![0.5; 25]).unwrap();
        let rule = ExtrapolationRule::Ar4National {
            national: short,
            coupling: NationalCoupling::Unit,
        };
        assert!(matches!(
            extrapolate_regressor(&t.s.panel, vars::UNEMP, &rule, 2020, &[]),
            Err(Error::MissingNationalValue { year: 2020, .. })
        ));
        // BF intensity before employment is extrapolated
        let bf = ExtrapolationRule::BfIntensity {
            funds: t.s.funding.clone(),
            returns_discount: 1.0,
        };
        assert!(matches!(
            extrapolate_regressor(&t.s.panel, vars::BF, &bf, 2020, &[]),
            Err(Error::MissingRegressor { year: 2019, .. })
        ));
    }

    #[test]
    fn unit_coupling_passes_national_change_through() {
        let mut ds = geometric_panel();
        // log x_t = log x_{t-1} − ln 2 + n_t/100 exactly
        let n: Vec<f64> = (0..14).map(|t| ((t * 7) % 5) as f64 - 2.0).collect();
        let nat = NationalSeries::new("n", 2000, n.clone()).unwrap();
        let vals = [3.0f64, 7.5, 11.0]
            .iter()
            .flat_map(|&a| {
                let n = n.clone();
                (0..12).scan(a.ln(), move |l, t| {
                    if t > 0 {
                        *l += -(2f64.ln()) + n[t] / 100.0;
                    }
                    Some(l.exp())
                })
            })
            .collect();
        ds.insert_dense(vars::UNEMP, vals, "").unwrap();
        let rule = ExtrapolationRule::Ar4National {
            national: nat.clone(),
            coupling: NationalCoupling::Unit,
        };
        let ex = extrapolate_regressor(&ds, vars::UNEMP, &rule, 2013, &[]).unwrap();
        for (r, region) in ds.regions().iter().enumerate() {
            let last = ds.get(vars::UNEMP, r, 2011).unwrap().unwrap().ln();
            let want = last - 2f64.ln() + n[12] / 100.0;
            assert!((ex.value(region, 2012).unwrap().ln() - want).abs() < 1e-8);
        }
        let est = extrapolate_regressor(
            &ds,
            vars::UNEMP,
            &ExtrapolationRule::Ar4National {
                national: nat,
                coupling: NationalCoupling::Estimated,
            },
            2013,
            &[],
        )
        .unwrap();
        let m = est.ar.unwrap();
        assert!((m.national_coefficient().unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn baseline_forecast_shape() {
        // averaged over draws: the 2020 slump and the 2021 rebound
        let (mut m20, mut m21) = (Vec::new(), Vec::new());
        for seed in 0..8 {
            let f = setup(seed).run(1.0, 1.0);
            let band = |y: i32| f.band.iter().find(|b| b.year == y).unwrap().mean;
            m20.push(band(2020));
            m21.push(band(2021));
        }
        let (a, b) = (mean(&m20), mean(&m21));
        assert!((-2.5..=-0.5).contains(&a), "2020 mean {a}");
        assert!((2.0..=6.0).contains(&b), "2021 mean {b}");
    }

    #[test]
    fn audit_closure_band_and_provenance() {
        let t = setup(4);
        let f = t.run(1.0, 1.0);
        assert_eq!(f.rows.len(), 18 * 3);
        assert!(f.audit_gap() < 1e-12);
        f.check_audit().unwrap();
        check_provenance(&f).unwrap();
        assert_eq!(forecast_band(&f.rows), f.band);
        for b in &f.band {
            assert!((b.upper - b.lower - 4.0 * b.sd).abs() < 1e-12);
        }
        let mut bad = f.clone();
        bad.rows[0].sources.push(Source::Observed {
            variable: vars::GFCF.into(),
            year: 2019,
        });
        assert!(matches!(
            check_provenance(&bad),
            Err(Error::ProvenanceViolation { year: 2019, .. })
        ));
    }

    #[test]
    fn later_regional_data_is_ignored() {
        let t = setup(5);
        let base = t.run(1.0, 1.0);
        // append a 2019 column of junk observations
        let p = &t.s.panel;
        let mut wide = PanelDataset::new(p.regions().to_vec(), p.first_year(), p.n_years() + 1).unwrap();
        let names: Vec<String> = p.variables().map(String::from).collect();
        for v in names {
            let mut vals = Vec::new();
            for r in 0..p.n_regions() {
                vals.extend_from_slice(p.region_path(&v, r).unwrap());
                vals.push(Some(1e6));
            }
            wide.insert(&v, vals, "").unwrap();
        }
        let inputs = ForecastInputs {
            panel: &wide,
            ..t.inputs()
        };
        let f = forecast_growth(&inputs, &t.scenario(1.0, 1.0)).unwrap();
        assert_eq!(f.rows, base.rows);
    }

    #[test]
    fn chained_levels_follow_cumulative_log_growth() {
        let t = setup(6);
        let f = t.run(1.0, 1.0);
        for (r, region) in t.s.panel.regions().iter().enumerate() {
            let start = t.s.panel.get(vars::GDP, r, 2018).unwrap().unwrap();
            let mut cum = 0.0;
            for y in 2019..=2021 {
                let row = f.row(region, y).unwrap();
                cum += row.log_growth;
                let want = start * cum.exp();
                assert!((row.gdp_level.unwrap() - want).abs() < 1e-9 * want);
            }
        }
    }

    #[test]
    fn zero_slopes_forecast_the_fixed_effect() {
        let mut t = setup(7);
        t.est.fit.coefficients.iter_mut().for_each(|b| *b = 0.0);
        let f = t.run(1.0, 1.0);
        for row in &f.rows {
            let i = t.est.fit.regions.iter().position(|r| *r == row.region).unwrap();
            assert_eq!(row.log_growth, t.est.fit.region_effects[i].unwrap());
        }
    }

    #[test]
    fn rebound_discount_is_linear_in_the_loading() {
        let t = setup(8);
        let (full, half) = (t.run(1.0, 1.0), t.run(0.5, 1.0));
        let lambdas = t.est.loadings();
        assert_eq!(t.scenario(1.0, 1.0).factor(2021).unwrap(), 1.8);
        for (i, region) in t.est.fit.regions.iter().enumerate() {
            let d = full.row(region, 2021).unwrap().growth_pct - half.row(region, 2021).unwrap().growth_pct;
            assert!((d - lambdas[i].unwrap() * 0.9).abs() < 1e-10, "{region}: {d}");
            for y in [2019, 2020] {
                assert_eq!(
                    full.row(region, y).unwrap().growth_pct,
                    half.row(region, y).unwrap().growth_pct
                );
            }
        }
    }

    #[test]
    fn funding_moves_growth_one_year_later() {
        let t = setup(9);
        let base = t.run(1.0, 1.0);
        for year in [2019, 2020] {
            let mut sc = t.scenario(1.0, 1.0);
            for f in sc.funds.iter_mut().filter(|f| f.year == year) {
                f.traditional *= 1.5;
                f.disruptive *= 1.5;
            }
            let alt = forecast_growth(&t.inputs(), &sc).unwrap();
            for (a, b) in base.rows.iter().zip(&alt.rows) {
                if a.year <= year {
                    assert_eq!(a.growth_pct, b.growth_pct, "{} {}", a.region, a.year);
                } else if a.year == year + 1 {
                    assert_ne!(a.growth_pct, b.growth_pct);
                }
            }
        }
    }

    #[test]
    fn returns_discount_acts_through_effective_intensity() {
        let t = setup(10);
        let (full, disc) = (t.run(1.0, 1.0), t.run(1.0, 0.7));
        let bf = t.est.fit.coefficient("log_BF_l1").unwrap();
        let col = full.columns.iter().position(|c| c == "log_BF_l1").unwrap();
        for (a, b) in full.rows.iter().zip(&disc.rows).filter(|(a, _)| a.year == 2021) {
            let f = t.scenario(1.0, 1.0);
            let row = f.funds.iter().find(|x| x.region == a.region && x.year == 2020).unwrap();
            let want = bf * (row.effective(0.7) / row.total()).ln();
            assert!((b.log_growth - a.log_growth - want).abs() < 1e-12);
            assert!((b.regressors[col] - a.regressors[col] - (row.effective(0.7) / row.total()).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn ec_lag_shorter_than_horizon_names_the_gap() {
        let t = setup(11);
        let spec = GrowthModelSpec {
            ec_lag: Some(1),
            ..GrowthModelSpec::default()
        };
        let dm = build_growth_design(&t.s.panel, Some(&t.lr), Some(&t.s.national_growth), &spec).unwrap();
        let est = fit_growth(&dm, &spec).unwrap();
        let inputs = ForecastInputs {
            estimate: &est,
            ..t.inputs()
        };
        match forecast_growth(&inputs, &t.scenario(1.0, 1.0)) {
            Err(Error::MissingRegressor { year, column, .. }) => {
                assert_eq!(year, 2020);
                assert_eq!(column, "ec_l1");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scenario_validation() {
        let t = setup(12);
        assert!(ForecastScenario::rebound("x", &t.s.national_growth, t.s.funding.clone(), 0.0, 1.0).is_err());
        assert!(ForecastScenario::rebound("x", &t.s.national_growth, t.s.funding.clone(), 1.0, 1.2).is_err());
        let mut sc = t.scenario(1.0, 1.0);
        sc.national_growth.pop();
        assert!(matches!(
            sc.validate(),
            Err(Error::MissingNationalValue { year: 2021, .. })
        ));
        let mut sc = t.scenario(1.0, 1.0);
        sc.horizon_years = vec![2020, 2021];
        assert!(forecast_growth(&t.inputs(), &sc).is_err());
        let sc = t.scenario(1.0, 0.7);
        let share = sc.disruptive_share(t.s.panel.regions(), 2020);
        assert!(share.iter().all(|s| (0.0..=1.0).contains(s)));
        assert!(sc.disruptive_share(t.s.panel.regions(), 2019).iter().all(|s| *s == 0.0));
    }

    #[test]
    fn in_sample_path_tracks_the_mean() {
        let t = setup(13);
        let path = in_sample_prediction_path(&t.est);
        let obs: Vec<f64> = path.mean.iter().map(|p| p.observed).collect();
        let fit: Vec<f64> = path.mean.iter().map(|p| p.fitted).collect();
        assert!(crate::linalg::correlation(&obs, &fit) >= 0.6);
        assert_eq!(path.regions.len(), 18);
        assert_eq!(path.mean.first().unwrap().year, 1998);
        assert_eq!(path.mean.last().unwrap().year, 2018);
    }

    #[test]
    fn in_sample_path_is_exact_without_noise() {
        let s = generate(&DgpConfig::finland_like(14).without_equation_noise()).unwrap();
        let spec = GrowthModelSpec {
            estimator: EstimatorChoice::OlsFe {
                covariance: CovarianceKind::Classical,
            },
            ..GrowthModelSpec::default()
        };
        let dm = build_growth_design(&s.panel, Some(&s.true_ec), Some(&s.national_growth), &spec).unwrap();
        let est = fit_growth(&dm, &spec).unwrap();
        let path = in_sample_prediction_path(&est);
        for p in path
            .mean
            .iter()
            .chain(path.regions.iter().flat_map(|r| r.points.iter()))
        {
            assert!((p.observed - p.fitted).abs() < 1e-8);
        }
        let obs: Vec<f64> = path.mean.iter().map(|p| p.observed).collect();
        let fit: Vec<f64> = path.mean.iter().map(|p| p.fitted).collect();
        assert_eq!(turning_points(&obs), turning_points(&fit));
    }

    #[test]
    fn turning_point_count() {
        assert_eq!(turning_points(&[1.0, 2.0, 1.0, 3.0, 4.0]), 2);
        assert_eq!(turning_points(&[1.0, 2.0, 3.0]), 0);
    }
}
