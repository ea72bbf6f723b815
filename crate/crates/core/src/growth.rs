//! Short-run growth equation with common factor and error correction, and
//! the auxiliary autoregressive equations for the R&I inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    fit_fgls, fit_ols_fe_with, wald_equality, CovarianceKind, DesignMatrix, FglsConfig, FitResult, WaldTestResult,
};
use crate::longrun::LongRunEstimate;
use crate::panel::{vars, NationalSeries, PanelDataset, TransformKind, TransformTag};

pub const FACTOR_COLUMN: &str = "F";
const FACTOR_INTERACTION_PREFIX: &str = "F_x_";

/// Name of the heterogeneous loading column for a region.
pub fn factor_column(region: &str) -> String {
    format!("{FACTOR_INTERACTION_PREFIX}{region}")
}

pub fn ec_column(lag: usize) -> String {
    format!("ec_l{lag}")
}

/// A transformed, lagged panel regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortRunVar {
    pub variable: String,
    pub transform: TransformKind,
    pub lag: usize,
}

impl ShortRunVar {
    pub fn log_diff(variable: &str, lag: usize) -> Self {
        Self {
            variable: variable.into(),
            transform: TransformKind::LogDiff,
            lag,
        }
    }

    pub fn log(variable: &str, lag: usize) -> Self {
        Self {
            variable: variable.into(),
            transform: TransformKind::Log,
            lag,
        }
    }

    /// Column name such as `dlog_GFCF_l1` or `log_BF_l1`.
    pub fn column_name(&self) -> String {
        let stem = match self.transform {
            TransformKind::Raw => self.variable.clone(),
            TransformKind::Log => format!("log_{}", self.variable),
            TransformKind::LogDiff => format!("dlog_{}", self.variable),
            TransformKind::Diff => format!("d_{}", self.variable),
            TransformKind::PctChange => format!("pct_{}", self.variable),
            TransformKind::Lag(_) => format!("lag_{}", self.variable),
        };
        format!("{stem}_l{}", self.lag)
    }

    fn validate(&self) -> Result<()> {
        if self.lag == 0 {
            return Err(Error::InvalidArgument(format!(
                "regressor `{}` must be lagged at least one period",
                self.variable
            )));
        }
        if matches!(self.transform, TransformKind::Lag(_)) {
            return Err(Error::InvalidArgument(
                "use the `lag` field instead of a lag transform".into(),
            ));
        }
        Ok(())
    }

    /// Earliest offset (in years) this column reads, counting the extra year
    /// a difference needs.
    fn reach(&self) -> usize {
        match self.transform {
            TransformKind::Diff | TransformKind::LogDiff | TransformKind::PctChange => self.lag + 1,
            _ => self.lag,
        }
    }

    /// Values of the transformed series aligned so that row t holds the
    /// value at t − lag.
    pub fn values(&self, ds: &PanelDataset) -> Result<Vec<Option<f64>>> {
        let base = ds.derive(&TransformTag::new(self.transform, self.variable.clone()))?;
        Ok(lag_aligned(base.values(), ds.n_years(), self.lag))
    }
}

pub(crate) fn lag_aligned(values: &[Option<f64>], n_years: usize, lag: usize) -> Vec<Option<f64>> {
    (0..values.len())
        .map(|i| {
            let t = i % n_years;
            if t >= lag {
                values[i - lag]
            } else {
                None
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommonFactor {
    None,
    /// One loading shared by all regions.
    Homogeneous,
    /// One loading per region, via region-dummy × factor interactions.
    Heterogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EstimatorChoice {
    OlsFe { covariance: CovarianceKind },
    Fgls(FglsConfig),
}

impl EstimatorChoice {
    pub fn fgls() -> Self {
        EstimatorChoice::Fgls(FglsConfig::default())
    }

    pub fn ols_clustered() -> Self {
        EstimatorChoice::OlsFe {
            covariance: CovarianceKind::Clustered,
        }
    }

    pub fn fit(&self, dm: &DesignMatrix) -> Result<FitResult> {
        match self {
            EstimatorChoice::OlsFe { covariance } => fit_ols_fe_with(dm, *covariance),
            EstimatorChoice::Fgls(cfg) => fit_fgls(dm, cfg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthModelSpec {
    pub short_run: Vec<ShortRunVar>,
    pub common_factor: CommonFactor,
    /// Label of the national growth series (percent per year).
    pub factor_name: String,
    pub ec_lag: Option<usize>,
    pub window: Option<(i32, i32)>,
    pub estimator: EstimatorChoice,
    /// Starting years of the 3-year BF coefficient bins.
    pub time_varying_bf: Option<Vec<i32>>,
}

impl Default for GrowthModelSpec {
    fn default() -> Self {
        Self::table_column(5).unwrap()
    }
}

impl GrowthModelSpec {
    pub fn short_run_default() -> Vec<ShortRunVar> {
        vec![
            ShortRunVar::log_diff(vars::GFCF, 1),
            ShortRunVar::log_diff(vars::UNEMP, 1),
            ShortRunVar::log(vars::RD_EXP_BUS, 1),
            ShortRunVar::log(vars::RD_EXP_PUB, 1),
            ShortRunVar::log(vars::PATENT, 1),
            ShortRunVar::log(vars::BF, 1),
        ]
    }

    /// The six reference specifications: (1) no factor, no ec; (2) common
    /// loading; (3) region loadings; (4) plus ec, all OLS with clustered
    /// errors; (5) as (4) under FGLS; (6) as (5) on 2008–2018.
    pub fn table_column(column: usize) -> Result<Self> {
        let base = Self {
            short_run: Self::short_run_default(),
            common_factor: CommonFactor::None,
            factor_name: "national_gdp_growth".into(),
            ec_lag: None,
            window: None,
            estimator: EstimatorChoice::ols_clustered(),
            time_varying_bf: None,
        };
        Ok(match column {
            1 => base,
            2 => Self {
                common_factor: CommonFactor::Homogeneous,
                ..base
            },
            3 => Self {
                common_factor: CommonFactor::Heterogeneous,
                ..base
            },
            4 => Self {
                common_factor: CommonFactor::Heterogeneous,
                ec_lag: Some(3),
                ..base
            },
            5 => Self {
                common_factor: CommonFactor::Heterogeneous,
                ec_lag: Some(3),
                estimator: EstimatorChoice::fgls(),
                ..base
            },
            6 => Self {
                common_factor: CommonFactor::Heterogeneous,
                ec_lag: Some(3),
                estimator: EstimatorChoice::fgls(),
                window: Some((2008, 2018)),
                ..base
            },
            c => return Err(Error::InvalidArgument(format!("no reference specification ({c})"))),
        })
    }

    pub fn validate(&self) -> Result<()> {
        for v in &self.short_run {
            v.validate()?;
        }
        if self.ec_lag == Some(0) {
            return Err(Error::InvalidArgument("error-correction lag must be at least 1".into()));
        }
        if let Some((a, b)) = self.window {
            if a > b {
                return Err(Error::WindowTooShort(format!("window {a}-{b} is empty")));
            }
        }
        Ok(())
    }

    /// Largest number of years any column reaches back.
    pub fn max_lag(&self) -> usize {
        self.short_run
            .iter()
            .map(ShortRunVar::reach)
            .chain(self.ec_lag)
            .max()
            .unwrap_or(0)
    }

    /// Column holding the lagged BF intensity, if the model has one.
    pub fn bf_column(&self) -> Option<String> {
        self.short_run
            .iter()
            .find(|v| v.variable == vars::BF)
            .map(ShortRunVar::column_name)
    }
}

/// Growth response: log difference of GDP per employee.
pub fn growth_response(ds: &PanelDataset) -> Result<Vec<Option<f64>>> {
    Ok(ds
        .derive(&TransformTag::new(TransformKind::LogDiff, vars::GDP))?
        .values()
        .to_vec())
}

pub fn build_growth_design(
    ds: &PanelDataset,
    longrun: Option<&LongRunEstimate>,
    national: Option<&NationalSeries>,
    spec: &GrowthModelSpec,
) -> Result<DesignMatrix> {
    spec.validate()?;
    let n = ds.n_regions();
    let t = ds.n_years();
    let row_region: Vec<usize> = (0..n * t).map(|i| i / t).collect();
    let row_year: Vec<i32> = (0..n * t).map(|i| ds.first_year() + (i % t) as i32).collect();
    let mut dm = DesignMatrix::new(
        ds.regions().to_vec(),
        row_region.clone(),
        row_year.clone(),
        format!("dlog_{}", vars::GDP),
        growth_response(ds)?,
    )?;
    for v in &spec.short_run {
        dm.push_column(v.column_name(), v.values(ds)?)?;
    }
    if let Some(lag) = spec.ec_lag {
        let lr = longrun.ok_or_else(|| Error::MissingArtifact("long-run estimate for the ec term".into()))?;
        let map: Vec<usize> =
            ds.regions()
                .iter()
                .map(|r| {
                    lr.regions.iter().position(|x| x == r).ok_or_else(|| {
                        Error::InvalidArgument(format!("region `{r}` missing from the long-run estimate"))
                    })
                })
                .collect::<Result<_>>()?;
        let col = (0..n * t)
            .map(|i| lr.ec_at(map[row_region[i]], row_year[i] - lag as i32))
            .collect();
        dm.push_column(ec_column(lag), col)?;
    }
    if spec.common_factor != CommonFactor::None {
        let nat = national.ok_or_else(|| Error::MissingArtifact(format!("national series `{}`", spec.factor_name)))?;
        let f: Vec<Option<f64>> = row_year.iter().map(|&y| nat.get(y).map(|v| v / 100.0)).collect();
        match spec.common_factor {
            CommonFactor::Homogeneous => dm.push_column(FACTOR_COLUMN, f)?,
            CommonFactor::Heterogeneous => {
                for (r, name) in ds.regions().iter().enumerate() {
                    let col = f
                        .iter()
                        .zip(&row_region)
                        .map(|(v, &rr)| if rr == r { *v } else { Some(0.0) })
                        .collect();
                    dm.push_column(factor_column(name), col)?;
                }
            }
            CommonFactor::None => unreachable!(),
        }
    }
    if let Some((a, b)) = spec.window {
        if a < ds.first_year() || b > ds.last_year() {
            return Err(Error::WindowTooShort(format!(
                "window {a}-{b} lies outside the panel {}-{}",
                ds.first_year(),
                ds.last_year()
            )));
        }
        dm = dm.restrict_years(a, b);
    }
    let years = dm.usable_years();
    if years.len() < 2 {
        return Err(Error::WindowTooShort(format!(
            "{} usable year(s) after lag trimming (max lag {})",
            years.len(),
            spec.max_lag()
        )));
    }
    Ok(dm)
}

/// Per-period BF coefficient with its confidence band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodCoefficient {
    pub start: i32,
    pub end: i32,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Difference to the baseline period (0 for the baseline itself).
    pub deviation: f64,
    pub deviation_p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub spec: GrowthModelSpec,
    pub fit: FitResult,
    /// Equality of the region loadings; `None` unless loadings are
    /// heterogeneous or when the restriction covariance is singular.
    pub wald_equal_loadings: Option<WaldTestResult>,
    pub relative_rmse: Option<crate::evaluation::EvalReport>,
    pub bf_period_coefficients: Option<Vec<PeriodCoefficient>>,
}

impl GrowthEstimate {
    /// Factor loading of each region, in the fit's region order.
    pub fn loadings(&self) -> Vec<Option<f64>> {
        match self.spec.common_factor {
            CommonFactor::None => vec![None; self.fit.regions.len()],
            CommonFactor::Homogeneous => vec![self.fit.coefficient(FACTOR_COLUMN); self.fit.regions.len()],
            CommonFactor::Heterogeneous => self
                .fit
                .regions
                .iter()
                .map(|r| self.fit.coefficient(&factor_column(r)))
                .collect(),
        }
    }

    pub fn loading_columns(&self) -> Vec<String> {
        match self.spec.common_factor {
            CommonFactor::None => vec![],
            CommonFactor::Homogeneous => vec![FACTOR_COLUMN.to_string()],
            CommonFactor::Heterogeneous => self.fit.regions.iter().map(|r| factor_column(r)).collect(),
        }
    }
}

pub fn fit_growth(design: &DesignMatrix, spec: &GrowthModelSpec) -> Result<GrowthEstimate> {
    let fit = spec.estimator.fit(design)?;
    let mut est = GrowthEstimate {
        spec: spec.clone(),
        fit,
        wald_equal_loadings: None,
        relative_rmse: None,
        bf_period_coefficients: None,
    };
    if spec.common_factor == CommonFactor::Heterogeneous {
        let cols = est.loading_columns();
        let refs: Vec<&str> = cols.iter().map(String::as_str).collect();
        // Each region's score for its own loading sums to zero under
        // region clustering, so the clustered covariance cannot carry this
        // test. HC1 is badly oversized with ~20 rows per loading; the
        // classical covariance of the same coefficients is used instead.
        let classical;
        let basis = if est.fit.covariance_kind == CovarianceKind::Clustered {
            classical = fit_ols_fe_with(design, CovarianceKind::Classical)?;
            &classical
        } else {
            &est.fit
        };
        match wald_equality(basis, &refs) {
            Ok(w) => est.wald_equal_loadings = Some(w),
            Err(Error::SingularRestrictionCovariance { .. }) => {
                log::warn!("loading equality test skipped: restriction covariance is singular")
            }
            Err(e) => return Err(e),
        }
    }
    Ok(est)
}

/// Default bin starts: three-year bins after a pre-2004 baseline.
pub fn default_bf_breakpoints(last_year: i32) -> Vec<i32> {
    (2004..=last_year).step_by(3).collect()
}

/// Interacts the BF column with period dummies. Bins are
/// `[first, b_0 − 1]` (baseline), `[b_0, b_1 − 1]`, …, `[b_k, last]`.
/// With no breakpoints this is `fit_growth` with a single bin.
pub fn fit_growth_time_varying_bf(
    design: &DesignMatrix,
    spec: &GrowthModelSpec,
    breakpoints: &[i32],
) -> Result<GrowthEstimate> {
    let bf = spec
        .bf_column()
        .ok_or_else(|| Error::MissingChannelCoefficient("BF intensity column".into()))?;
    let bf_idx = design
        .column_index(&bf)
        .ok_or_else(|| Error::MissingChannelCoefficient(bf.clone()))?;
    let years = design.usable_years();
    let (first, last) = match (years.first(), years.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(Error::WindowTooShort("no usable rows".into())),
    };
    if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("breakpoints must be strictly increasing".into()));
    }
    let mut bins = Vec::new();
    let mut start = first;
    for &b in breakpoints {
        bins.push((start, b - 1));
        start = b;
    }
    bins.push((start, last));
    let mask = design.usable_mask();
    for &(a, b) in &bins {
        let rows = (0..design.n_rows())
            .filter(|&i| mask[i] && design.row_year[i] >= a && design.row_year[i] <= b)
            .count();
        if rows == 0 {
            return Err(Error::EmptyPeriodBin { start: a, end: b });
        }
    }

    let mut dm = design.clone();
    let interaction = |a: i32| format!("{bf}_x_P{a}");
    for &(a, b) in bins.iter().skip(1) {
        let col = (0..dm.n_rows())
            .map(|i| {
                let y = dm.row_year[i];
                dm.columns[bf_idx][i].map(|v| if y >= a && y <= b { v } else { 0.0 })
            })
            .collect();
        dm.push_column(interaction(a), col)?;
    }
    let mut est = fit_growth(&dm, spec)?;
    let fit = &est.fit;
    let base = fit.index(&bf).unwrap();
    let crit = fit.inference.critical(0.90);
    let periods = bins
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let mut w = vec![(base, 1.0)];
            let mut deviation = 0.0;
            let mut deviation_p_value = 1.0;
            if k > 0 {
                let j = fit.index(&interaction(a)).unwrap();
                w.push((j, 1.0));
                deviation = fit.coefficients[j];
                deviation_p_value = fit.inference.two_sided_p(deviation / fit.covariance[(j, j)].sqrt());
            }
            let estimate: f64 = w.iter().map(|&(i, c)| c * fit.coefficients[i]).sum();
            let se = fit.combination_variance(&w).max(0.0).sqrt();
            PeriodCoefficient {
                start: a,
                end: b,
                estimate,
                ci_low: estimate - crit * se,
                ci_high: estimate + crit * se,
                deviation,
                deviation_p_value,
            }
        })
        .collect();
    est.bf_period_coefficients = Some(periods);
    est.spec.time_varying_bf = Some(breakpoints.to_vec());
    Ok(est)
}

/// Autoregressive equation for one logged R&I input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxModelSpec {
    pub response: String,
    pub ar_lags: Vec<usize>,
    pub short_run: Vec<ShortRunVar>,
    pub window: Option<(i32, i32)>,
    pub estimator: EstimatorChoice,
}

/// Lag of the short-run determinants in the auxiliary equations. Three
/// years keeps every regressor of the two-step-ahead prediction observed.
pub const AUX_DETERMINANT_LAG: usize = 3;

impl AuxModelSpec {
    pub fn for_response(response: &str) -> Self {
        Self {
            response: response.into(),
            ar_lags: vec![3, 4],
            short_run: vec![
                ShortRunVar::log_diff(vars::GFCF, AUX_DETERMINANT_LAG),
                ShortRunVar::log_diff(vars::UNEMP, AUX_DETERMINANT_LAG),
                ShortRunVar::log(vars::BF, AUX_DETERMINANT_LAG),
            ],
            window: None,
            estimator: EstimatorChoice::fgls(),
        }
    }

    /// The three equations feeding the indirect BF channel.
    pub fn defaults() -> Vec<Self> {
        [vars::RD_EXP_BUS, vars::RD_EXP_PUB, vars::PATENT]
            .iter()
            .map(|v| Self::for_response(v))
            .collect()
    }

    pub fn ar_column(&self, lag: usize) -> String {
        ShortRunVar::log(&self.response, lag).column_name()
    }

    pub fn bf_column(&self) -> Option<String> {
        self.short_run
            .iter()
            .find(|v| v.variable == vars::BF)
            .map(ShortRunVar::column_name)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ar_lags.is_empty() || self.ar_lags.iter().any(|&k| !(1..=4).contains(&k)) {
            return Err(Error::InvalidArgument(format!(
                "AR lags for `{}` must be a non-empty subset of 1..=4",
                self.response
            )));
        }
        for v in &self.short_run {
            v.validate()?;
        }
        Ok(())
    }

    pub fn max_lag(&self) -> usize {
        self.ar_lags
            .iter()
            .copied()
            .chain(self.short_run.iter().map(ShortRunVar::reach))
            .max()
            .unwrap_or(0)
    }
}

pub fn build_aux_design(ds: &PanelDataset, spec: &AuxModelSpec) -> Result<DesignMatrix> {
    spec.validate()?;
    let n = ds.n_regions();
    let t = ds.n_years();
    let y = ds.derive(&TransformTag::new(TransformKind::Log, spec.response.clone()))?;
    let mut dm = DesignMatrix::new(
        ds.regions().to_vec(),
        (0..n * t).map(|i| i / t).collect(),
        (0..n * t).map(|i| ds.first_year() + (i % t) as i32).collect(),
        format!("log_{}", spec.response),
        y.values().to_vec(),
    )?;
    let mut lags = spec.ar_lags.clone();
    lags.sort_unstable();
    lags.dedup();
    for k in lags {
        dm.push_column(spec.ar_column(k), lag_aligned(y.values(), t, k))?;
    }
    for v in &spec.short_run {
        dm.push_column(v.column_name(), v.values(ds)?)?;
    }
    if let Some((a, b)) = spec.window {
        dm = dm.restrict_years(a, b);
    }
    if dm.usable_years().len() < 2 {
        return Err(Error::WindowTooShort(format!(
            "auxiliary equation for `{}`",
            spec.response
        )));
    }
    Ok(dm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointCoefficient {
    pub estimate: f64,
    pub std_error: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxEstimate {
    pub spec: AuxModelSpec,
    pub fit: FitResult,
    /// Sum of the AR coefficients with the standard error of the sum.
    pub joint_ar: JointCoefficient,
}

impl AuxEstimate {
    pub fn bf_coefficient(&self) -> Option<f64> {
        self.fit.coefficient(&self.spec.bf_column()?)
    }
}

pub fn fit_aux(ds: &PanelDataset, spec: &AuxModelSpec) -> Result<AuxEstimate> {
    let dm = build_aux_design(ds, spec)?;
    let fit = spec.estimator.fit(&dm)?;
    let w: Vec<(usize, f64)> = spec
        .ar_lags
        .iter()
        .map(|&k| (fit.index(&spec.ar_column(k)).unwrap(), 1.0))
        .collect();
    let estimate: f64 = w.iter().map(|&(i, _)| fit.coefficients[i]).sum();
    let std_error = fit.combination_variance(&w).max(0.0).sqrt();
    let joint_ar = JointCoefficient {
        estimate,
        std_error,
        p_value: fit.inference.two_sided_p(estimate / std_error),
    };
    Ok(AuxEstimate {
        spec: spec.clone(),
        fit,
        joint_ar,
    })
}
