//! Long-run level equation, error-correction series and the residual-based
//! panel Phillips-Perron cointegration test.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{fit_ols_fe, CoefRow, DesignMatrix, FitResult};
use crate::linalg::least_squares;
use crate::panel::{vars, PanelDataset, TransformKind, TransformTag};

/// Minimum number of periods per region for the cointegration test.
pub const MIN_TEST_PERIODS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongRunSpec {
    /// Level variable on the left-hand side (logged).
    pub response: String,
    /// Level regressors (logged).
    pub regressors: Vec<String>,
    /// Inclusive year window; the whole panel if `None`.
    pub window: Option<(i32, i32)>,
}

impl Default for LongRunSpec {
    fn default() -> Self {
        Self {
            response: vars::GDP.into(),
            regressors: [
                vars::GFCF,
                vars::HIGHEDU,
                vars::UNEMP,
                vars::PATSTOCK,
                vars::RD_PER_BUS,
                vars::RD_PER_PUB,
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongRunEstimate {
    pub regions: Vec<String>,
    pub first_year: i32,
    pub last_year: i32,
    /// Coefficient names in `log(<var>)` form.
    pub names: Vec<String>,
    pub delta: Vec<f64>,
    pub delta_se: Vec<f64>,
    pub mu: Vec<f64>,
    /// Region-major error-correction series over `first_year..=last_year`.
    pub ec: Vec<f64>,
    pub r_squared: f64,
    /// Per-region residuals of the first-differenced regression, used for
    /// the long-run variance weights of the panel test.
    pub diff_residuals: Vec<Vec<f64>>,
    pub n_regressors: usize,
    /// How the residuals were produced; selects the adjustment constants.
    pub first_stage: FirstStage,
}

impl LongRunEstimate {
    pub fn n_years(&self) -> usize {
        (self.last_year - self.first_year + 1) as usize
    }

    pub fn ec_at(&self, region: usize, year: i32) -> Option<f64> {
        if year < self.first_year || year > self.last_year || region >= self.regions.len() {
            return None;
        }
        Some(self.ec[region * self.n_years() + (year - self.first_year) as usize])
    }

    pub fn ec_path(&self, region: usize) -> &[f64] {
        let t = self.n_years();
        &self.ec[region * t..(region + 1) * t]
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.delta[i])
    }

    pub fn coef_table(&self) -> Vec<CoefRow> {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let t = self.delta[i] / self.delta_se[i];
                CoefRow {
                    name: n.clone(),
                    estimate: self.delta[i],
                    std_error: self.delta_se[i],
                    t_stat: t,
                    p_value: crate::estimators::Inference::Normal.two_sided_p(t),
                }
            })
            .collect()
    }

    /// Wraps an already computed residual series, e.g. for testing a
    /// candidate equilibrium error directly. `n_regressors` selects the
    /// row of the adjustment table; the long-run variance weights come
    /// from the first differences of the series.
    pub fn from_residuals(
        regions: Vec<String>,
        first_year: i32,
        paths: &[Vec<f64>],
        n_regressors: usize,
    ) -> Result<Self> {
        let t = paths.first().map(|p| p.len()).unwrap_or(0);
        if paths.len() != regions.len() || paths.iter().any(|p| p.len() != t) || t == 0 {
            return Err(Error::InvalidArgument("residual paths must be balanced".into()));
        }
        let diff_residuals = paths
            .iter()
            .map(|p| p.windows(2).map(|w| w[1] - w[0]).collect())
            .collect();
        Ok(Self {
            mu: vec![0.0; regions.len()],
            regions,
            first_year,
            last_year: first_year + t as i32 - 1,
            names: Vec::new(),
            delta: Vec::new(),
            delta_se: Vec::new(),
            ec: paths.concat(),
            r_squared: f64::NAN,
            diff_residuals,
            n_regressors,
            first_stage: FirstStage::UnitByUnit,
        })
    }
}

/// Fixed-effects regression of log levels; the residual including the
/// region effect is the error-correction series.
pub fn fit_longrun(ds: &PanelDataset, spec: &LongRunSpec) -> Result<LongRunEstimate> {
    let ds = match spec.window {
        Some((a, b)) => ds.slice_years(a, b)?,
        None => ds.clone(),
    };
    let n = ds.n_regions();
    let t = ds.n_years();
    let log_of = |var: &str| -> Result<Vec<f64>> {
        let s = ds.derive(&TransformTag::new(TransformKind::Log, var))?;
        s.values()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| {
                    Error::InvalidPanel(format!(
                        "long-run variable `{var}` is missing for region `{}`, year {}",
                        ds.regions()[i / t],
                        ds.first_year() + (i % t) as i32
                    ))
                })
            })
            .collect()
    };
    let y = log_of(&spec.response)?;
    let zs: Vec<Vec<f64>> = spec.regressors.iter().map(|v| log_of(v)).collect::<Result<_>>()?;
    let names: Vec<String> = spec.regressors.iter().map(|v| format!("log({v})")).collect();

    let row_region: Vec<usize> = (0..n * t).map(|i| i / t).collect();
    let row_year: Vec<i32> = (0..n * t).map(|i| ds.first_year() + (i % t) as i32).collect();
    let mut dm = DesignMatrix::new(
        ds.regions().to_vec(),
        row_region,
        row_year,
        format!("log({})", spec.response),
        y.iter().map(|v| Some(*v)).collect(),
    )?;
    for (name, z) in names.iter().zip(&zs) {
        dm.push_column(name.clone(), z.iter().map(|v| Some(*v)).collect())?;
    }
    let fit: FitResult = fit_ols_fe(&dm, false)?;

    // rows come back sorted by (region, year) and the panel is complete
    let ec: Vec<f64> = fit.rows.iter().map(|r| r.residual).collect();
    let diff_residuals = (0..n)
        .map(|r| {
            let dy: Vec<f64> = (1..t).map(|s| y[r * t + s] - y[r * t + s - 1]).collect();
            let dz: Vec<Vec<f64>> = zs
                .iter()
                .map(|z| (1..t).map(|s| z[r * t + s] - z[r * t + s - 1]).collect())
                .collect();
            differenced_residuals(&dy, &dz)
        })
        .collect();

    Ok(LongRunEstimate {
        regions: ds.regions().to_vec(),
        first_year: ds.first_year(),
        last_year: ds.last_year(),
        delta_se: names.iter().map(|n| fit.std_error(n).unwrap()).collect(),
        delta: fit.coefficients.clone(),
        names,
        mu: fit.region_effects.iter().map(|m| m.unwrap()).collect(),
        ec,
        r_squared: fit.r_squared,
        diff_residuals,
        n_regressors: spec.regressors.len(),
        first_stage: FirstStage::Pooled,
    })
}

/// Residuals of Δy on Δz without intercept; Δy itself if the regression
/// cannot be run.
fn differenced_residuals(dy: &[f64], dz: &[Vec<f64>]) -> Vec<f64> {
    if dz.is_empty() || dy.len() <= dz.len() {
        return dy.to_vec();
    }
    let x = DMatrix::from_fn(dy.len(), dz.len(), |i, j| dz[j][i]);
    let y = DVector::from_column_slice(dy);
    let names: Vec<String> = (0..dz.len()).map(|j| format!("dz{j}")).collect();
    match least_squares(&x, &y, &names) {
        Ok(ls) => (y - x * ls.beta).iter().copied().collect(),
        Err(_) => dy.to_vec(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Fixed(usize),
    /// floor(4 (T/100)^(2/9))
    Automatic,
}

impl Bandwidth {
    pub fn resolve(self, periods: usize) -> usize {
        match self {
            Bandwidth::Fixed(b) => b,
            Bandwidth::Automatic => (4.0 * (periods as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PpVariant {
    /// Pooled within-dimension t statistic.
    Panel,
    /// Between-dimension (group-mean) t statistic.
    GroupMean,
}

impl PpVariant {
    pub fn key(self) -> &'static str {
        match self {
            PpVariant::Panel => "panel_pp_t",
            PpVariant::GroupMean => "group_pp_t",
        }
    }

    fn from_key(s: &str) -> Option<Self> {
        match s {
            "panel_pp_t" => Some(PpVariant::Panel),
            "group_pp_t" => Some(PpVariant::GroupMean),
            _ => None,
        }
    }
}

/// The levels regression behind the residuals under test.
///
/// Pedroni's constants assume a separate regression per unit, which
/// overfits each residual path. The pooled fixed-effects regression used
/// for the error-correction term shares one slope vector across regions,
/// so its residuals stay much closer to a demeaned random walk under the
/// null and need their own constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FirstStage {
    UnitByUnit,
    Pooled,
}

impl FirstStage {
    pub fn key(self) -> &'static str {
        match self {
            FirstStage::UnitByUnit => "unit",
            FirstStage::Pooled => "pooled",
        }
    }

    fn from_key(s: &str) -> Option<Self> {
        match s {
            "unit" => Some(FirstStage::UnitByUnit),
            "pooled" => Some(FirstStage::Pooled),
            _ => None,
        }
    }
}

/// Mean and variance used to standardize the raw statistic, keyed by
/// variant, first stage, number of long-run regressors and sample length. Between
/// tabulated lengths the constants are interpolated linearly in 1/T;
/// outside the grid the nearest length is used.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdjustmentTable {
    entries: BTreeMap<(PpVariant, FirstStage, usize), BTreeMap<usize, (f64, f64)>>,
}

const BUNDLED_TABLE: &str = include_str!("../data/pp_adjustment.csv");

impl AdjustmentTable {
    /// The table shipped in `data/pp_adjustment.csv`.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_TABLE).expect("bundled adjustment table is well formed")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut table = Self::default();
        for rec in rdr.records() {
            let rec = rec?;
            let bad = || Error::InvalidArgument(format!("malformed adjustment row {rec:?}"));
            let variant = PpVariant::from_key(rec.get(0).ok_or_else(bad)?).ok_or_else(bad)?;
            let stage = FirstStage::from_key(rec.get(1).ok_or_else(bad)?).ok_or_else(bad)?;
            let m: usize = rec.get(2).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let periods: usize = rec.get(3).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let mean: f64 = rec.get(4).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let var: f64 = rec.get(5).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            if !(var > 0.0) || periods == 0 {
                return Err(bad());
            }
            table.insert(variant, stage, m, periods, mean, var);
        }
        Ok(table)
    }

    pub fn insert(
        &mut self,
        variant: PpVariant,
        stage: FirstStage,
        regressors: usize,
        periods: usize,
        mean: f64,
        variance: f64,
    ) {
        self.entries
            .entry((variant, stage, regressors))
            .or_default()
            .insert(periods, (mean, variance));
    }

    pub fn get(&self, variant: PpVariant, stage: FirstStage, regressors: usize, periods: usize) -> Result<(f64, f64)> {
        let grid = self
            .entries
            .get(&(variant, stage, regressors))
            .filter(|g| !g.is_empty())
            .ok_or(Error::MissingAdjustmentConstants {
                regressors,
                variant: format!("{} ({} first stage)", variant.key(), stage.key()),
            })?;
        if let Some(v) = grid.get(&periods) {
            return Ok(*v);
        }
        let below = grid.range(..periods).next_back();
        let above = grid.range(periods..).next();
        Ok(match (below, above) {
            (Some((&t0, &(m0, v0))), Some((&t1, &(m1, v1)))) => {
                let x = |t: usize| 1.0 / t as f64;
                let w = (x(periods) - x(t0)) / (x(t1) - x(t0));
                (m0 + w * (m1 - m0), v0 + w * (v1 - v0))
            }
            (Some((_, v)), None) | (None, Some((_, v))) => *v,
            (None, None) => unreachable!(),
        })
    }

    pub fn to_csv(&self, header_comment: &str) -> String {
        let mut out = String::new();
        for line in header_comment.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str("variant,first_stage,regressors,periods,mean,variance\n");
        for ((v, s, m), grid) in &self.entries {
            for (t, (mean, var)) in grid {
                out.push_str(&format!("{},{},{m},{t},{mean:.6},{var:.6}\n", v.key(), s.key()));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CointegrationTestResult {
    pub variant: PpVariant,
    pub first_stage: FirstStage,
    pub raw_statistic: f64,
    pub standardized_statistic: f64,
    pub adjustment_constants: (f64, f64),
    pub bandwidth: usize,
    pub regions: usize,
    pub periods: usize,
    pub decision_at_5pct: bool,
}

/// Lower-tail 5% standard normal quantile.
pub const CRITICAL_5PCT: f64 = -1.6448536269514729;

/// Bartlett-kernel long-run variance, divisor = series length.
pub fn bartlett_lrv(u: &[f64], bandwidth: usize) -> f64 {
    let n = u.len() as f64;
    let gamma = |s: usize| u[s..].iter().zip(u).map(|(a, b)| a * b).sum::<f64>() / n;
    let mut v = gamma(0);
    for s in 1..=bandwidth.min(u.len().saturating_sub(1)) {
        v += 2.0 * (1.0 - s as f64 / (bandwidth as f64 + 1.0)) * gamma(s);
    }
    v
}

/// Per-region ingredients of the Phillips-Perron statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPp {
    /// Σ e_{t−1} Δe_t
    pub cross: f64,
    /// Σ e_{t−1}²
    pub lag_sq: f64,
    /// Serial-correlation correction ½(σ² − s²).
    pub lambda: f64,
    /// Long-run variance of the AR(1) residuals.
    pub sigma2: f64,
    /// Long-run variance of the differenced-regression residuals.
    pub l2: f64,
    /// Number of (e_{t−1}, e_t) pairs.
    pub pairs: usize,
}

impl UnitPp {
    pub fn compute(e: &[f64], diff_resid: &[f64], bandwidth: usize) -> Self {
        let pairs = e.len() - 1;
        let (mut cross, mut lag_sq, mut lead_lag) = (0.0, 0.0, 0.0);
        for w in e.windows(2) {
            cross += w[0] * (w[1] - w[0]);
            lag_sq += w[0] * w[0];
            lead_lag += w[0] * w[1];
        }
        let gamma = lead_lag / lag_sq;
        let u: Vec<f64> = e.windows(2).map(|w| w[1] - gamma * w[0]).collect();
        let s2 = u.iter().map(|v| v * v).sum::<f64>() / pairs as f64;
        let sigma2 = bartlett_lrv(&u, bandwidth);
        let l2 = bartlett_lrv(diff_resid, bandwidth);
        Self {
            cross,
            lag_sq,
            lambda: 0.5 * (sigma2 - s2),
            sigma2,
            l2,
            pairs,
        }
    }

    /// Corrected numerator Σ (e_{t−1}Δe_t − λ).
    pub fn numerator(&self) -> f64 {
        self.cross - self.pairs as f64 * self.lambda
    }

    /// Individual PP t ratio used by the group-mean statistic.
    pub fn t_ratio(&self) -> f64 {
        self.numerator() / (self.sigma2 * self.lag_sq).sqrt()
    }
}

/// Pooled panel PP t statistic over per-region ingredients.
pub fn panel_pp_statistic(units: &[UnitPp]) -> f64 {
    let n = units.len() as f64;
    let sigma_tilde = units.iter().map(|u| u.sigma2 / u.l2).sum::<f64>() / n;
    let num: f64 = units.iter().map(|u| u.numerator() / u.l2).sum();
    let den: f64 = sigma_tilde * units.iter().map(|u| u.lag_sq / u.l2).sum::<f64>();
    num / den.sqrt()
}

pub fn group_pp_statistic(units: &[UnitPp]) -> f64 {
    units.iter().map(|u| u.t_ratio()).sum()
}

/// Residual-based panel cointegration test (H0: no cointegration).
pub fn pedroni_pp_test(
    ec: &LongRunEstimate,
    bandwidth: Bandwidth,
    variant: PpVariant,
    table: &AdjustmentTable,
) -> Result<CointegrationTestResult> {
    let periods = ec.n_years();
    if periods < MIN_TEST_PERIODS {
        return Err(Error::InsufficientTimeLength {
            required: MIN_TEST_PERIODS,
            actual: periods,
        });
    }
    let (mean, var) = table.get(variant, ec.first_stage, ec.n_regressors, periods)?;
    let bw = bandwidth.resolve(periods);
    let units: Vec<UnitPp> = (0..ec.regions.len())
        .map(|r| UnitPp::compute(ec.ec_path(r), &ec.diff_residuals[r], bw))
        .collect();
    if units.iter().any(|u| !(u.lag_sq > 0.0 && u.l2 > 0.0 && u.sigma2 > 0.0)) {
        return Err(Error::InvalidArgument(
            "degenerate residual series (zero variance) in cointegration test".into(),
        ));
    }
    let n = units.len() as f64;
    let (raw, standardized) = match variant {
        PpVariant::Panel => {
            let z = panel_pp_statistic(&units);
            (z, (z - mean * n.sqrt()) / var.sqrt())
        }
        PpVariant::GroupMean => {
            let z = group_pp_statistic(&units);
            (z, (z / n.sqrt() - mean * n.sqrt()) / var.sqrt())
        }
    };
    Ok(CointegrationTestResult {
        variant,
        first_stage: ec.first_stage,
        raw_statistic: raw,
        standardized_statistic: standardized,
        adjustment_constants: (mean, var),
        bandwidth: bw,
        regions: units.len(),
        periods,
        decision_at_5pct: standardized < CRITICAL_5PCT,
    })
}

/// Panel width used when simulating pooled-first-stage constants. The
/// pooled slope estimate, and with it the constants, depend weakly on the
/// number of regions; this matches the 18-region application.
pub const POOLED_REFERENCE_WIDTH: usize = 18;

fn random_walk(rng: &mut ChaCha8Rng, periods: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (0..periods)
        .map(|_| {
            let s: f64 = StandardNormal.sample(rng);
            acc += s;
            acc
        })
        .collect()
}

fn first_differences(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

fn demeaned(x: &[f64]) -> Vec<f64> {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - m).collect()
}

/// Levels residuals and differenced residuals for one simulated null panel
/// of `width` units (a single unit when the first stage is unit-by-unit).
fn null_panel_residuals(
    rng: &mut ChaCha8Rng,
    stage: FirstStage,
    regressors: usize,
    periods: usize,
    width: usize,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let units: Vec<(Vec<f64>, Vec<Vec<f64>>)> = (0..width)
        .map(|_| {
            let y = random_walk(rng, periods);
            let xs = (0..regressors).map(|_| random_walk(rng, periods)).collect();
            (y, xs)
        })
        .collect();
    let names: Vec<String> = (0..=regressors).map(|j| format!("c{j}")).collect();
    let levels: Vec<Option<Vec<f64>>> = match stage {
        FirstStage::UnitByUnit => units
            .iter()
            .map(|(y, xs)| {
                let x = DMatrix::from_fn(periods, regressors + 1, |i, j| if j == 0 { 1.0 } else { xs[j - 1][i] });
                let yv = DVector::from_column_slice(y);
                least_squares(&x, &yv, &names)
                    .ok()
                    .map(|ls| (yv - &x * ls.beta).iter().copied().collect())
            })
            .collect(),
        FirstStage::Pooled => {
            // within transformation, then one slope vector for all units
            let yd: Vec<f64> = units.iter().flat_map(|(y, _)| demeaned(y)).collect();
            let xd: Vec<Vec<f64>> = (0..regressors)
                .map(|j| units.iter().flat_map(|(_, xs)| demeaned(&xs[j])).collect())
                .collect();
            let yv = DVector::from_vec(yd);
            let resid: Option<Vec<f64>> = if regressors == 0 {
                Some(yv.iter().copied().collect())
            } else {
                let x = DMatrix::from_fn(yv.len(), regressors, |i, j| xd[j][i]);
                least_squares(&x, &yv, &names[1..])
                    .ok()
                    .map(|ls| (&yv - &x * ls.beta).iter().copied().collect())
            };
            match resid {
                Some(r) => r.chunks(periods).map(|c| Some(c.to_vec())).collect(),
                None => vec![None; width],
            }
        }
    };
    units
        .iter()
        .zip(levels)
        .filter_map(|((y, xs), e)| {
            let dz: Vec<Vec<f64>> = xs.iter().map(|x| first_differences(x)).collect();
            e.map(|e| (e, differenced_residuals(&first_differences(y), &dz)))
        })
        .collect()
}

/// Simulates standardization constants under the null of no cointegration:
/// a random walk is regressed on `regressors` independent random walks with
/// an intercept (per unit) or region effects (pooled), and the test
/// ingredients of the residuals are recorded for `units` units. The panel
/// mean/variance follow from a delta-method expansion of the pooled ratio;
/// the group-mean ones are the moments of the individual t ratios.
pub fn simulate_adjustment_constants(
    stage: FirstStage,
    regressors: usize,
    periods: usize,
    units: usize,
    seed: u64,
) -> [(PpVariant, f64, f64); 2] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bw = Bandwidth::Automatic.resolve(periods);
    let width = match stage {
        FirstStage::UnitByUnit => 1,
        FirstStage::Pooled => POOLED_REFERENCE_WIDTH,
    };
    let pairs = (periods - 1) as f64;
    let mut triples = Vec::with_capacity(units);
    let mut t_ratios = Vec::with_capacity(units);
    while triples.len() < units {
        for (e, eta) in null_panel_residuals(&mut rng, stage, regressors, periods, width) {
            let u = UnitPp::compute(&e, &eta, bw);
            if !(u.lag_sq > 0.0 && u.l2 > 0.0 && u.sigma2 > 0.0) {
                continue;
            }
            triples.push([
                u.numerator() / u.l2 / pairs,
                u.lag_sq / u.l2 / (pairs * pairs),
                u.sigma2 / u.l2,
            ]);
            t_ratios.push(u.t_ratio());
        }
    }
    let n = triples.len() as f64;
    let mean: Vec<f64> = (0..3).map(|j| triples.iter().map(|t| t[j]).sum::<f64>() / n).collect();
    let mut cov = [[0.0; 3]; 3];
    for t in &triples {
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += (t[i] - mean[i]) * (t[j] - mean[j]) / (n - 1.0);
            }
        }
    }
    let (a, b, c) = (mean[0], mean[1], mean[2]);
    let mu = a / (b * c).sqrt();
    let grad = [
        1.0 / (b * c).sqrt(),
        -0.5 * a / (b.powf(1.5) * c.sqrt()),
        -0.5 * a / (b.sqrt() * c.powf(1.5)),
    ];
    let mut nu = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            nu += grad[i] * grad[j] * cov[i][j];
        }
    }
    let tm = t_ratios.iter().sum::<f64>() / t_ratios.len() as f64;
    let tv = t_ratios.iter().map(|t| (t - tm).powi(2)).sum::<f64>() / (t_ratios.len() as f64 - 1.0);
    [(PpVariant::Panel, mu, nu), (PpVariant::GroupMean, tm, tv)]
}
