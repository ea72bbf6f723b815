//! Run configuration: a versioned TOML file. Relative paths resolve
//! against the directory holding the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{CovarianceKind, FglsConfig};
use crate::forecast::NationalCoupling;
use crate::growth::{CommonFactor, EstimatorChoice, GrowthModelSpec, ShortRunVar};
use crate::longrun::{Bandwidth, LongRunSpec, PpVariant};
use crate::panel::vars;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    pub data: DataPaths,
    /// Without it the error-correction columns are skipped.
    pub longrun: Option<LongRunBlock>,
    pub growth: GrowthBlock,
    #[serde(default)]
    pub aux: AuxBlock,
    #[serde(default)]
    pub scenarios: Vec<ScenarioBlock>,
    pub r_grid: Option<RGridBlock>,
    #[serde(default)]
    pub decompose: DecomposeBlock,
    pub report: Option<ReportBlock>,
    #[serde(default)]
    pub simulate: SimulateBlock,
    #[serde(default)]
    pub output: OutputBlock,

    /// Directory of the config file; not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
    #[serde(skip)]
    pub source: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    /// `region,year,<var>...` panel through the last in-sample year.
    pub panel: PathBuf,
    /// `year,value` files.
    pub national_growth: PathBuf,
    pub national_unemp: Option<PathBuf>,
    pub national_empl: Option<PathBuf>,
    /// `region,year,traditional,disruptive` funds for the forecast years.
    pub funding: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorName {
    /// OLS-FE with classical covariance.
    Ols,
    OlsClustered,
    OlsRobust,
    Fgls,
    /// FGLS with a region-specific AR(1) coefficient.
    FglsPanelRho,
}

impl EstimatorName {
    pub fn choice(self) -> EstimatorChoice {
        let ols = |covariance| EstimatorChoice::OlsFe { covariance };
        match self {
            EstimatorName::Ols => ols(CovarianceKind::Classical),
            EstimatorName::OlsClustered => ols(CovarianceKind::Clustered),
            EstimatorName::OlsRobust => ols(CovarianceKind::Hc1),
            EstimatorName::Fgls => EstimatorChoice::fgls(),
            EstimatorName::FglsPanelRho => EstimatorChoice::Fgls(FglsConfig {
                ar1: crate::estimators::Ar1Mode::PanelSpecific,
                ..FglsConfig::default()
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongRunBlock {
    #[serde(default = "default_response")]
    pub response: String,
    #[serde(default = "default_longrun_regressors")]
    pub regressors: Vec<String>,
    pub window: Option<(i32, i32)>,
    /// Fixed Bartlett bandwidth; the automatic rule if absent.
    pub bandwidth: Option<usize>,
    #[serde(default = "default_variant")]
    pub variant: PpVariant,
    /// Replacement for the bundled standardization constants.
    pub adjustment_table: Option<PathBuf>,
    /// Error-correction lag in the growth equation.
    #[serde(default = "default_ec_lag")]
    pub ec_lag: usize,
}

fn default_response() -> String {
    vars::GDP.into()
}
fn default_longrun_regressors() -> Vec<String> {
    LongRunSpec::default().regressors
}
fn default_variant() -> PpVariant {
    PpVariant::Panel
}
fn default_ec_lag() -> usize {
    3
}

impl LongRunBlock {
    pub fn spec(&self) -> LongRunSpec {
        LongRunSpec {
            response: self.response.clone(),
            regressors: self.regressors.clone(),
            window: self.window,
        }
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth.map_or(Bandwidth::Automatic, Bandwidth::Fixed)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthColumn {
    pub label: String,
    pub common_factor: CommonFactor,
    #[serde(default)]
    pub ec: bool,
    pub estimator: EstimatorName,
    pub window: Option<(i32, i32)>,
    /// Include in the BF stability (time-varying coefficient) output.
    #[serde(default)]
    pub stability: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthBlock {
    /// Label of the column used for forecasting.
    pub active: String,
    #[serde(default = "GrowthModelSpec::short_run_default")]
    pub short_run: Vec<ShortRunVar>,
    #[serde(default = "default_factor_name")]
    pub factor_name: String,
    /// Starting years of the three-year BF bins; the default bins if absent.
    pub breakpoints: Option<Vec<i32>>,
    pub columns: Vec<GrowthColumn>,
}

fn default_factor_name() -> String {
    crate::synthetic::NATIONAL_GROWTH.into()
}

impl GrowthBlock {
    pub fn spec(&self, column: &GrowthColumn, ec_lag: usize) -> GrowthModelSpec {
        GrowthModelSpec {
            short_run: self.short_run.clone(),
            common_factor: column.common_factor,
            factor_name: self.factor_name.clone(),
            ec_lag: column.ec.then_some(ec_lag),
            window: column.window,
            estimator: column.estimator.choice(),
            time_varying_bf: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxBlock {
    pub responses: Vec<String>,
    pub estimator: EstimatorName,
}

impl Default for AuxBlock {
    fn default() -> Self {
        Self {
            responses: crate::synthetic::AUX_VARS.iter().map(|s| s.to_string()).collect(),
            estimator: EstimatorName::Fgls,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioBlock {
    pub name: String,
    #[serde(default = "one")]
    pub rebound_discount: f64,
    #[serde(default = "one")]
    pub returns_discount: f64,
    #[serde(default)]
    pub national_coupling: NationalCoupling,
}

fn one() -> f64 {
    1.0
}

/// Copies of `base` with each returns discount in `values`, named
/// `r_grid_<r>`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RGridBlock {
    pub base: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeBlock {
    /// Apply the returns discount to the indirect channel as well.
    #[serde(default)]
    pub discount_indirect: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportBlock {
    pub baseline: String,
    pub conservative: String,
    pub in_sample: (i32, i32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Recovery,
    RelativeRmse,
    Wald,
    Cointegration,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    pub reps: usize,
    pub suites: Vec<Suite>,
}

impl Default for SimulateBlock {
    fn default() -> Self {
        Self {
            reps: 100,
            suites: vec![Suite::Recovery, Suite::RelativeRmse, Suite::Wald, Suite::Cointegration],
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Also write SVG line charts next to the forecast CSVs.
    #[serde(default)]
    pub charts: bool,
}

/// A resolved scenario: name plus discounts.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSetting {
    pub name: String,
    pub c: f64,
    pub r: f64,
    pub coupling: NationalCoupling,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let file = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::Config {
            file: file.clone(),
            field: e.span().map_or("-".into(), |s| locate_field(&text, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.source = path.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    fn err(&self, field: &str, message: impl Into<String>) -> Error {
        Error::Config {
            file: self.source.display().to_string(),
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(self.err(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let mut files = vec![
            ("data.panel", &self.data.panel),
            ("data.national_growth", &self.data.national_growth),
        ];
        for (k, p) in [
            ("data.national_unemp", &self.data.national_unemp),
            ("data.national_empl", &self.data.national_empl),
            ("data.funding", &self.data.funding),
        ] {
            if let Some(p) = p {
                files.push((k, p));
            }
        }
        if let Some(t) = self.longrun.as_ref().and_then(|l| l.adjustment_table.as_ref()) {
            files.push(("longrun.adjustment_table", t));
        }
        for (field, p) in files {
            if !self.resolve(p).is_file() {
                return Err(self.err(field, format!("file {} does not exist", self.resolve(p).display())));
            }
        }
        if let Some(l) = &self.longrun {
            if l.ec_lag == 0 {
                return Err(self.err("longrun.ec_lag", "must be at least 1"));
            }
        }
        let labels: Vec<&str> = self.growth.columns.iter().map(|c| c.label.as_str()).collect();
        if self.growth.columns.is_empty() {
            return Err(self.err("growth.columns", "at least one column is required"));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(self.err("growth.columns.label", format!("duplicate label `{l}`")));
            }
        }
        if !labels.contains(&self.growth.active.as_str()) {
            return Err(self.err(
                "growth.active",
                format!("`{}` is not one of the column labels", self.growth.active),
            ));
        }
        let mut names = Vec::new();
        for s in &self.scenarios {
            if names.contains(&s.name.as_str()) {
                return Err(self.err("scenarios.name", format!("duplicate scenario `{}`", s.name)));
            }
            names.push(s.name.as_str());
            for (k, v) in [
                ("rebound_discount", s.rebound_discount),
                ("returns_discount", s.returns_discount),
            ] {
                if !(v > 0.0 && v <= 1.0) {
                    return Err(self.err(
                        &format!("scenarios.{k}"),
                        format!("{v} is outside (0, 1] in `{}`", s.name),
                    ));
                }
            }
        }
        if let Some(g) = &self.r_grid {
            if !names.contains(&g.base.as_str()) {
                return Err(self.err("r_grid.base", format!("unknown scenario `{}`", g.base)));
            }
            if let Some(v) = g.values.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
                return Err(self.err("r_grid.values", format!("{v} is outside (0, 1]")));
            }
        }
        if let Some(r) = &self.report {
            let all = self.scenario_settings();
            for (k, n) in [
                ("report.baseline", &r.baseline),
                ("report.conservative", &r.conservative),
            ] {
                if !all.iter().any(|s| &s.name == n) {
                    return Err(self.err(k, format!("unknown scenario `{n}`")));
                }
            }
            if r.in_sample.0 > r.in_sample.1 {
                return Err(self.err("report.in_sample", "first year after last year"));
            }
        }
        Ok(())
    }

    pub fn active_column(&self) -> &GrowthColumn {
        self.growth
            .columns
            .iter()
            .find(|c| c.label == self.growth.active)
            .unwrap()
    }

    /// Configured scenarios followed by the r-grid expansion.
    pub fn scenario_settings(&self) -> Vec<ScenarioSetting> {
        let mut out: Vec<ScenarioSetting> = self
            .scenarios
            .iter()
            .map(|s| ScenarioSetting {
                name: s.name.clone(),
                c: s.rebound_discount,
                r: s.returns_discount,
                coupling: s.national_coupling,
            })
            .collect();
        if let Some(g) = &self.r_grid {
            let base = out.iter().find(|s| s.name == g.base).cloned().unwrap();
            for &r in &g.values {
                out.push(ScenarioSetting {
                    name: format!("r_grid_{r}"),
                    r,
                    ..base.clone()
                });
            }
        }
        out
    }

    pub fn scenario(&self, name: &str) -> Result<ScenarioSetting> {
        self.scenario_settings()
            .into_iter()
            .find(|s| s.name == name)
            .ok_or_else(|| self.err("scenarios", format!("no scenario named `{name}`")))
    }
}

/// Dotted key path of the table entry enclosing byte offset `at`.
fn locate_field(text: &str, at: usize) -> String {
    let before = &text[..at.min(text.len())];
    let table = before
        .lines()
        .rev()
        .find_map(|l| {
            let l = l.trim();
            l.starts_with('[')
                .then(|| l.trim_matches(|c| c == '[' || c == ']').to_string())
        })
        .unwrap_or_default();
    let line = before.lines().last().unwrap_or("");
    let key = text[before.len() - line.len()..]
        .lines()
        .next()
        .and_then(|l| l.split('=').next())
        .map(|k| k.trim().to_string())
        .filter(|k| !k.starts_with('['))
        .unwrap_or_default();
    match (table.is_empty(), key.is_empty()) {
        (true, _) => key,
        (false, true) => table,
        (false, false) => format!("{table}.{key}"),
    }
}
