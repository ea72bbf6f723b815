//! The pipeline stages. Each reads the configured data and the artifacts
//! of earlier stages from the output directory and writes its own files
//! there; nothing passes between stages in memory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::decomposition::{decompose, funding_share_report, indirect_channels, GrowthDecomposition};
use crate::error::{Error, Result};
use crate::estimators::CovarianceKind;
use crate::evaluation::{
    cointegration_draw, monte_carlo, recovery_draw, relative_rmse, relative_rmse_draw, replicate_seed, wald_draw,
    RECOVERY_BETA_BF, RECOVERY_PHI,
};
use crate::forecast::{
    forecast_growth, in_sample_prediction_path, ForecastInputs, ForecastResult, ForecastScenario, FundingRow,
};
use crate::growth::{
    build_growth_design, default_bf_breakpoints, fit_aux, fit_growth, fit_growth_time_varying_bf, AuxModelSpec,
    CommonFactor, EstimatorChoice, GrowthEstimate, FACTOR_COLUMN,
};
use crate::linalg::{mean, median};
use crate::longrun::{fit_longrun, pedroni_pp_test, AdjustmentTable, LongRunEstimate};
use crate::panel::{
    load_national_csv, load_panel_csv, summarize, write_national_csv, write_panel_csv, NationalSeries, PanelDataset,
};
use crate::synthetic::{generate, DgpConfig, LevelsResidual, Preset, NATIONAL_EMPL, NATIONAL_UNEMP};

use super::config::{RunConfig, ScenarioSetting, Suite};
use super::output::{num, opt, read_json, svg_line_chart, write_json, write_text, Line, Table};

/// Everything a command writes goes below `out`; `written` lists the
/// files in the order they were produced.
pub struct Run<'a> {
    pub cfg: &'a RunConfig,
    pub out: PathBuf,
    pub seed: u64,
    pub written: Vec<PathBuf>,
    pub notices: Vec<String>,
}

impl<'a> Run<'a> {
    pub fn new(cfg: &'a RunConfig, out: PathBuf, seed: u64) -> Self {
        Self {
            cfg,
            out,
            seed,
            written: Vec::new(),
            notices: Vec::new(),
        }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    fn table(&mut self, rel: &str, t: &Table) -> Result<()> {
        let p = self.path(rel);
        t.write(&p)?;
        self.written.push(p);
        Ok(())
    }

    fn json<T: serde::Serialize>(&mut self, rel: &str, v: &T) -> Result<()> {
        let p = self.path(rel);
        write_json(&p, v)?;
        self.written.push(p);
        Ok(())
    }

    fn text(&mut self, rel: &str, s: &str) -> Result<()> {
        let p = self.path(rel);
        write_text(&p, s)?;
        self.written.push(p);
        Ok(())
    }

    fn notice(&mut self, msg: String) {
        eprintln!("notice: {msg}");
        self.notices.push(msg);
    }

    fn panel(&self) -> Result<PanelDataset> {
        load_panel_csv(self.cfg.resolve(&self.cfg.data.panel), &[])
    }

    fn national_growth(&self) -> Result<NationalSeries> {
        load_national_csv(
            self.cfg.resolve(&self.cfg.data.national_growth),
            &self.cfg.growth.factor_name,
        )
    }

    fn optional_national(&self, path: &Option<PathBuf>, name: &str) -> Result<Option<NationalSeries>> {
        path.as_ref()
            .map(|p| load_national_csv(self.cfg.resolve(p), name))
            .transpose()
    }

    fn funding(&self) -> Result<Vec<FundingRow>> {
        let p = self.cfg.data.funding.as_ref().ok_or_else(|| Error::Config {
            file: self.cfg.source.display().to_string(),
            field: "data.funding".into(),
            message: "forecasting needs the funding file".into(),
        })?;
        read_funding_csv(&self.cfg.resolve(p))
    }
}

pub fn read_funding_csv(path: &Path) -> Result<Vec<FundingRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidArgument(format!("{}: {other:?}", path.display())),
    })?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        let row: FundingRow = rec?;
        if !(row.traditional >= 0.0 && row.disruptive >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{}: negative or non-finite funds for `{}` in {}",
                path.display(),
                row.region,
                row.year
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_funding_csv(rows: &[FundingRow], path: &Path) -> Result<()> {
    let mut t = Table::new(&["region", "year", "traditional", "disruptive"]);
    for f in rows {
        // lossless: this is input data, not a report
        t.push(&[
            f.region.clone(),
            f.year.to_string(),
            f.traditional.to_string(),
            f.disruptive.to_string(),
        ]);
    }
    t.write(path)
}

// ---------------------------------------------------------------- ingest

pub fn cmd_ingest(run: &mut Run) -> Result<()> {
    let ds = run.panel()?;
    let nat = run.national_growth()?;
    run.optional_national(&run.cfg.data.national_unemp, NATIONAL_UNEMP)?;
    run.optional_national(&run.cfg.data.national_empl, NATIONAL_EMPL)?;
    if run.cfg.data.funding.is_some() {
        run.funding()?;
    }
    let mut t = Table::new(&["variable", "unit", "obs", "mean", "sd", "min", "max"]);
    for s in summarize(&ds) {
        let unit = ds.unit(&s.variable).unwrap_or("").to_string();
        t.push(&[
            s.variable.clone(),
            unit,
            s.obs.to_string(),
            num(s.mean),
            num(s.sd),
            num(s.min),
            num(s.max),
        ]);
    }
    run.table("ingest/summary.csv", &t)?;
    let vars: Vec<&str> = ds.variables().collect();
    let p = run.path("ingest/panel.csv");
    super::output::ensure_parent(&p)?;
    write_panel_csv(&ds, &p, &vars)?;
    run.written.push(p);
    println!(
        "panel: {} regions x {} years ({}-{}), {} variables; national growth {}-{}",
        ds.n_regions(),
        ds.n_years(),
        ds.first_year(),
        ds.last_year(),
        vars.len(),
        nat.first_year,
        nat.last_year()
    );
    Ok(())
}

// -------------------------------------------------------------- estimate

const ACTIVE_GROWTH: &str = "estimate/growth_active.json";
const LONGRUN_JSON: &str = "estimate/longrun.json";

fn estimator_label(e: &EstimatorChoice) -> String {
    match e {
        EstimatorChoice::OlsFe { covariance } => format!("ols_fe ({covariance:?})").to_lowercase(),
        EstimatorChoice::Fgls(_) => "fgls".into(),
    }
}

pub fn cmd_estimate(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let ds = run.panel()?;
    let nat = run.national_growth()?;

    let longrun = match &cfg.longrun {
        Some(block) => {
            let lr = fit_longrun(&ds, &block.spec())?;
            let table = match &block.adjustment_table {
                Some(p) => AdjustmentTable::load(cfg.resolve(p))?,
                None => AdjustmentTable::bundled(),
            };
            let test = pedroni_pp_test(&lr, block.bandwidth(), block.variant, &table)?;
            let mut t = Table::new(&["coefficient", "estimate", "std_error", "t_stat", "p_value"]);
            for c in lr.coef_table() {
                t.push(&[c.name, num(c.estimate), num(c.std_error), num(c.t_stat), num(c.p_value)]);
            }
            run.table("estimate/longrun.csv", &t)?;
            let mut t = Table::new(&["statistic", "value"]);
            t.push(&["variant", test.variant.key()]);
            t.push(&["first_stage", test.first_stage.key()]);
            t.push(&["raw_statistic".into(), num(test.raw_statistic)]);
            t.push(&["standardized_statistic".into(), num(test.standardized_statistic)]);
            t.push(&["adjustment_mean".into(), num(test.adjustment_constants.0)]);
            t.push(&["adjustment_variance".into(), num(test.adjustment_constants.1)]);
            t.push(&["bandwidth".into(), test.bandwidth.to_string()]);
            t.push(&["regions".into(), test.regions.to_string()]);
            t.push(&["periods".into(), test.periods.to_string()]);
            t.push(&["reject_no_cointegration_5pct".into(), test.decision_at_5pct.to_string()]);
            t.push(&["levels_r_squared".into(), num(lr.r_squared)]);
            run.table("estimate/cointegration.csv", &t)?;
            let mut t = Table::new(&["region", "year", "ec"]);
            for (r, region) in lr.regions.iter().enumerate() {
                for (k, v) in lr.ec_path(r).iter().enumerate() {
                    t.push(&[region.clone(), (lr.first_year + k as i32).to_string(), num(*v)]);
                }
            }
            run.table("estimate/ec.csv", &t)?;
            run.json(LONGRUN_JSON, &lr)?;
            Some((lr, block.ec_lag))
        }
        None => {
            run.notice("no [longrun] block: error-correction columns are skipped".into());
            None
        }
    };

    let mut fits: Vec<(String, GrowthEstimate)> = Vec::new();
    for col in &cfg.growth.columns {
        if col.ec && longrun.is_none() {
            run.notice(format!("column {} needs the error-correction term; skipped", col.label));
            continue;
        }
        let spec = cfg.growth.spec(col, longrun.as_ref().map_or(3, |l| l.1));
        let dm = build_growth_design(&ds, longrun.as_ref().map(|l| &l.0), Some(&nat), &spec)?;
        let mut est = fit_growth(&dm, &spec)?;
        est.relative_rmse = Some(relative_rmse(&est, &ds)?);
        if col.stability {
            let bp = cfg
                .growth
                .breakpoints
                .clone()
                .unwrap_or_else(|| default_bf_breakpoints(ds.last_year()));
            est.bf_period_coefficients = fit_growth_time_varying_bf(&dm, &spec, &bp)?.bf_period_coefficients;
        }
        fits.push((col.label.clone(), est));
    }

    run.table("estimate/table3.csv", &table3(&fits))?;

    let mut lt = Table::new(&["column", "region", "loading", "std_error"]);
    let mut wt = Table::new(&["column", "statistic", "dof", "p_value", "hypothesis"]);
    let mut st = Table::new(&[
        "column",
        "start",
        "end",
        "estimate",
        "ci90_low",
        "ci90_high",
        "deviation",
        "deviation_p_value",
    ]);
    for (label, est) in &fits {
        for (region, col) in est.fit.regions.iter().zip(loading_names(est)) {
            lt.push(&[
                label.clone(),
                region.clone(),
                opt(est.fit.coefficient(&col)),
                opt(est.fit.std_error(&col)),
            ]);
        }
        if let Some(w) = &est.wald_equal_loadings {
            wt.push(&[
                label.clone(),
                num(w.statistic),
                w.dof.to_string(),
                num(w.p_value),
                w.hypothesis.clone(),
            ]);
        }
        for p in est.bf_period_coefficients.iter().flatten() {
            st.push(&[
                label.clone(),
                p.start.to_string(),
                p.end.to_string(),
                num(p.estimate),
                num(p.ci_low),
                num(p.ci_high),
                num(p.deviation),
                num(p.deviation_p_value),
            ]);
        }
    }
    run.table("estimate/loadings.csv", &lt)?;
    run.table("estimate/wald.csv", &wt)?;
    run.table("estimate/stability.csv", &st)?;

    let estimator = cfg.aux.estimator.choice();
    let mut aux = Vec::new();
    for response in &cfg.aux.responses {
        let spec = AuxModelSpec {
            estimator,
            ..AuxModelSpec::for_response(response)
        };
        aux.push(fit_aux(&ds, &spec)?);
    }
    let mut t = Table::new(
        &std::iter::once("row".to_string())
            .chain(cfg.aux.responses.iter().cloned())
            .collect::<Vec<_>>(),
    );
    let names: Vec<String> = aux
        .first()
        .map(|a| a.spec.short_run.iter().map(|v| v.column_name()).collect())
        .unwrap_or_default();
    let mut row = |label: &str, f: &dyn Fn(&crate::growth::AuxEstimate) -> String| {
        let mut r = vec![label.to_string()];
        r.extend(aux.iter().map(f));
        t.push(&r);
    };
    row("ar_joint", &|a| num(a.joint_ar.estimate));
    row("ar_joint_se", &|a| num(a.joint_ar.std_error));
    for n in &names {
        row(n, &|a| opt(a.fit.coefficient(n)));
        row(&format!("{n}_se"), &|a| opt(a.fit.std_error(n)));
    }
    row("obs", &|a| a.fit.nobs.to_string());
    row("r_squared", &|a| num(a.fit.r_squared));
    row("estimator", &|a| estimator_label(&a.spec.estimator));
    run.table("estimate/table4.csv", &t)?;

    match fits.iter().find(|(l, _)| *l == cfg.growth.active) {
        Some((_, est)) => run.json(ACTIVE_GROWTH, est)?,
        None => run.notice(format!(
            "active column {} was not estimated; forecasting is unavailable",
            cfg.growth.active
        )),
    }
    let notes: String = run.notices.iter().map(|n| format!("{n}\n")).collect();
    run.text("estimate/notices.txt", &notes)?;
    Ok(())
}

fn loading_names(est: &GrowthEstimate) -> Vec<String> {
    match est.spec.common_factor {
        CommonFactor::Heterogeneous => est.loading_columns(),
        CommonFactor::Homogeneous => vec![FACTOR_COLUMN.to_string(); est.fit.regions.len()],
        CommonFactor::None => vec![],
    }
}

fn table3(fits: &[(String, GrowthEstimate)]) -> Table {
    let mut header = vec!["row".to_string()];
    header.extend(fits.iter().map(|(l, _)| l.clone()));
    let mut t = Table::new(&header);
    let mut coefs: Vec<String> = Vec::new();
    for (_, e) in fits {
        for n in &e.fit.coefficient_names {
            let is_loading = n == FACTOR_COLUMN || n.starts_with("F_x_");
            if !is_loading && !coefs.contains(n) {
                coefs.push(n.clone());
            }
        }
    }
    let mut row = |label: &str, f: &dyn Fn(&GrowthEstimate) -> String| {
        let mut r = vec![label.to_string()];
        r.extend(fits.iter().map(|(_, e)| f(e)));
        t.push(&r);
    };
    for n in &coefs {
        row(n, &|e| opt(e.fit.coefficient(n)));
        row(&format!("{n}_se"), &|e| opt(e.fit.std_error(n)));
    }
    row("lambda", &|e| opt(e.fit.coefficient(FACTOR_COLUMN)));
    row("lambda_se", &|e| opt(e.fit.std_error(FACTOR_COLUMN)));
    row("obs", &|e| e.fit.nobs.to_string());
    row("regions", &|e| {
        e.fit
            .rows
            .iter()
            .map(|r| r.region)
            .collect::<BTreeSet<_>>()
            .len()
            .to_string()
    });
    row("years", &|e| {
        e.fit
            .rows
            .iter()
            .map(|r| r.year)
            .collect::<BTreeSet<_>>()
            .len()
            .to_string()
    });
    row("sample", &|e| {
        let ys: BTreeSet<i32> = e.fit.rows.iter().map(|r| r.year).collect();
        format!("{}-{}", ys.first().unwrap(), ys.last().unwrap())
    });
    row("estimator", &|e| estimator_label(&e.spec.estimator));
    row("region_effects", &|_| "yes".into());
    row("common_factor", &|e| {
        format!("{:?}", e.spec.common_factor).to_lowercase()
    });
    row("wald", &|e| opt(e.wald_equal_loadings.as_ref().map(|w| w.statistic)));
    row("wald_dof", &|e| {
        e.wald_equal_loadings
            .as_ref()
            .map(|w| w.dof.to_string())
            .unwrap_or_default()
    });
    row("wald_p", &|e| opt(e.wald_equal_loadings.as_ref().map(|w| w.p_value)));
    row("r_squared", &|e| num(e.fit.r_squared));
    row("relative_rmse", &|e| opt(e.relative_rmse.map(|r| r.relative_rmse)));
    row("rmse_pct", &|e| opt(e.relative_rmse.map(|r| r.rmse)));
    row("benchmark_rmse_pct", &|e| {
        opt(e.relative_rmse.map(|r| r.benchmark_rmse))
    });
    t
}

// -------------------------------------------------------------- forecast

fn forecast_dir(name: &str) -> String {
    format!("forecast/{name}")
}

fn selected(cfg: &RunConfig, scenario: Option<&str>) -> Result<Vec<ScenarioSetting>> {
    match scenario {
        Some(n) => Ok(vec![cfg.scenario(n)?]),
        None => {
            let all = cfg.scenario_settings();
            if all.is_empty() {
                return Err(Error::Config {
                    file: cfg.source.display().to_string(),
                    field: "scenarios".into(),
                    message: "no scenarios configured".into(),
                });
            }
            Ok(all)
        }
    }
}

fn load_estimates(run: &Run) -> Result<(GrowthEstimate, Option<LongRunEstimate>)> {
    let est: GrowthEstimate = read_json(&run.path(ACTIVE_GROWTH))?;
    let lr = match est.spec.ec_lag {
        Some(_) => Some(read_json(&run.path(LONGRUN_JSON))?),
        None => None,
    };
    Ok((est, lr))
}

pub fn cmd_forecast(run: &mut Run, scenario: Option<&str>) -> Result<()> {
    let cfg = run.cfg;
    let settings = selected(cfg, scenario)?;
    let (est, lr) = load_estimates(run)?;
    let ds = run.panel()?;
    let nat = run.national_growth()?;
    let unemp = run.optional_national(&cfg.data.national_unemp, NATIONAL_UNEMP)?;
    let empl = run.optional_national(&cfg.data.national_empl, NATIONAL_EMPL)?;
    let funds = run.funding()?;
    let inputs = ForecastInputs {
        panel: &ds,
        estimate: &est,
        longrun: lr.as_ref(),
        national_unemp: unemp.as_ref(),
        national_empl: empl.as_ref(),
    };
    let path = in_sample_prediction_path(&est);

    for s in &settings {
        let mut sc = ForecastScenario::rebound(&s.name, &nat, funds.clone(), s.c, s.r)?;
        sc.national_coupling = s.coupling;
        sc.aux_estimator = cfg.aux.estimator.choice();
        let f = forecast_growth(&inputs, &sc)?;
        let dir = forecast_dir(&s.name);
        write_forecast(run, &dir, &f, &sc)?;

        let mut t = Table::new(&["year", "observed_mean", "fitted_mean"]);
        for p in &path.mean {
            t.push(&[p.year.to_string(), num(p.observed), num(p.fitted)]);
        }
        run.table(&format!("{dir}/in_sample_path.csv"), &t)?;
        let mut t = Table::new(&["region", "year", "observed", "fitted"]);
        for r in &path.regions {
            for p in &r.points {
                t.push(&[r.region.clone(), p.year.to_string(), num(p.observed), num(p.fitted)]);
            }
        }
        run.table(&format!("{dir}/in_sample_regions.csv"), &t)?;

        if cfg.output.charts {
            let observed: Vec<(f64, f64)> = path.mean.iter().map(|p| (p.year as f64, p.observed)).collect();
            let mut fitted: Vec<(f64, f64)> = path.mean.iter().map(|p| (p.year as f64, p.fitted)).collect();
            fitted.extend(f.band.iter().map(|b| (b.year as f64, b.mean)));
            let band: Vec<(f64, f64, f64)> = f.band.iter().map(|b| (b.year as f64, b.lower, b.upper)).collect();
            let svg = svg_line_chart(
                &format!("Regional growth, mean and forecast range ({})", s.name),
                "growth of GDP per employee (%)",
                &[
                    Line {
                        label: "observed mean",
                        color: "black",
                        dashed: false,
                        points: observed,
                    },
                    Line {
                        label: "predicted mean",
                        color: "#555",
                        dashed: true,
                        points: fitted,
                    },
                ],
                &band,
            );
            run.text(&format!("{dir}/band.svg"), &svg)?;
        }
        let mean_last = f.band.last().map(|b| b.mean).unwrap_or(f64::NAN);
        println!(
            "forecast {}: c={} r={}, mean growth {} = {}%",
            s.name,
            s.c,
            s.r,
            f.band.last().map_or(0, |b| b.year),
            num(mean_last)
        );
    }
    Ok(())
}

fn write_forecast(run: &mut Run, dir: &str, f: &ForecastResult, sc: &ForecastScenario) -> Result<()> {
    run.json(&format!("{dir}/forecast.json"), f)?;
    let mut t = Table::new(&[
        "region",
        "year",
        "growth_pct",
        "log_growth",
        "gdp_level",
        "fixed_effect_pct",
    ]);
    for r in &f.rows {
        t.push(&[
            r.region.clone(),
            r.year.to_string(),
            num(r.growth_pct),
            num(r.log_growth),
            opt(r.gdp_level),
            num(100.0 * r.fixed_effect),
        ]);
    }
    run.table(&format!("{dir}/forecast.csv"), &t)?;

    let mut t = Table::new(&["region", "year", "column", "coefficient", "value", "contribution_pct"]);
    for r in &f.rows {
        for (j, c) in f.columns.iter().enumerate() {
            let (b, x) = (f.coefficients[j], r.regressors[j]);
            t.push(&[
                r.region.clone(),
                r.year.to_string(),
                c.clone(),
                num(b),
                num(x),
                num(100.0 * b * x),
            ]);
        }
    }
    run.table(&format!("{dir}/regressors.csv"), &t)?;

    let mut t = Table::new(&["region", "year", "source"]);
    for r in &f.rows {
        for s in &r.sources {
            t.push(&[r.region.clone(), r.year.to_string(), serde_json::to_string(s)?]);
        }
    }
    run.table(&format!("{dir}/sources.csv"), &t)?;

    let mut t = Table::new(&["variable", "rule", "region", "year", "value"]);
    for e in &f.extrapolations {
        for c in &e.cells {
            t.push(&[
                e.variable.clone(),
                e.rule.clone(),
                c.region.clone(),
                c.year.to_string(),
                num(c.value),
            ]);
        }
    }
    run.table(&format!("{dir}/extrapolations.csv"), &t)?;

    let mut t = Table::new(&["year", "mean", "sd", "lower", "upper"]);
    for b in &f.band {
        t.push(&[b.year.to_string(), num(b.mean), num(b.sd), num(b.lower), num(b.upper)]);
    }
    run.table(&format!("{dir}/band.csv"), &t)?;

    let mut t = Table::new(&[
        "year",
        "national_growth",
        "rebound_discount",
        "factor_input",
        "returns_discount",
    ]);
    for (y, n) in sc.horizon_years.iter().zip(&sc.national_growth) {
        t.push(&[
            y.to_string(),
            num(n.value),
            num(sc.rebound_discount),
            num(sc.factor(*y)?),
            num(sc.returns_discount),
        ]);
    }
    run.table(&format!("{dir}/scenario.csv"), &t)
}

// ------------------------------------------------------------- decompose

fn load_forecast(run: &Run, name: &str) -> Result<ForecastResult> {
    read_json(&run.path(&format!("{}/forecast.json", forecast_dir(name))))
}

pub fn cmd_decompose(run: &mut Run, scenario: Option<&str>) -> Result<()> {
    let cfg = run.cfg;
    let settings = selected(cfg, scenario)?;
    let est: GrowthEstimate = read_json(&run.path(ACTIVE_GROWTH))?;
    for s in &settings {
        let f = load_forecast(run, &s.name)?;
        let aux: Vec<_> = f.extrapolations.iter().filter_map(|e| e.aux.clone()).collect();
        let channels = indirect_channels(&est, &aux)?;
        let d = decompose(&f, &est, &channels, cfg.decompose.discount_indirect)?;
        let mut t = Table::new(&[
            "region",
            "year",
            "total",
            "common_factor",
            "error_correction",
            "direct_bf",
            "indirect_bf",
            "bf_total",
            "other",
            "fixed_effect",
        ]);
        for r in &d.rows {
            t.push(&[
                r.region.clone(),
                r.year.to_string(),
                num(r.total),
                num(r.common_factor),
                num(r.error_correction),
                num(r.direct_bf),
                num(r.indirect_bf),
                num(r.bf_total()),
                num(r.other),
                num(r.fixed_effect),
            ]);
        }
        run.table(&format!("decompose/{}.csv", s.name), &t)?;
        run.json(&format!("decompose/{}.json", s.name), &d)?;
        let last = f.scenario.horizon_years.last().copied().unwrap_or_default();
        let bf: Vec<f64> = d.year(last).map(|r| r.bf_total()).collect();
        println!(
            "decompose {}: mean BF contribution {last} = {} pp",
            s.name,
            num(mean(&bf))
        );
    }
    Ok(())
}

// ---------------------------------------------------------------- report

pub fn cmd_report(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let rep = cfg.report.as_ref().ok_or_else(|| Error::Config {
        file: cfg.source.display().to_string(),
        field: "report".into(),
        message: "the report command needs a [report] block".into(),
    })?;
    let ds = run.panel()?;
    let base = load_forecast(run, &rep.baseline)?;
    let load = |name: &str| -> Result<GrowthDecomposition> { read_json(&run.path(&format!("decompose/{name}.json"))) };
    let (db, dc) = (load(&rep.baseline)?, load(&rep.conservative)?);
    let conservative = cfg.scenario(&rep.conservative)?;
    let labels = [
        "baseline scenario".to_string(),
        format!("conservative scenario with r={}", conservative.r),
    ];
    let r = funding_share_report(&ds, &base, rep.in_sample, &[(&labels[0], &db), (&labels[1], &dc)])?;
    let mut t = Table::new(&["row", "mean", "sd", "min", "max"]);
    for row in &r.rows {
        t.push(&[
            row.label.clone(),
            num(row.mean),
            num(row.sd),
            num(row.min),
            num(row.max),
        ]);
    }
    run.table("report/table5.csv", &t)?;
    let mut t = Table::new(&["scenario", "indirect_share_regional_mean", "indirect_share_pooled"]);
    if let Some(s) = r.indirect_share {
        t.push(&[rep.baseline.clone(), num(s.regional), num(s.pooled)]);
    }
    run.table("report/indirect_share.csv", &t)?;
    for row in &r.rows {
        println!(
            "{}: mean {} sd {} min {} max {}",
            row.label,
            num(row.mean),
            num(row.sd),
            num(row.min),
            num(row.max)
        );
    }
    Ok(())
}

// -------------------------------------------------------------- simulate

pub fn cmd_simulate(run: &mut Run, reps_override: Option<usize>) -> Result<()> {
    let cfg = run.cfg;
    let reps = reps_override.unwrap_or(cfg.simulate.reps);
    let master = run.seed;
    if reps == 0 {
        println!(
            "dry run: configuration valid; suites {:?} would run with master seed {master}",
            cfg.simulate.suites
        );
        return Ok(());
    }
    let suites: BTreeSet<Suite> = cfg.simulate.suites.iter().copied().collect();
    let mut summary = Table::new(&["suite", "statistic", "value"]);
    let share = |xs: &[bool]| xs.iter().filter(|b| **b).count() as f64 / xs.len() as f64;
    let seed_of = |rep: usize| replicate_seed(master, rep as u64).to_string();
    for suite in suites {
        match suite {
            Suite::Recovery => {
                let d = monte_carlo(reps, master, |_, s| recovery_draw(s));
                let d: Vec<_> = d.into_iter().collect::<Result<_>>()?;
                let mut t = Table::new(&["rep", "seed", "beta_bf", "phi", "beta_bf_covered", "phi_covered"]);
                for (i, x) in d.iter().enumerate() {
                    t.push(&[
                        i.to_string(),
                        seed_of(i),
                        num(x.beta_bf),
                        num(x.phi),
                        x.beta_bf_covered.to_string(),
                        x.phi_covered.to_string(),
                    ]);
                }
                run.table("simulate/recovery.csv", &t)?;
                let b: Vec<f64> = d.iter().map(|x| x.beta_bf).collect();
                let p: Vec<f64> = d.iter().map(|x| x.phi).collect();
                let cb: Vec<bool> = d.iter().map(|x| x.beta_bf_covered).collect();
                let cp: Vec<bool> = d.iter().map(|x| x.phi_covered).collect();
                for (k, v) in [
                    ("true_beta_bf", RECOVERY_BETA_BF),
                    ("median_beta_bf", median(&b)),
                    ("coverage_beta_bf", share(&cb)),
                    ("true_phi", RECOVERY_PHI),
                    ("median_phi", median(&p)),
                    ("coverage_phi", share(&cp)),
                ] {
                    summary.push(&["recovery".into(), k.to_string(), num(v)]);
                }
            }
            Suite::RelativeRmse => {
                let d: Vec<_> = monte_carlo(reps, master, |_, s| relative_rmse_draw(s))
                    .into_iter()
                    .collect::<Result<_>>()?;
                let mut t = Table::new(&["rep", "seed", "relative_rmse", "rmse_pct", "benchmark_rmse_pct"]);
                for (i, x) in d.iter().enumerate() {
                    t.push(&[
                        i.to_string(),
                        seed_of(i),
                        num(x.relative_rmse),
                        num(x.rmse),
                        num(x.benchmark_rmse),
                    ]);
                }
                run.table("simulate/relative_rmse.csv", &t)?;
                let v: Vec<f64> = d.iter().map(|x| x.relative_rmse).collect();
                let wins: Vec<bool> = v.iter().map(|x| *x < 1.0).collect();
                summary.push(&["relative_rmse".into(), "share_below_one".into(), num(share(&wins))]);
                summary.push(&["relative_rmse".into(), "median".into(), num(median(&v))]);
            }
            Suite::Wald => {
                let cls = EstimatorChoice::OlsFe {
                    covariance: CovarianceKind::Classical,
                };
                let d: Vec<(f64, f64)> = monte_carlo(reps, master, |_, s| {
                    Ok::<_, Error>((wald_draw(s, (1.0, 1.0), cls)?, wald_draw(s, (0.5, 1.5), cls)?))
                })
                .into_iter()
                .collect::<Result<_>>()?;
                let mut t = Table::new(&["rep", "seed", "p_equal_loadings", "p_loadings_0.5_1.5"]);
                for (i, x) in d.iter().enumerate() {
                    t.push(&[i.to_string(), seed_of(i), num(x.0), num(x.1)]);
                }
                run.table("simulate/wald.csv", &t)?;
                let size: Vec<bool> = d.iter().map(|x| x.0 < 0.05).collect();
                let power: Vec<bool> = d.iter().map(|x| x.1 < 0.05).collect();
                summary.push(&["wald".into(), "size_5pct".into(), num(share(&size))]);
                summary.push(&["wald".into(), "power_5pct".into(), num(share(&power))]);
            }
            Suite::Cointegration => {
                let table = AdjustmentTable::bundled();
                let d: Vec<(bool, bool)> = monte_carlo(reps, master, |_, s| {
                    Ok::<_, Error>((
                        cointegration_draw(s, LevelsResidual::Ar1 { rho: 0.5 }, &table)?,
                        cointegration_draw(s, LevelsResidual::RandomWalk, &table)?,
                    ))
                })
                .into_iter()
                .collect::<Result<_>>()?;
                let mut t = Table::new(&["rep", "seed", "reject_ar1_0.5", "reject_random_walk"]);
                for (i, x) in d.iter().enumerate() {
                    t.push(&[i.to_string(), seed_of(i), x.0.to_string(), x.1.to_string()]);
                }
                run.table("simulate/cointegration.csv", &t)?;
                let a: Vec<bool> = d.iter().map(|x| x.0).collect();
                let b: Vec<bool> = d.iter().map(|x| x.1).collect();
                summary.push(&["cointegration".into(), "rejection_stationary".into(), num(share(&a))]);
                summary.push(&["cointegration".into(), "rejection_random_walk".into(), num(share(&b))]);
            }
        }
    }
    summary.push(&["all".into(), "replications".into(), reps.to_string()]);
    summary.push(&["all".into(), "master_seed".into(), master.to_string()]);
    run.table("simulate/summary.csv", &summary)?;
    for r in &summary.rows {
        println!("{} {} = {}", r[0], r[1], r[2]);
    }
    Ok(())
}

// -------------------------------------------------------------- generate

/// Writes a synthetic data set laid out as a real one would be, plus the
/// generating configuration and true parameters.
pub fn cmd_generate(out: &Path, preset: Preset, seed: u64) -> Result<Vec<PathBuf>> {
    let cfg = DgpConfig::preset(preset, seed);
    let s = generate(&cfg)?;
    let mut written = Vec::new();
    let mut put = |name: &str| {
        let p = out.join(name);
        written.push(p.clone());
        p
    };
    let p = put("panel.csv");
    super::output::ensure_parent(&p)?;
    let vars: Vec<&str> = s.panel.variables().collect();
    write_panel_csv(&s.panel, &p, &vars)?;
    for series in [&s.national_growth, &s.national_unemp, &s.national_empl] {
        write_national_csv(series, put(&format!("{}.csv", series.name)))?;
    }
    write_funding_csv(&s.funding, &put("bf_funding.csv"))?;
    write_json(&put("dgp.json"), &cfg)?;
    write_json(&put("truth.json"), &s.truth)?;
    Ok(written)
}
