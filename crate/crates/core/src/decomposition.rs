//! Additive split of forecast growth into common-factor, error-correction,
//! BF-funding, other-regressor and fixed-effect parts, and the funding
//! plausibility summary.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::{ForecastResult, IntensityRow};
use crate::growth::{ec_column, factor_column, AuxEstimate, GrowthEstimate, FACTOR_COLUMN};
use crate::linalg::{mean, sd};
use crate::panel::{vars, PanelDataset, TransformKind};

/// Arithmetic percent change of BF intensity from the previous year, split
/// by program. Each program's change is taken relative to the previous
/// year's total, so the two parts add up to the total change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundingChangeRow {
    pub total: f64,
    pub traditional: f64,
    pub disruptive: f64,
}

impl FundingChangeRow {
    pub fn between(prev: (f64, f64), cur: (f64, f64)) -> Option<Self> {
        let base = prev.0 + prev.1;
        if base <= 0.0 {
            return None;
        }
        let traditional = 100.0 * (cur.0 - prev.0) / base;
        let disruptive = 100.0 * (cur.1 - prev.1) / base;
        Some(Self {
            total: 100.0 * (cur.0 + cur.1 - base) / base,
            traditional,
            disruptive,
        })
    }

    /// A change with no disruptive component.
    pub fn traditional_only(pct: f64) -> Self {
        Self {
            total: pct,
            traditional: pct,
            disruptive: 0.0,
        }
    }
}

/// Funding changes keyed by region and the year the change lands in.
/// Years whose previous intensity is zero have no defined change and are
/// absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FundingChange {
    pub rows: BTreeMap<String, BTreeMap<i32, FundingChangeRow>>,
}

impl FundingChange {
    pub fn from_intensities(intensities: &[IntensityRow]) -> Self {
        let mut by_region: BTreeMap<&str, BTreeMap<i32, (f64, f64)>> = BTreeMap::new();
        for i in intensities {
            by_region
                .entry(i.region.as_str())
                .or_default()
                .insert(i.year, (i.traditional, i.disruptive));
        }
        let mut rows: BTreeMap<String, BTreeMap<i32, FundingChangeRow>> = BTreeMap::new();
        for (region, path) in by_region {
            let entry = rows.entry(region.to_string()).or_default();
            for (&year, &cur) in &path {
                if let Some(fc) = path
                    .get(&(year - 1))
                    .and_then(|&prev| FundingChangeRow::between(prev, cur))
                {
                    entry.insert(year, fc);
                }
            }
        }
        Self { rows }
    }

    pub fn get(&self, region: &str, year: i32) -> Option<&FundingChangeRow> {
        self.rows.get(region)?.get(&year)
    }
}

/// β̂ (Δ%BF_traditional + r Δ%BF_disruptive), in percentage points.
pub fn direct_contribution(beta_bf: f64, fc: &FundingChangeRow, r: f64) -> f64 {
    beta_bf * fc.traditional + r * beta_bf * fc.disruptive
}

/// One indirect route: BF moves an R&I input, which moves growth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub variable: String,
    /// Coefficient of the input in the growth equation.
    pub growth_coefficient: f64,
    /// Coefficient of BF intensity in the input's auxiliary equation.
    pub bf_coefficient: f64,
}

/// The three R&I channels. Every one of them must appear both in the
/// growth equation (in logs) and among the auxiliary fits.
pub fn indirect_channels(growth: &GrowthEstimate, aux: &[AuxEstimate]) -> Result<Vec<Channel>> {
    [vars::RD_EXP_BUS, vars::RD_EXP_PUB, vars::PATENT]
        .iter()
        .map(|&v| {
            let column = growth
                .spec
                .short_run
                .iter()
                .find(|s| s.variable == v && s.transform == TransformKind::Log)
                .map(|s| s.column_name())
                .ok_or_else(|| Error::MissingChannelCoefficient(format!("log {v} in the growth equation")))?;
            let growth_coefficient = growth
                .fit
                .coefficient(&column)
                .ok_or_else(|| Error::MissingChannelCoefficient(column.clone()))?;
            let a = aux
                .iter()
                .find(|a| a.spec.response == v)
                .ok_or_else(|| Error::MissingChannelCoefficient(format!("auxiliary equation for {v}")))?;
            let bf_coefficient = a
                .bf_coefficient()
                .ok_or_else(|| Error::MissingChannelCoefficient(format!("BF coefficient in the {v} equation")))?;
            Ok(Channel {
                variable: v.into(),
                growth_coefficient,
                bf_coefficient,
            })
        })
        .collect()
}

/// Σ β̂_c θ̂_c (Δ%BF_traditional + r Δ%BF_disruptive) over channels. Pass
/// `r = 1` to leave the indirect route undiscounted.
pub fn indirect_contribution(channels: &[Channel], fc: &FundingChangeRow, r: f64) -> f64 {
    channels
        .iter()
        .map(|c| c.growth_coefficient * c.bf_coefficient * (fc.traditional + r * fc.disruptive))
        .sum()
}

/// Components of one region-year forecast, percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRow {
    pub region: String,
    pub year: i32,
    pub total: f64,
    pub common_factor: f64,
    pub error_correction: f64,
    pub direct_bf: f64,
    pub indirect_bf: f64,
    /// Everything else, defined as the remainder.
    pub other: f64,
    pub fixed_effect: f64,
}

impl DecompositionRow {
    pub fn bf_total(&self) -> f64 {
        self.direct_bf + self.indirect_bf
    }

    pub fn sum_with_fixed_effect(&self) -> f64 {
        self.sum_without_fixed_effect() + self.fixed_effect
    }

    pub fn sum_without_fixed_effect(&self) -> f64 {
        self.common_factor + self.error_correction + self.direct_bf + self.indirect_bf + self.other
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthDecomposition {
    pub scenario: String,
    pub returns_discount: f64,
    pub discount_indirect: bool,
    pub rows: Vec<DecompositionRow>,
}

impl GrowthDecomposition {
    pub fn year(&self, year: i32) -> impl Iterator<Item = &DecompositionRow> {
        self.rows.iter().filter(move |r| r.year == year)
    }
}

/// Splits every forecast row. The BF parts use the funding change of the
/// year the BF regressor is dated, with the scenario's returns discount;
/// the indirect part is discounted only if `discount_indirect`.
pub fn decompose(
    forecast: &ForecastResult,
    estimate: &GrowthEstimate,
    channels: &[Channel],
    discount_indirect: bool,
) -> Result<GrowthDecomposition> {
    forecast.check_audit()?;
    if forecast.columns != estimate.fit.coefficient_names || forecast.coefficients != estimate.fit.coefficients {
        return Err(Error::AuditTrailIncomplete(
            "forecast was produced by a different growth estimate".into(),
        ));
    }
    let bf = estimate
        .spec
        .short_run
        .iter()
        .find(|v| v.variable == vars::BF)
        .ok_or_else(|| Error::MissingChannelCoefficient("BF intensity in the growth equation".into()))?;
    let beta_bf = estimate
        .fit
        .coefficient(&bf.column_name())
        .ok_or_else(|| Error::MissingChannelCoefficient(bf.column_name()))?;
    let changes = FundingChange::from_intensities(&forecast.intensities);
    let r = forecast.scenario.returns_discount;
    let r_indirect = if discount_indirect { r } else { 1.0 };

    let col = |name: &str| forecast.columns.iter().position(|c| c == name);
    let ec = estimate.spec.ec_lag.map(ec_column).and_then(|c| col(&c));
    let mut rows = Vec::with_capacity(forecast.rows.len());
    for row in &forecast.rows {
        let term = |j: usize| 100.0 * forecast.coefficients[j] * row.regressors[j];
        let factor: f64 = [FACTOR_COLUMN.to_string(), factor_column(&row.region)]
            .iter()
            .filter_map(|c| col(c))
            .map(term)
            .sum();
        let fc = changes.get(&row.region, row.year - bf.lag as i32).ok_or_else(|| {
            Error::AuditTrailIncomplete(format!(
                "no BF funding change for {} in {}",
                row.region,
                row.year - bf.lag as i32
            ))
        })?;
        let mut d = DecompositionRow {
            region: row.region.clone(),
            year: row.year,
            total: row.growth_pct,
            common_factor: factor,
            error_correction: ec.map_or(0.0, term),
            direct_bf: direct_contribution(beta_bf, fc, r),
            indirect_bf: indirect_contribution(channels, fc, r_indirect),
            other: 0.0,
            fixed_effect: 100.0 * row.fixed_effect,
        };
        d.other = d.total - d.sum_without_fixed_effect() - d.fixed_effect;
        rows.push(d);
    }
    Ok(GrowthDecomposition {
        scenario: forecast.scenario.name.clone(),
        returns_discount: r,
        discount_indirect,
        rows,
    })
}

/// Regional GDP in the units of `BF_FUNDS` (million EUR) from GDP per
/// employee (EUR) and employment (thousand persons).
pub fn regional_gdp(gdp_per_employee: f64, empl: f64) -> f64 {
    gdp_per_employee * empl / 1000.0
}

/// Funds as a percent of regional GDP, both in the same currency unit.
pub fn funds_share_pct(funds: f64, gdp: f64) -> f64 {
    100.0 * funds / gdp
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: String,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl SummaryRow {
    pub fn of(label: impl Into<String>, xs: &[f64]) -> Self {
        Self {
            label: label.into(),
            mean: mean(xs),
            sd: sd(xs),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Indirect BF contribution as a share of the total BF contribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndirectShare {
    /// Mean of the regional ratios.
    pub regional: f64,
    /// Ratio of the cross-region means.
    pub pooled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FundingShareReport {
    pub rows: Vec<SummaryRow>,
    pub indirect_share: Option<IndirectShare>,
}

/// Funding importance next to predicted contributions: the mean in-sample
/// share of funds in regional GDP over `in_sample`, the share of the last
/// funded year's funds in last observed GDP, then the BF contribution in
/// the final horizon year of each decomposition.
pub fn funding_share_report(
    ds: &PanelDataset,
    forecast: &ForecastResult,
    in_sample: (i32, i32),
    scenarios: &[(&str, &GrowthDecomposition)],
) -> Result<FundingShareReport> {
    let cutoff = forecast.cutoff;
    let mut in_share = Vec::new();
    let mut covid_share = Vec::new();
    let last_funded = forecast.scenario.funds.iter().map(|f| f.year).max();
    for (r, region) in ds.regions().iter().enumerate() {
        let mut shares = Vec::new();
        for y in in_sample.0..=in_sample.1.min(cutoff) {
            let cells = (
                ds.get(vars::BF_FUNDS, r, y)?,
                ds.get(vars::GDP, r, y)?,
                ds.get(vars::EMPL, r, y)?,
            );
            if let (Some(f), Some(g), Some(e)) = cells {
                shares.push(funds_share_pct(f, regional_gdp(g, e)));
            }
        }
        if !shares.is_empty() {
            in_share.push(mean(&shares));
        }
        if let (Some(year), Some(g), Some(e)) = (
            last_funded,
            ds.get(vars::GDP, r, cutoff)?,
            ds.get(vars::EMPL, r, cutoff)?,
        ) {
            let funds: f64 = forecast
                .scenario
                .funds
                .iter()
                .filter(|f| &f.region == region && f.year == year)
                .map(|f| f.total())
                .sum();
            covid_share.push(funds_share_pct(funds, regional_gdp(g, e)));
        }
    }
    let mut rows = vec![
        SummaryRow::of(
            format!(
                "Share of BF funding in regional GDP (%, {}-{})",
                in_sample.0,
                in_sample.1.min(cutoff)
            ),
            &in_share,
        ),
        SummaryRow::of(
            format!(
                "Share of BF funding ({}) in regional GDP ({cutoff}) (%)",
                last_funded.map_or("-".to_string(), |y| y.to_string())
            ),
            &covid_share,
        ),
    ];
    let final_year = *forecast.scenario.horizon_years.last().unwrap();
    let mut indirect_share = None;
    for (k, (label, d)) in scenarios.iter().enumerate() {
        let contrib: Vec<f64> = d.year(final_year).map(DecompositionRow::bf_total).collect();
        rows.push(SummaryRow::of(
            format!("Predicted BF contribution to GDP growth in {final_year} (%, {label})"),
            &contrib,
        ));
        if k == 0 {
            let direct: Vec<f64> = d.year(final_year).map(|r| r.direct_bf).collect();
            let indirect: Vec<f64> = d.year(final_year).map(|r| r.indirect_bf).collect();
            let ratios: Vec<f64> = indirect
                .iter()
                .zip(&contrib)
                .filter(|(_, t)| **t != 0.0)
                .map(|(i, t)| i / t)
                .collect();
            indirect_share = Some(IndirectShare {
                regional: mean(&ratios),
                pooled: mean(&indirect) / (mean(&direct) + mean(&indirect)),
            });
        }
    }
    Ok(FundingShareReport { rows, indirect_share })
}
