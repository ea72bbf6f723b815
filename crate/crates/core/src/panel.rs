//! Balanced region × year panel, variable transforms and CSV ingestion.
//!
//! Cells are `Option<f64>`: `None` marks a missing observation, either
//! because the source file left it empty or because a lag/difference ran
//! past the start of the panel. Non-finite values never enter a series.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical column names of the regional variable catalog.
pub mod vars {
    /// GDP per employee (EUR, current prices).
    pub const GDP: &str = "GDP";
    /// Gross fixed capital formation (1,000 EUR per employee).
    pub const GFCF: &str = "GFCF";
    /// Employment (1,000 persons).
    pub const EMPL: &str = "EMPL";
    /// Business-sector R&D expenditure (% of GDP).
    pub const RD_EXP_BUS: &str = "RD_EXP_BUS";
    /// Public-sector R&D expenditure (% of GDP).
    pub const RD_EXP_PUB: &str = "RD_EXP_PUB";
    /// Business-sector R&D personnel (% of employment).
    pub const RD_PER_BUS: &str = "RD_PER_BUS";
    /// Public-sector R&D personnel (% of employment).
    pub const RD_PER_PUB: &str = "RD_PER_PUB";
    /// Patent applications per 1,000 employees.
    pub const PATENT: &str = "PATENT";
    /// Patent stock per employee.
    pub const PATSTOCK: &str = "PATSTOCK";
    /// Unemployment rate (%).
    pub const UNEMP: &str = "UNEMP";
    /// Highly educated employees (% of employment).
    pub const HIGHEDU: &str = "HIGHEDU";
    /// Total innovation-agency funding (million EUR).
    pub const BF_FUNDS: &str = "BF_FUNDS";
    /// Funding intensity (EUR per employee).
    pub const BF: &str = "BF";

    pub const CATALOG: [&str; 13] = [
        GDP, GFCF, EMPL, RD_EXP_BUS, RD_EXP_PUB, RD_PER_BUS, RD_PER_PUB, PATENT, PATSTOCK, UNEMP, HIGHEDU, BF_FUNDS, BF,
    ];

    pub fn unit(name: &str) -> &'static str {
        match name {
            GDP => "EUR per employee",
            GFCF => "1000 EUR per employee",
            EMPL => "1000 persons",
            RD_EXP_BUS | RD_EXP_PUB => "% of GDP",
            RD_PER_BUS | RD_PER_PUB | HIGHEDU => "% of employment",
            PATENT => "per 1000 employees",
            PATSTOCK => "per employee",
            UNEMP => "%",
            BF_FUNDS => "million EUR",
            BF => "EUR per employee",
            _ => "",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Raw,
    Log,
    Diff,
    Lag(usize),
    /// Arithmetic year-over-year change in percent.
    PctChange,
    LogDiff,
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransformKind::Raw => write!(f, "raw"),
            TransformKind::Log => write!(f, "log"),
            TransformKind::Diff => write!(f, "diff"),
            TransformKind::Lag(p) => write!(f, "lag{p}"),
            TransformKind::PctChange => write!(f, "pct_change"),
            TransformKind::LogDiff => write!(f, "log_diff"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformTag {
    pub kind: TransformKind,
    pub source: String,
}

impl TransformTag {
    pub fn new(kind: TransformKind, source: impl Into<String>) -> Self {
        Self {
            kind,
            source: source.into(),
        }
    }

    /// Name under which the derived series is stored, e.g. `log_diff(GDP)`.
    pub fn derived_name(&self) -> String {
        match self.kind {
            TransformKind::Raw => self.source.clone(),
            kind => format!("{kind}({})", self.source),
        }
    }
}

/// One N×T variable, region-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    values: Vec<Option<f64>>,
    /// Transform chain applied to the base variable, oldest first.
    provenance: Vec<TransformTag>,
}

impl Series {
    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn provenance(&self) -> &[TransformTag] {
        &self.provenance
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelDataset {
    regions: Vec<String>,
    first_year: i32,
    n_years: usize,
    series: BTreeMap<String, Series>,
    units: BTreeMap<String, String>,
}

impl PanelDataset {
    pub fn new(regions: Vec<String>, first_year: i32, n_years: usize) -> Result<Self> {
        let unique: BTreeSet<&String> = regions.iter().collect();
        if unique.len() != regions.len() {
            return Err(Error::InvalidPanel("duplicate region identifiers".into()));
        }
        if regions.is_empty() || n_years == 0 {
            return Err(Error::InvalidPanel(
                "panel needs at least one region and one year".into(),
            ));
        }
        Ok(Self {
            regions,
            first_year,
            n_years,
            series: BTreeMap::new(),
            units: BTreeMap::new(),
        })
    }

    pub fn regions(&self) -> &[String] {
        &self.regions
    }

    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn n_years(&self) -> usize {
        self.n_years
    }

    pub fn first_year(&self) -> i32 {
        self.first_year
    }

    pub fn last_year(&self) -> i32 {
        self.first_year + self.n_years as i32 - 1
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        self.first_year..=self.last_year()
    }

    pub fn year_index(&self, year: i32) -> Option<usize> {
        if year < self.first_year || year > self.last_year() {
            None
        } else {
            Some((year - self.first_year) as usize)
        }
    }

    pub fn region_index(&self, region: &str) -> Option<usize> {
        self.regions.iter().position(|r| r == region)
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    pub fn has(&self, name: &str) -> bool {
        self.series.contains_key(name)
    }

    pub fn series(&self, name: &str) -> Result<&Series> {
        self.series
            .get(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn unit(&self, name: &str) -> Option<&str> {
        self.units.get(name).map(String::as_str)
    }

    /// Cell lookup; `None` if the year is outside the panel or the cell is missing.
    pub fn get(&self, name: &str, region: usize, year: i32) -> Result<Option<f64>> {
        let s = self.series(name)?;
        Ok(self.year_index(year).and_then(|t| s.values[region * self.n_years + t]))
    }

    /// Time path of one region.
    pub fn region_path(&self, name: &str, region: usize) -> Result<&[Option<f64>]> {
        let s = self.series(name)?;
        let start = region * self.n_years;
        Ok(&s.values[start..start + self.n_years])
    }

    /// Adds a base (untransformed) series. Values are region-major.
    pub fn insert(&mut self, name: &str, values: Vec<Option<f64>>, unit: &str) -> Result<()> {
        self.insert_series(
            name,
            Series {
                values,
                provenance: Vec::new(),
            },
        )?;
        self.units.insert(name.to_string(), unit.to_string());
        Ok(())
    }

    /// Overwrites one cell of an existing series.
    pub fn set(&mut self, name: &str, region: usize, year: i32, value: Option<f64>) -> Result<()> {
        if matches!(value, Some(v) if !v.is_finite()) {
            return Err(Error::InvalidPanel(format!("non-finite value for `{name}` in {year}")));
        }
        let t = self
            .year_index(year)
            .ok_or_else(|| Error::InvalidArgument(format!("year {year} outside the panel")))?;
        let n_years = self.n_years;
        let s = self
            .series
            .get_mut(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
        s.values[region * n_years + t] = value;
        Ok(())
    }

    /// Convenience for fully observed data.
    pub fn insert_dense(&mut self, name: &str, values: Vec<f64>, unit: &str) -> Result<()> {
        self.insert(name, values.into_iter().map(Some).collect(), unit)
    }

    fn insert_series(&mut self, name: &str, series: Series) -> Result<()> {
        let expected = self.n_regions() * self.n_years;
        if series.values.len() != expected {
            return Err(Error::InvalidPanel(format!(
                "series `{name}` has {} cells, expected {expected}",
                series.values.len()
            )));
        }
        if let Some(pos) = series
            .values
            .iter()
            .position(|v| matches!(v, Some(x) if !x.is_finite()))
        {
            return Err(Error::InvalidPanel(format!(
                "series `{name}` has a non-finite value at region `{}`, year {}",
                self.regions[pos / self.n_years],
                self.first_year + (pos % self.n_years) as i32
            )));
        }
        self.series.insert(name.to_string(), series);
        Ok(())
    }

    /// Computes a derived series without modifying the dataset.
    pub fn derive(&self, tag: &TransformTag) -> Result<Series> {
        let src = self.series(&tag.source)?;
        let t_len = self.n_years;
        let mut out = vec![None; src.values.len()];
        for r in 0..self.n_regions() {
            let path = &src.values[r * t_len..(r + 1) * t_len];
            for t in 0..t_len {
                let prev = |lag: usize| if t >= lag { path[t - lag] } else { None };
                let cell = match tag.kind {
                    TransformKind::Raw => path[t],
                    TransformKind::Log => match path[t] {
                        Some(v) if v > 0.0 => Some(v.ln()),
                        Some(v) => return Err(self.non_positive(&tag.source, r, t, v)),
                        None => None,
                    },
                    TransformKind::Diff => match (path[t], prev(1)) {
                        (Some(a), Some(b)) => Some(a - b),
                        _ => None,
                    },
                    TransformKind::Lag(p) => {
                        if p == 0 {
                            return Err(Error::InvalidArgument("lag order must be at least 1".into()));
                        }
                        prev(p)
                    }
                    TransformKind::PctChange => match (path[t], prev(1)) {
                        (Some(a), Some(b)) if b != 0.0 => Some(100.0 * (a - b) / b),
                        _ => None,
                    },
                    TransformKind::LogDiff => match (path[t], prev(1)) {
                        (Some(a), Some(b)) => {
                            if a <= 0.0 {
                                return Err(self.non_positive(&tag.source, r, t, a));
                            }
                            if b <= 0.0 {
                                return Err(self.non_positive(&tag.source, r, t - 1, b));
                            }
                            Some(a.ln() - b.ln())
                        }
                        _ => None,
                    },
                };
                out[r * t_len + t] = cell;
            }
        }
        let mut provenance = src.provenance.clone();
        if provenance.is_empty() {
            provenance.push(TransformTag::new(TransformKind::Raw, tag.source.clone()));
        }
        provenance.push(tag.clone());
        Ok(Series {
            values: out,
            provenance,
        })
    }

    /// Returns a copy of the dataset with the derived series added under
    /// [`TransformTag::derived_name`]. The source series is untouched.
    pub fn with_transform(&self, tag: &TransformTag) -> Result<PanelDataset> {
        let series = self.derive(tag)?;
        let mut ds = self.clone();
        let name = tag.derived_name();
        ds.insert_series(&name, series)?;
        ds.units.insert(name, tag.kind.to_string());
        Ok(ds)
    }

    fn non_positive(&self, variable: &str, region: usize, t: usize, value: f64) -> Error {
        Error::NonPositiveForLog {
            variable: variable.to_string(),
            region: self.regions[region].clone(),
            year: self.first_year + t as i32,
            value,
        }
    }

    /// Restricts the panel to `[first, last]`.
    pub fn slice_years(&self, first: i32, last: i32) -> Result<PanelDataset> {
        let (a, b) = match (self.year_index(first), self.year_index(last)) {
            (Some(a), Some(b)) if a <= b => (a, b),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "year range {first}-{last} outside panel {}-{}",
                    self.first_year,
                    self.last_year()
                )))
            }
        };
        let n_years = b - a + 1;
        let mut out = PanelDataset::new(self.regions.clone(), first, n_years)?;
        for (name, s) in &self.series {
            let mut values = Vec::with_capacity(self.n_regions() * n_years);
            for r in 0..self.n_regions() {
                values.extend_from_slice(&s.values[r * self.n_years + a..=r * self.n_years + b]);
            }
            out.insert_series(
                name,
                Series {
                    values,
                    provenance: s.provenance.clone(),
                },
            )?;
        }
        out.units = self.units.clone();
        Ok(out)
    }
}

/// Economy-wide series indexed by year; may extend past the panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NationalSeries {
    pub name: String,
    pub first_year: i32,
    pub values: Vec<f64>,
}

impl NationalSeries {
    pub fn new(name: impl Into<String>, first_year: i32, values: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "national series `{name}` contains non-finite values"
            )));
        }
        Ok(Self {
            name,
            first_year,
            values,
        })
    }

    pub fn last_year(&self) -> i32 {
        self.first_year + self.values.len() as i32 - 1
    }

    pub fn get(&self, year: i32) -> Option<f64> {
        if year < self.first_year {
            return None;
        }
        self.values.get((year - self.first_year) as usize).copied()
    }

    pub fn require(&self, year: i32) -> Result<f64> {
        self.get(year).ok_or_else(|| Error::MissingNationalValue {
            series: self.name.clone(),
            year,
        })
    }

    /// Returns a copy with `year` set, extending the range if needed.
    pub fn with_value(&self, year: i32, value: f64) -> Result<Self> {
        let mut out = self.clone();
        if year == out.last_year() + 1 {
            out.values.push(value);
        } else if year >= out.first_year && year <= out.last_year() {
            out.values[(year - out.first_year) as usize] = value;
        } else {
            return Err(Error::InvalidArgument(format!(
                "cannot set {} for year {year}: series covers {}-{}",
                self.name,
                self.first_year,
                self.last_year()
            )));
        }
        Ok(out)
    }
}

fn parse_cell(raw: &str, region: &str, year: i32, column: &str) -> Result<Option<f64>> {
    let s = raw.trim();
    if s.is_empty() {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::NonNumericCell {
            region: region.to_string(),
            year,
            column: column.to_string(),
            value: raw.to_string(),
        }),
    }
}

/// Reads a `region,year,<var>...` file into a validated balanced panel.
///
/// Only the variables in `schema` are loaded; an empty schema loads every
/// column after `year`. Regions are sorted lexicographically.
pub fn load_panel_csv(path: impl AsRef<Path>, schema: &[&str]) -> Result<PanelDataset> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::InvalidPanel(format!("{path_str}: {other:?}")),
        })?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let region_col = col("region").ok_or_else(|| Error::MissingColumn {
        path: path_str.clone(),
        column: "region".into(),
    })?;
    let year_col = col("year").ok_or_else(|| Error::MissingColumn {
        path: path_str.clone(),
        column: "year".into(),
    })?;
    let wanted: Vec<String> = if schema.is_empty() {
        headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != region_col && *i != year_col)
            .map(|(_, h)| h.to_string())
            .collect()
    } else {
        schema.iter().map(|s| s.to_string()).collect()
    };
    let mut var_cols = Vec::with_capacity(wanted.len());
    for w in &wanted {
        var_cols.push(col(w).ok_or_else(|| Error::MissingColumn {
            path: path_str.clone(),
            column: w.clone(),
        })?);
    }

    let mut cells: HashMap<(String, i32), Vec<Option<f64>>> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let region = rec.get(region_col).unwrap_or("").to_string();
        let year_raw = rec.get(year_col).unwrap_or("");
        let year: i32 = year_raw.trim().parse().map_err(|_| Error::NonNumericCell {
            region: region.clone(),
            year: 0,
            column: "year".into(),
            value: year_raw.to_string(),
        })?;
        let mut row = Vec::with_capacity(var_cols.len());
        for (w, &c) in wanted.iter().zip(&var_cols) {
            row.push(parse_cell(rec.get(c).unwrap_or(""), &region, year, w)?);
        }
        if cells.insert((region.clone(), year), row).is_some() {
            return Err(Error::DuplicateRow { region, year });
        }
    }
    if cells.is_empty() {
        return Err(Error::InvalidPanel(format!("{path_str}: no data rows")));
    }
    let regions: Vec<String> = cells
        .keys()
        .map(|(r, _)| r.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let first = cells.keys().map(|(_, y)| *y).min().unwrap();
    let last = cells.keys().map(|(_, y)| *y).max().unwrap();
    for r in &regions {
        for y in first..=last {
            if !cells.contains_key(&(r.clone(), y)) {
                return Err(Error::UnbalancedPanel {
                    region: r.clone(),
                    year: y,
                });
            }
        }
    }
    let n_years = (last - first + 1) as usize;
    let mut ds = PanelDataset::new(regions.clone(), first, n_years)?;
    for (j, w) in wanted.iter().enumerate() {
        let mut values = Vec::with_capacity(regions.len() * n_years);
        for r in &regions {
            for y in first..=last {
                values.push(cells[&(r.clone(), y)][j]);
            }
        }
        ds.insert(w, values, vars::unit(w))?;
    }
    Ok(ds)
}

/// Writes base variables as `region,year,<var>...`. Values use the shortest
/// representation that round-trips exactly; missing cells are empty.
pub fn write_panel_csv(ds: &PanelDataset, path: impl AsRef<Path>, variables: &[&str]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidPanel(format!("{other:?}")),
    })?;
    let mut header = vec!["region".to_string(), "year".to_string()];
    header.extend(variables.iter().map(|v| v.to_string()));
    w.write_record(&header)?;
    let series: Vec<&Series> = variables.iter().map(|v| ds.series(v)).collect::<Result<_>>()?;
    for (r, region) in ds.regions().iter().enumerate() {
        for (t, year) in ds.years().enumerate() {
            let mut rec = vec![region.clone(), year.to_string()];
            for s in &series {
                rec.push(match s.values[r * ds.n_years() + t] {
                    Some(v) => format!("{v}"),
                    None => String::new(),
                });
            }
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a `year,value` file.
pub fn load_national_csv(path: impl AsRef<Path>, name: &str) -> Result<NationalSeries> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    for c in ["year", "value"] {
        if !headers.iter().any(|h| h == c) {
            return Err(Error::MissingColumn {
                path: path.display().to_string(),
                column: c.into(),
            });
        }
    }
    let yi = headers.iter().position(|h| h == "year").unwrap();
    let vi = headers.iter().position(|h| h == "value").unwrap();
    let mut rows: Vec<(i32, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let year: i32 = rec[yi].parse().map_err(|_| Error::NonNumericCell {
            region: name.into(),
            year: 0,
            column: "year".into(),
            value: rec[yi].to_string(),
        })?;
        let v = parse_cell(&rec[vi], name, year, "value")?.ok_or_else(|| Error::NonNumericCell {
            region: name.into(),
            year,
            column: "value".into(),
            value: String::new(),
        })?;
        rows.push((year, v));
    }
    rows.sort_by_key(|r| r.0);
    if rows.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "{}: empty national series",
            path.display()
        )));
    }
    for w in rows.windows(2) {
        if w[1].0 == w[0].0 {
            return Err(Error::DuplicateRow {
                region: name.into(),
                year: w[0].0,
            });
        }
        if w[1].0 != w[0].0 + 1 {
            return Err(Error::InvalidArgument(format!(
                "{}: national series has a gap after {}",
                path.display(),
                w[0].0
            )));
        }
    }
    NationalSeries::new(name, rows[0].0, rows.iter().map(|r| r.1).collect())
}

pub fn write_national_csv(series: &NationalSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("year,value\n");
    for (i, v) in series.values.iter().enumerate() {
        out.push_str(&format!("{},{v}\n", series.first_year + i as i32));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub variable: String,
    pub obs: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

/// Descriptive statistics per variable; missing cells are skipped.
/// `sd` uses the n−1 divisor and is 0 for fewer than two observations.
pub fn summarize(ds: &PanelDataset) -> Vec<SummaryRow> {
    ds.series
        .iter()
        .map(|(name, s)| {
            let obs: Vec<f64> = s.values.iter().flatten().copied().collect();
            let n = obs.len();
            let mean = if n > 0 {
                obs.iter().sum::<f64>() / n as f64
            } else {
                f64::NAN
            };
            let sd = if n > 1 {
                (obs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                variable: name.clone(),
                obs: n,
                mean,
                sd,
                min: obs.iter().copied().fold(f64::INFINITY, f64::min),
                max: obs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn tiny() -> PanelDataset {
        let mut ds = PanelDataset::new(vec!["A".into(), "B".into()], 2000, 3).unwrap();
        ds.insert_dense("GDP", vec![100.0, 110.0, 121.0, 50.0, 60.0, 54.0], "eur")
            .unwrap();
        ds.insert_dense("BF", vec![100.0, 250.0, 250.0, 10.0, 5.0, 5.0], "eur")
            .unwrap();
        ds
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn log_diff_of_two_cells() {
        let ds = tiny();
        let s = ds.derive(&TransformTag::new(TransformKind::LogDiff, "GDP")).unwrap();
        assert_eq!(s.values()[0], None);
        assert!((s.values()[1].unwrap() - 0.0953101798043249).abs() < 1e-12);
        assert!((s.values()[1].unwrap() - (110f64.ln() - 100f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn lag_shifts_and_marks_leading_missing() {
        let ds = tiny();
        let s = ds.derive(&TransformTag::new(TransformKind::Lag(1), "GDP")).unwrap();
        assert_eq!(&s.values()[..3], &[None, Some(100.0), Some(110.0)]);
        assert_eq!(&s.values()[3..], &[None, Some(50.0), Some(60.0)]);
        let s2 = ds.derive(&TransformTag::new(TransformKind::Lag(2), "GDP")).unwrap();
        assert_eq!(&s2.values()[..3], &[None, None, Some(100.0)]);
    }

    #[test]
    fn pct_change_is_arithmetic_percent() {
        let ds = tiny();
        let s = ds.derive(&TransformTag::new(TransformKind::PctChange, "BF")).unwrap();
        // (250 - 100) / 100 * 100
        assert_eq!(s.values()[1], Some(150.0));
        assert_eq!(s.values()[4], Some(-50.0));
    }

    #[test]
    fn log_of_non_positive_names_the_cell() {
        let mut ds = tiny();
        ds.insert_dense("X", vec![1.0, 2.0, 0.0, 1.0, 1.0, 1.0], "").unwrap();
        let err = ds.derive(&TransformTag::new(TransformKind::Log, "X")).unwrap_err();
        match err {
            Error::NonPositiveForLog { region, year, .. } => {
                assert_eq!(region, "A");
                assert_eq!(year, 2002);
            }
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(
            ds.derive(&TransformTag::new(TransformKind::Log, "nope")),
            Err(Error::UnknownVariable(_))
        ));
    }

    #[test]
    fn transform_records_provenance_and_keeps_source() {
        let ds = tiny();
        let ds2 = ds
            .with_transform(&TransformTag::new(TransformKind::Log, "GDP"))
            .unwrap();
        let ds3 = ds2
            .with_transform(&TransformTag::new(TransformKind::Diff, "log(GDP)"))
            .unwrap();
        assert_eq!(ds3.series("GDP").unwrap(), ds.series("GDP").unwrap());
        let prov = ds3.series("diff(log(GDP))").unwrap().provenance();
        let kinds: Vec<TransformKind> = prov.iter().map(|t| t.kind).collect();
        assert_eq!(kinds, vec![TransformKind::Raw, TransformKind::Log, TransformKind::Diff]);
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let mut ds = PanelDataset::new(vec!["A".into()], 2000, 2).unwrap();
        assert!(ds.insert_dense("X", vec![1.0, f64::NAN], "").is_err());
        assert!(ds.insert_dense("X", vec![1.0], "").is_err());
    }

    #[test]
    fn loads_hand_written_fixture_exactly() {
        let f = write_tmp(
            "region,year,GDP,BF\nB,2001,2.5,0.125\nA,2000,1,10\nA,2001,1.5,\nB,2000,3e2,7\nA,2002,2,11\nB,2002,-4.25,8\n",
        );
        let ds = load_panel_csv(f.path(), &["GDP", "BF"]).unwrap();
        assert_eq!(ds.regions(), &["A".to_string(), "B".to_string()]);
        assert_eq!(ds.first_year(), 2000);
        assert_eq!(ds.n_years(), 3);
        assert_eq!(
            ds.series("GDP").unwrap().values(),
            &[Some(1.0), Some(1.5), Some(2.0), Some(300.0), Some(2.5), Some(-4.25)]
        );
        assert_eq!(
            ds.series("BF").unwrap().values(),
            &[Some(10.0), None, Some(11.0), Some(7.0), Some(0.125), Some(8.0)]
        );
    }

    #[test]
    fn ingestion_errors_name_the_offender() {
        let f = write_tmp("region,year,GDP\nA,2000,1\nA,2001,2\nB,2000,1\n");
        match load_panel_csv(f.path(), &["GDP"]).unwrap_err() {
            Error::UnbalancedPanel { region, year } => {
                assert_eq!((region.as_str(), year), ("B", 2001))
            }
            e => panic!("unexpected {e}"),
        }
        let f = write_tmp("region,year,GDP\nA,2000,1\nA,2000,2\n");
        assert!(matches!(
            load_panel_csv(f.path(), &["GDP"]),
            Err(Error::DuplicateRow { year: 2000, .. })
        ));
        let f = write_tmp("region,year,GDP\nA,2000,abc\n");
        assert!(matches!(
            load_panel_csv(f.path(), &["GDP"]),
            Err(Error::NonNumericCell { year: 2000, .. })
        ));
        let f = write_tmp("region,year,GDP\nA,2000,NaN\n");
        assert!(matches!(
            load_panel_csv(f.path(), &["GDP"]),
            Err(Error::NonNumericCell { .. })
        ));
        let f = write_tmp("region,year,GDP\nA,2000,1\n");
        match load_panel_csv(f.path(), &["GDP", "BF"]).unwrap_err() {
            Error::MissingColumn { column, .. } => assert_eq!(column, "BF"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn summarize_hand_fixture() {
        let mut ds = PanelDataset::new(vec!["A".into(), "B".into()], 2000, 3).unwrap();
        ds.insert_dense("X", vec![1.0, 2.0, 3.0, 4.0, 5.0, 9.0], "").unwrap();
        ds.insert_dense("C", vec![7.5; 6], "").unwrap();
        let rows = summarize(&ds);
        let x = rows.iter().find(|r| r.variable == "X").unwrap();
        // mean 24/6 = 4, squared deviations 9+4+1+0+1+25 = 40, var 40/5 = 8
        assert_eq!(x.obs, 6);
        assert!((x.mean - 4.0).abs() < 1e-12);
        assert!((x.sd - 8f64.sqrt()).abs() < 1e-12);
        assert_eq!((x.min, x.max), (1.0, 9.0));
        let c = rows.iter().find(|r| r.variable == "C").unwrap();
        assert_eq!((c.sd, c.min, c.max), (0.0, 7.5, 7.5));
    }

    #[test]
    fn summarize_skips_missing() {
        let ds = tiny()
            .with_transform(&TransformTag::new(TransformKind::LogDiff, "GDP"))
            .unwrap();
        let rows = summarize(&ds);
        let r = rows.iter().find(|r| r.variable == "log_diff(GDP)").unwrap();
        assert_eq!(r.obs, 4);
    }

    fn arb_positive_panel() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01f64..1e4, 12)
    }

    proptest! {
        #[test]
        fn log_then_exp_reconstructs(values in arb_positive_panel()) {
            let mut ds = PanelDataset::new(vec!["A".into(), "B".into(), "C".into()], 1990, 4).unwrap();
            ds.insert_dense("X", values.clone(), "").unwrap();
            let s = ds.derive(&TransformTag::new(TransformKind::Log, "X")).unwrap();
            for (v, l) in values.iter().zip(s.values()) {
                prop_assert!(((l.unwrap().exp() - v) / v).abs() < 1e-12);
            }
        }

        #[test]
        fn diff_then_cumsum_reconstructs(values in prop::collection::vec(-1e3f64..1e3, 12)) {
            let mut ds = PanelDataset::new(vec!["A".into(), "B".into(), "C".into()], 1990, 4).unwrap();
            ds.insert_dense("X", values.clone(), "").unwrap();
            let d = ds.derive(&TransformTag::new(TransformKind::Diff, "X")).unwrap();
            for r in 0..3 {
                let mut acc = values[r * 4];
                for t in 1..4 {
                    acc += d.values()[r * 4 + t].unwrap();
                    prop_assert!((acc - values[r * 4 + t]).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn csv_round_trip(values in prop::collection::vec(prop::option::weighted(0.9, -1e6f64..1e6), 12)) {
            let mut ds = PanelDataset::new(vec!["A".into(), "B".into(), "C".into()], 1990, 4).unwrap();
            ds.insert("X", values, "").unwrap();
            let f = tempfile::NamedTempFile::new().unwrap();
            write_panel_csv(&ds, f.path(), &["X"]).unwrap();
            let back = load_panel_csv(f.path(), &["X"]).unwrap();
            prop_assert_eq!(back.series("X").unwrap().values(), ds.series("X").unwrap().values());
        }
    }
}
