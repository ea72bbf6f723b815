use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regression design over (region, year) rows. Cells may be missing; a row
/// enters estimation only if the response and every column are present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub regions: Vec<String>,
    pub row_region: Vec<usize>,
    pub row_year: Vec<i32>,
    pub response_name: String,
    pub response: Vec<Option<f64>>,
    pub column_names: Vec<String>,
    pub columns: Vec<Vec<Option<f64>>>,
}

/// The usable rows of a design, materialized.
#[derive(Debug, Clone)]
pub struct UsableRows {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub region: Vec<usize>,
    pub year: Vec<i32>,
    /// Position of each usable row in the full design.
    pub source_row: Vec<usize>,
}

impl DesignMatrix {
    pub fn new(
        regions: Vec<String>,
        row_region: Vec<usize>,
        row_year: Vec<i32>,
        response_name: impl Into<String>,
        response: Vec<Option<f64>>,
    ) -> Result<Self> {
        let n = row_region.len();
        if row_year.len() != n || response.len() != n {
            return Err(Error::InvalidArgument("design row index lengths differ".into()));
        }
        if row_region.iter().any(|&r| r >= regions.len()) {
            return Err(Error::InvalidArgument("row refers to unknown region".into()));
        }
        Ok(Self {
            regions,
            row_region,
            row_year,
            response_name: response_name.into(),
            response,
            column_names: Vec::new(),
            columns: Vec::new(),
        })
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<Option<f64>>) -> Result<()> {
        let name = name.into();
        if values.len() != self.n_rows() {
            return Err(Error::InvalidArgument(format!(
                "column `{name}` has {} rows, design has {}",
                values.len(),
                self.n_rows()
            )));
        }
        if self.column_names.contains(&name) {
            return Err(Error::InvalidArgument(format!("duplicate column `{name}`")));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("column `{name}` has non-finite values")));
        }
        self.column_names.push(name);
        self.columns.push(values);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.row_region.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn usable_mask(&self) -> Vec<bool> {
        (0..self.n_rows())
            .map(|i| self.response[i].is_some() && self.columns.iter().all(|c| c[i].is_some()))
            .collect()
    }

    /// Keeps only rows with `first <= year <= last`.
    pub fn restrict_years(&self, first: i32, last: i32) -> DesignMatrix {
        let keep: Vec<usize> = (0..self.n_rows())
            .filter(|&i| self.row_year[i] >= first && self.row_year[i] <= last)
            .collect();
        self.select_rows(&keep)
    }

    pub fn select_rows(&self, keep: &[usize]) -> DesignMatrix {
        DesignMatrix {
            regions: self.regions.clone(),
            row_region: keep.iter().map(|&i| self.row_region[i]).collect(),
            row_year: keep.iter().map(|&i| self.row_year[i]).collect(),
            response_name: self.response_name.clone(),
            response: keep.iter().map(|&i| self.response[i]).collect(),
            column_names: self.column_names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| keep.iter().map(|&i| c[i]).collect())
                .collect(),
        }
    }

    /// Drops the named columns.
    pub fn without_columns(&self, names: &[&str]) -> DesignMatrix {
        let mut out = self.clone();
        let keep: Vec<usize> = (0..self.n_columns())
            .filter(|&j| !names.contains(&self.column_names[j].as_str()))
            .collect();
        out.column_names = keep.iter().map(|&j| self.column_names[j].clone()).collect();
        out.columns = keep.iter().map(|&j| self.columns[j].clone()).collect();
        out
    }

    /// Usable rows sorted by (region, year).
    pub fn usable(&self) -> UsableRows {
        let mask = self.usable_mask();
        let mut idx: Vec<usize> = (0..self.n_rows()).filter(|&i| mask[i]).collect();
        idx.sort_by_key(|&i| (self.row_region[i], self.row_year[i]));
        let n = idx.len();
        let k = self.n_columns();
        let y = DVector::from_iterator(n, idx.iter().map(|&i| self.response[i].unwrap()));
        let x = DMatrix::from_fn(n, k, |r, c| self.columns[c][idx[r]].unwrap());
        UsableRows {
            y,
            x,
            region: idx.iter().map(|&i| self.row_region[i]).collect(),
            year: idx.iter().map(|&i| self.row_year[i]).collect(),
            source_row: idx,
        }
    }

    /// Distinct years with at least one usable row.
    pub fn usable_years(&self) -> BTreeSet<i32> {
        let mask = self.usable_mask();
        (0..self.n_rows())
            .filter(|&i| mask[i])
            .map(|i| self.row_year[i])
            .collect()
    }
}

impl UsableRows {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Contiguous `[start, end)` row ranges per region (rows are region-sorted).
    pub fn groups(&self, n_regions: usize) -> Vec<Option<(usize, usize)>> {
        let mut out = vec![None; n_regions];
        let mut start = 0;
        while start < self.region.len() {
            let r = self.region[start];
            let mut end = start;
            while end < self.region.len() && self.region[end] == r {
                end += 1;
            }
            out[r] = Some((start, end));
            start = end;
        }
        out
    }
}
