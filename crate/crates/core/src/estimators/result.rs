use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorTag {
    OlsFe,
    FglsAr1Het,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    Classical,
    /// White heteroskedasticity-robust (HC1).
    Hc1,
    /// Clustered by region.
    #[default]
    Clustered,
    /// (W'W)^{-1} of the transformed, variance-weighted FGLS design.
    Fgls,
}

/// Reference distribution for t ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inference {
    StudentT { dof: f64 },
    Normal,
}

impl Inference {
    pub fn two_sided_p(&self, t: f64) -> f64 {
        if !t.is_finite() {
            return f64::NAN;
        }
        let upper = match *self {
            Inference::StudentT { dof } => StudentsT::new(0.0, 1.0, dof).map(|d| d.sf(t.abs())),
            Inference::Normal => Normal::new(0.0, 1.0).map(|d| d.sf(t.abs())),
        };
        (2.0 * upper.unwrap_or(f64::NAN)).min(1.0)
    }

    /// Two-sided critical value at confidence `level` (e.g. 0.95).
    pub fn critical(&self, level: f64) -> f64 {
        let q = 0.5 + level / 2.0;
        match *self {
            Inference::StudentT { dof } => StudentsT::new(0.0, 1.0, dof)
                .map(|d| d.inverse_cdf(q))
                .unwrap_or(f64::NAN),
            Inference::Normal => Normal::new(0.0, 1.0).map(|d| d.inverse_cdf(q)).unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub region: usize,
    pub year: i32,
    pub observed: f64,
    pub fitted: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub estimator: EstimatorTag,
    pub covariance_kind: CovarianceKind,
    pub response_name: String,
    pub coefficient_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub regions: Vec<String>,
    /// Recovered region effects; `None` for regions without usable rows.
    pub region_effects: Vec<Option<f64>>,
    /// Usable rows, sorted by (region, year).
    pub rows: Vec<ResidualRow>,
    pub nobs: usize,
    pub dof: usize,
    /// Squared correlation between fitted and observed response.
    pub r_squared: f64,
    pub inference: Inference,
    pub rho: Option<f64>,
    pub rho_by_region: Option<Vec<f64>>,
    pub sigma_by_region: Option<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefRow {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
}

impl FitResult {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.coefficient_names.iter().position(|c| c == name)
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.covariance[(i, i)].max(0.0).sqrt())
    }

    pub fn t_stat(&self, name: &str) -> Option<f64> {
        Some(self.coefficient(name)? / self.std_error(name)?)
    }

    pub fn p_value(&self, name: &str) -> Option<f64> {
        self.t_stat(name).map(|t| self.inference.two_sided_p(t))
    }

    /// Symmetric confidence interval at `level`.
    pub fn confidence_interval(&self, name: &str, level: f64) -> Option<(f64, f64)> {
        let b = self.coefficient(name)?;
        let half = self.inference.critical(level) * self.std_error(name)?;
        Some((b - half, b + half))
    }

    pub fn coef_table(&self) -> Vec<CoefRow> {
        self.coefficient_names
            .iter()
            .map(|n| CoefRow {
                name: n.clone(),
                estimate: self.coefficient(n).unwrap(),
                std_error: self.std_error(n).unwrap(),
                t_stat: self.t_stat(n).unwrap(),
                p_value: self.p_value(n).unwrap(),
            })
            .collect()
    }

    pub fn residual_ssr(&self) -> f64 {
        self.rows.iter().map(|r| r.residual * r.residual).sum()
    }

    /// Linear prediction for a region given regressor values in coefficient order.
    pub fn predict(&self, region: usize, x: &[f64]) -> Option<f64> {
        let mu = self.region_effects.get(region).copied().flatten()?;
        Some(mu + self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>())
    }

    /// Variance of a linear combination `w'β`.
    pub fn combination_variance(&self, weights: &[(usize, f64)]) -> f64 {
        let mut v = 0.0;
        for &(i, wi) in weights {
            for &(j, wj) in weights {
                v += wi * wj * self.covariance[(i, j)];
            }
        }
        v
    }
}
