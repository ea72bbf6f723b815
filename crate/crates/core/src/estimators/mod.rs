//! Regression engines: fixed-effects OLS, FGLS with AR(1) errors and
//! panel heteroskedasticity, and Wald tests.

mod design;
mod fgls;
mod ols;
mod result;
mod wald;

pub use design::{DesignMatrix, UsableRows};
pub use fgls::{fit_fgls, fit_fgls_ar1_het, Ar1Mode, FglsConfig};
pub use ols::{fit_ols_fe, fit_ols_fe_with};
pub use result::{CoefRow, CovarianceKind, EstimatorTag, FitResult, Inference, ResidualRow};
pub use wald::{wald_equality, wald_linear, WaldTestResult};
