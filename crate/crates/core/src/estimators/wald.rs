use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::result::FitResult;
use crate::error::{Error, Result};
use crate::linalg::spd_inverse;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldTestResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub hypothesis: String,
}

/// Wald test of `R β = q` using the fit's own covariance.
pub fn wald_linear(fit: &FitResult, r: &DMatrix<f64>, q: &DVector<f64>, hypothesis: &str) -> Result<WaldTestResult> {
    let b = DVector::from_vec(fit.coefficients.clone());
    let d = r * b - q;
    let vr = r * &fit.covariance * r.transpose();
    let inv = spd_inverse(&vr).ok_or_else(|| Error::SingularRestrictionCovariance {
        group: vec![hypothesis.to_string()],
    })?;
    let statistic = (d.transpose() * inv * &d)[(0, 0)].max(0.0);
    let dof = r.nrows();
    let p_value = ChiSquared::new(dof as f64).map(|c| c.sf(statistic)).unwrap_or(f64::NAN);
    Ok(WaldTestResult {
        statistic,
        dof,
        p_value,
        hypothesis: hypothesis.to_string(),
    })
}

/// Tests that every coefficient in `group` is equal. The restriction
/// matrix stacks `β_first − β_j` for the remaining members, so the
/// statistic does not depend on the group's order.
pub fn wald_equality(fit: &FitResult, group: &[&str]) -> Result<WaldTestResult> {
    if group.len() < 2 {
        return Err(Error::TestInapplicable(format!(
            "equality test needs at least two coefficients, got {}",
            group.len()
        )));
    }
    let idx: Vec<usize> = group
        .iter()
        .map(|g| fit.index(g).ok_or_else(|| Error::UnknownCoefficient(g.to_string())))
        .collect::<Result<_>>()?;
    let p = fit.coefficients.len();
    let mut r = DMatrix::zeros(group.len() - 1, p);
    for j in 1..idx.len() {
        r[(j - 1, idx[0])] = 1.0;
        r[(j - 1, idx[j])] -= 1.0;
    }
    let hypothesis = format!("equal coefficients: {}", group.join(" = "));
    wald_linear(fit, &r, &DVector::zeros(group.len() - 1), &hypothesis).map_err(|e| match e {
        Error::SingularRestrictionCovariance { .. } => Error::SingularRestrictionCovariance {
            group: group.iter().map(|g| g.to_string()).collect(),
        },
        e => e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::result::{CovarianceKind, EstimatorTag, Inference};

    fn fake_fit(coefs: Vec<f64>, cov: DMatrix<f64>) -> FitResult {
        FitResult {
            estimator: EstimatorTag::OlsFe,
            covariance_kind: CovarianceKind::Classical,
            response_name: "y".into(),
            coefficient_names: (0..coefs.len()).map(|i| format!("b{i}")).collect(),
            coefficients: coefs,
            covariance: cov,
            regions: vec![],
            region_effects: vec![],
            rows: vec![],
            nobs: 100,
            dof: 90,
            r_squared: 0.0,
            inference: Inference::Normal,
            rho: None,
            rho_by_region: None,
            sigma_by_region: None,
            iterations: 1,
            converged: true,
        }
    }

    #[test]
    fn two_coefficient_statistic_by_hand() {
        // (1 - 3)^2 / (0.5 + 0.5 - 2*0.1) = 4 / 0.8 = 5
        let cov = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.5]);
        let fit = fake_fit(vec![1.0, 3.0], cov);
        let w = wald_equality(&fit, &["b0", "b1"]).unwrap();
        assert!((w.statistic - 5.0).abs() < 1e-12);
        assert_eq!(w.dof, 1);
        let expected_p = ChiSquared::new(1.0).unwrap().sf(5.0);
        assert!((w.p_value - expected_p).abs() < 1e-14);
    }

    #[test]
    fn group_of_one_is_inapplicable() {
        let fit = fake_fit(vec![1.0], DMatrix::identity(1, 1));
        assert!(matches!(wald_equality(&fit, &["b0"]), Err(Error::TestInapplicable(_))));
    }

    #[test]
    fn singular_restriction_covariance() {
        let fit = fake_fit(vec![1.0, 2.0], DMatrix::from_element(2, 2, 1.0));
        assert!(matches!(
            wald_equality(&fit, &["b0", "b1"]),
            Err(Error::SingularRestrictionCovariance { .. })
        ));
    }

    #[test]
    fn invariant_to_group_order() {
        let cov = DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0, 0.3, 0.1, 0.0, 0.3, 1.5, 0.2, 0.1, 0.1, 0.2, 1.0, 0.05, 0.0, 0.1, 0.05, 0.7,
            ],
        );
        let fit = fake_fit(vec![0.5, 1.7, -0.2, 0.9], cov);
        let a = wald_equality(&fit, &["b0", "b1", "b2", "b3"]).unwrap();
        let b = wald_equality(&fit, &["b3", "b1", "b0", "b2"]).unwrap();
        assert!((a.statistic - b.statistic).abs() < 1e-10 * a.statistic);
        assert_eq!(a.dof, 3);
    }
}
