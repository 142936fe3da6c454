//! Multivariate quantitative-trait TDT.
//!
//! The transmission indicator Z is regressed on centered phenotypes with a
//! no-intercept logistic model,
//! `logit P(Z = 1 | y) = Σ βᵢ (yᵢ − cᵢ)`,
//! and H0: β = 0 is tested with a likelihood-ratio statistic on k degrees
//! of freedom. Under H0 the model has no free parameter, so the null
//! log-likelihood is N·ln(1/2).

use crate::error::{Error, Result};
use crate::glm::{chi_square_sf, fit_logistic, DesignMatrix, FitWarning};
use crate::missingness::Transmission;
use crate::stats::{mean, median};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Centering {
    #[default]
    Mean,
    Median,
}

impl Centering {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean" => Ok(Centering::Mean),
            "median" => Ok(Centering::Median),
            other => Err(Error::Configuration(format!("unknown centering '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Centering::Mean => "mean",
            Centering::Median => "median",
        }
    }

    fn center(&self, values: &[f64]) -> f64 {
        match self {
            Centering::Mean => mean(values),
            Centering::Median => median(values),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestInput {
    pub transmissions: Vec<Transmission>,
    pub centering: Centering,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestResult {
    pub lrt: f64,
    pub df: usize,
    pub p_value: f64,
    pub coefficients: Vec<f64>,
    pub converged: bool,
    pub warning: Option<FitWarning>,
}

impl TestResult {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

pub fn multivariate_tdt(input: &TestInput) -> Result<TestResult> {
    let rows = &input.transmissions;
    let k = rows.first().map(|t| t.y.len()).unwrap_or(0);
    if k == 0 {
        return Err(Error::InsufficientData("no transmissions or no traits".into()));
    }
    if rows.iter().any(|t| t.y.len() != k) {
        return Err(Error::Configuration("transmissions have differing trait counts".into()));
    }
    if rows.len() < k + 5 {
        return Err(Error::InsufficientData(format!(
            "{} transmissions for {k} trait(s); at least {} required",
            rows.len(),
            k + 5
        )));
    }

    let centers: Vec<f64> = (0..k)
        .map(|j| {
            let column: Vec<f64> = rows.iter().map(|t| t.y[j]).collect();
            input.centering.center(&column)
        })
        .collect();
    let design: Vec<Vec<f64>> = rows
        .iter()
        .map(|t| t.y.iter().zip(&centers).map(|(y, c)| y - c).collect())
        .collect();
    let x = DesignMatrix::from_rows(&design)?;
    let z: Vec<f64> = rows.iter().map(|t| if t.z { 1.0 } else { 0.0 }).collect();
    let fit = fit_logistic(&x, &z)?;

    let null_ll = rows.len() as f64 * 0.5f64.ln();
    let lrt = (2.0 * (fit.log_likelihood - null_ll)).max(0.0);
    Ok(TestResult {
        lrt,
        df: k,
        p_value: chi_square_sf(lrt, k as f64),
        coefficients: fit.coefficients,
        converged: fit.converged,
        warning: fit.warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(z: bool, y: &[f64]) -> Transmission {
        Transmission { z, y: y.to_vec() }
    }

    #[test]
    fn symmetric_data_gives_zero_statistic() {
        // Each row twice so the k + 5 minimum is met.
        let mut rows = Vec::new();
        for _ in 0..2 {
            rows.extend([t(false, &[1.0]), t(true, &[1.0]), t(false, &[-1.0]), t(true, &[-1.0])]);
        }
        let res = multivariate_tdt(&TestInput {
            transmissions: rows,
            centering: Centering::Mean,
        })
        .unwrap();
        assert!(res.lrt.abs() < 1e-12);
        assert!((res.p_value - 1.0).abs() < 1e-12);
        assert!(res.converged);
    }

    #[test]
    fn too_few_rows_rejected() {
        let rows = vec![t(true, &[1.0, 2.0]); 6];
        let err = multivariate_tdt(&TestInput {
            transmissions: rows,
            centering: Centering::Mean,
        })
        .unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }

    #[test]
    fn ragged_rows_rejected() {
        let mut rows = vec![t(true, &[1.0, 2.0]); 10];
        rows.push(t(false, &[1.0]));
        assert!(multivariate_tdt(&TestInput {
            transmissions: rows,
            centering: Centering::Median,
        })
        .is_err());
    }

    #[test]
    fn p_value_matches_chi_square_tail() {
        let rows: Vec<Transmission> = (0..40)
            .map(|i| t(i % 3 == 0 || i > 30, &[i as f64 / 10.0, ((i * 7) % 11) as f64]))
            .collect();
        let res = multivariate_tdt(&TestInput {
            transmissions: rows,
            centering: Centering::Mean,
        })
        .unwrap();
        assert_eq!(res.df, 2);
        assert!((res.p_value - chi_square_sf(res.lrt, 2.0)).abs() < 1e-15);
        assert!(res.lrt > 0.0);
    }
}
