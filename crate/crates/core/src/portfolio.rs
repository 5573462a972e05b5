//! Closed-form optimal portfolio weights.
//!
//! Minimum variance: `w = Sigma^-1 1 / (1' Sigma^-1 1)`. Mean-variance with
//! a target mean `mu0`:
//!
//! ```text
//! w = (c - mu0 b)/(ac - b^2) Sigma^-1 1 + (mu0 a - b)/(ac - b^2) Sigma^-1 mu,
//! a = 1' Sigma^-1 1,  b = 1' Sigma^-1 mu,  c = mu' Sigma^-1 mu.
//! ```
//!
//! Solves go through a Cholesky factorization; failure to factor is reported
//! as "not positive definite" (shrinking the matrix first usually repairs
//! it). There is deliberately no pseudo-inverse fallback.

use nalgebra::{Cholesky, DMatrix, DVector};
use ndarray::Array2;
use serde::Serialize;

use crate::covariance::WeightVector;
use crate::error::{Error, Result};

/// Optimal weights with the variance they achieve.
#[derive(Debug, Clone, Serialize)]
pub struct PortfolioSolution {
    pub weights: Vec<f64>,
    /// `w' Sigma w` at the optimum.
    pub variance: f64,
    /// Target mean, for the mean-variance variant.
    pub achieved_mean: Option<f64>,
}

impl PortfolioSolution {
    pub fn weight_vector(&self) -> Result<WeightVector> {
        WeightVector::new(self.weights.clone())
    }
}

fn cholesky(sigma: &Array2<f64>) -> Result<(Cholesky<f64, nalgebra::Dyn>, usize)> {
    let d = sigma.nrows();
    if d == 0 || sigma.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d.max(1),
            got: sigma.ncols(),
            context: "covariance matrix must be square",
        });
    }
    let max_asym = sigma
        .iter()
        .zip(sigma.t().iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    let scale = sigma.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1.0);
    if max_asym > 1e-8 * scale {
        return Err(Error::NotPositiveDefinite("matrix is not symmetric"));
    }
    let m = DMatrix::from_row_iterator(d, d, sigma.iter().copied());
    let chol =
        Cholesky::new(m).ok_or(Error::NotPositiveDefinite("Cholesky factorization failed"))?;
    Ok((chol, d))
}

/// Global minimum-variance weights subject to `w' 1 = 1`.
pub fn min_variance_weights(sigma: &Array2<f64>) -> Result<PortfolioSolution> {
    let (chol, d) = cholesky(sigma)?;
    let ones = DVector::from_element(d, 1.0);
    let siginv_one = chol.solve(&ones);
    let a = ones.dot(&siginv_one);
    if a.is_nan() || a <= 0.0 {
        return Err(Error::NotPositiveDefinite("1' Sigma^-1 1 is not positive"));
    }
    let w = &siginv_one / a;
    Ok(PortfolioSolution {
        weights: w.iter().copied().collect(),
        variance: 1.0 / a,
        achieved_mean: None,
    })
}

/// Minimum-variance weights subject to `w' 1 = 1` and `w' mu = mu0`.
pub fn mean_variance_weights(
    sigma: &Array2<f64>,
    mu: &[f64],
    mu0: f64,
) -> Result<PortfolioSolution> {
    let (chol, d) = cholesky(sigma)?;
    if mu.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: mu.len(),
            context: "mean vector",
        });
    }
    let ones = DVector::from_element(d, 1.0);
    let mu_v = DVector::from_row_slice(mu);
    let siginv_one = chol.solve(&ones);
    let siginv_mu = chol.solve(&mu_v);
    let a = ones.dot(&siginv_one);
    let b = ones.dot(&siginv_mu);
    let c = mu_v.dot(&siginv_mu);
    let det = a * c - b * b;
    if det <= 1e-12 * a.abs() * c.abs() {
        return Err(Error::DegenerateConstraints(format!(
            "ac - b^2 = {det:.3e}; the mean vector is (numerically) proportional to 1"
        )));
    }
    let w = siginv_one * ((c - mu0 * b) / det) + siginv_mu * ((mu0 * a - b) / det);
    // w' Sigma w = (c - 2 mu0 b + mu0^2 a) / det, but evaluate directly
    let m = DMatrix::from_row_iterator(d, d, sigma.iter().copied());
    let variance = (&m * &w).dot(&w);
    Ok(PortfolioSolution {
        weights: w.iter().copied().collect(),
        variance,
        achieved_mean: Some(mu0),
    })
}
