//! Asymptotic variance parameters, their lag-window estimators, and the
//! approximating martingale.
//!
//! For projected coefficient sequences `a_j = c_j^(v)`, `b_j = c_j^(w)` the
//! centered product series `xi_i = y_i(v) y_i(w) - E[..]` obeys a CLT with
//! long-run variance
//!
//! ```text
//! alpha^2 = (gamma4 - sigma2^2) f~_{0,0}^2 + sigma2^2 sum_{l>=1} f~_{l,0}^2,
//! ```
//!
//! where `f~_{0,i} = sum_{j>=i} a_j b_j` and, for `l >= 1`,
//! `f~_{l,i} = sum_{j>=i} (a_j b_{j+l} + b_j a_{j+l})`. The same quantities
//! drive the covariance parameter `beta` of several simultaneous bilinear
//! forms and the martingale that tracks the partial-sum process.
//!
//! Note the `l = 0` convention: the summand is NOT symmetrized (doing so
//! would double-count the diagonal and, for i.i.d. data, report four times
//! the variance of the sample variance instead of `2 sigma^4`).
//!
//! `alpha^2` equals the sum of all autocovariances of the product series, so
//! the lag-window estimators here are the usual Bartlett/truncated-kernel
//! long-run variance estimators applied to `y_i(v) y_i(w)`.

use serde::{Deserialize, Serialize};

use crate::covariance::{product_series, WeightVector};
use crate::error::{Error, Result};
use crate::model::{CoefficientModel, InnovationHistory, InnovationSpec, Panel};

/// Projected moving-average coefficients `c_j^(w) = sum_nu w_nu c_j^(nu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedCoefficients {
    coeffs: Vec<f64>,
}

impl ProjectedCoefficients {
    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("coeffs", "need at least lag 0"));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coeffs", "non-finite coefficient"));
        }
        Ok(Self { coeffs })
    }

    pub fn truncation_lag(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// Project a model's coefficient matrix with a weighting vector.
pub fn projected_coefficients(
    model: &CoefficientModel,
    w: &WeightVector,
) -> Result<ProjectedCoefficients> {
    if model.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: w.dim(),
            context: "projected coefficients",
        });
    }
    let coeffs = w.entries().dot(model.coefficients()).to_vec();
    ProjectedCoefficients::from_coeffs(coeffs)
}

/// The tail sums `f~_{l,i}` of products of two projected coefficient
/// sequences; lags past either sequence's truncation count as zero.
///
/// `l = 0`: `sum_{j>=i} a_j b_j` (unsymmetrized);
/// `l >= 1`: `sum_{j>=i} (a_j b_{j+l} + b_j a_{j+l})`.
pub fn f_tilde(cv: &ProjectedCoefficients, cw: &ProjectedCoefficients, l: usize, i: usize) -> f64 {
    let a = cv.coeffs();
    let b = cw.coeffs();
    let at = |j: usize| a.get(j).copied().unwrap_or(0.0);
    let bt = |j: usize| b.get(j).copied().unwrap_or(0.0);
    let last = a.len().max(b.len());
    if l == 0 {
        (i..last.min(a.len().min(b.len()))).map(|j| a[j] * b[j]).sum()
    } else {
        (i..last.saturating_sub(l)).map(|j| at(j) * bt(j + l) + bt(j) * at(j + l)).sum()
    }
}

/// Lag-window kind for the long-run variance estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// Triangular weights `1 - h/(m+1)`.
    Bartlett,
    /// Flat weights `1` up to the bandwidth.
    Truncated,
}

/// Bandwidth rule: fixed, or the default `m = floor(n^(1/3))`, which keeps
/// `m^2/n -> 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Auto,
    Fixed(usize),
}

/// Lag-window specification for [`lrv_estimate`] / [`cross_lrv_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub bandwidth: Bandwidth,
    /// Clamp a negative estimate to zero (with a warning). Off by default;
    /// only the truncated kernel can go negative.
    #[serde(default)]
    pub clamp_to_zero: bool,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            kind: KernelKind::Bartlett,
            bandwidth: Bandwidth::Auto,
            clamp_to_zero: false,
        }
    }
}

impl KernelSpec {
    pub fn bartlett(bandwidth: Bandwidth) -> Self {
        Self {
            kind: KernelKind::Bartlett,
            bandwidth,
            ..Self::default()
        }
    }

    pub fn truncated(bandwidth: Bandwidth) -> Self {
        Self {
            kind: KernelKind::Truncated,
            bandwidth,
            ..Self::default()
        }
    }

    /// Resolved bandwidth for sample size `n`.
    pub fn bandwidth_for(&self, n: usize) -> usize {
        match self.bandwidth {
            Bandwidth::Fixed(m) => m,
            // the nudge keeps perfect cubes (1000^(1/3) = 9.999...) exact
            Bandwidth::Auto => ((n as f64).cbrt() + 1e-9).floor() as usize,
        }
    }

    /// Weight `w_{mh}` for lag `1 <= h <= m`; zero beyond the bandwidth.
    pub fn weight(&self, h: usize, m: usize) -> f64 {
        if h > m {
            return 0.0;
        }
        match self.kind {
            KernelKind::Bartlett => 1.0 - h as f64 / (m as f64 + 1.0),
            KernelKind::Truncated => 1.0,
        }
    }
}

/// Asymptotic variance `alpha^2` together with the truncation that produced
/// it and the (exact) contribution dropped beyond `l_max`.
#[derive(Debug, Clone, Serialize)]
pub struct LimitVariance {
    pub alpha2: f64,
    pub l_max: usize,
    pub truncation_lag: usize,
    /// `sigma^4 sum_{l > l_max} f~_{l,0}^2`, zero whenever `l_max >= J`.
    pub tail: f64,
}

/// `alpha^2` from projected coefficient sequences. `l_max` defaults to
/// `4 J`, far past the point where the truncated model's `f~_{l,0}` vanish.
pub fn alpha_squared_projected(
    cv: &ProjectedCoefficients,
    cw: &ProjectedCoefficients,
    innov: &InnovationSpec,
    l_max: Option<usize>,
) -> Result<LimitVariance> {
    innov.validate()?;
    let lag = cv.truncation_lag().max(cw.truncation_lag());
    let l_max = l_max.unwrap_or(4 * lag.max(1));
    let sigma4 = innov.sigma2 * innov.sigma2;
    let kurt = innov.gamma4() - sigma4;
    let f00 = f_tilde(cv, cw, 0, 0);
    let mut series = 0.0;
    for l in 1..=l_max.min(lag) {
        let f = f_tilde(cv, cw, l, 0);
        series += f * f;
    }
    let mut tail = 0.0;
    for l in (l_max + 1)..=lag {
        let f = f_tilde(cv, cw, l, 0);
        tail += sigma4 * f * f;
    }
    let alpha2 = kurt * f00 * f00 + sigma4 * series;
    if !alpha2.is_finite() || alpha2 < -1e-12 {
        return Err(Error::Numeric(format!("alpha^2 evaluated to {alpha2}")));
    }
    Ok(LimitVariance {
        alpha2: alpha2.max(0.0),
        l_max,
        truncation_lag: lag,
        tail,
    })
}

/// `alpha^2(v, w)` for a model and two weighting vectors.
pub fn alpha_squared(
    model: &CoefficientModel,
    innov: &InnovationSpec,
    v: &WeightVector,
    w: &WeightVector,
    l_max: Option<usize>,
) -> Result<LimitVariance> {
    let cv = projected_coefficients(model, v)?;
    let cw = projected_coefficients(model, w)?;
    alpha_squared_projected(&cv, &cw, innov, l_max)
}

/// Covariance parameter `beta` of two bilinear forms from projected
/// coefficients:
/// `f~_{0,0} f~'_{0,0} (gamma4 - sigma^4) + sigma^4 sum_l f~_{l,0} f~'_{l,0}`.
pub fn beta_coefficient_projected(
    pair_a: (&ProjectedCoefficients, &ProjectedCoefficients),
    pair_b: (&ProjectedCoefficients, &ProjectedCoefficients),
    innov: &InnovationSpec,
    l_max: Option<usize>,
) -> Result<f64> {
    innov.validate()?;
    let lag = pair_a
        .0
        .truncation_lag()
        .max(pair_a.1.truncation_lag())
        .max(pair_b.0.truncation_lag())
        .max(pair_b.1.truncation_lag());
    let l_max = l_max.unwrap_or(4 * lag.max(1));
    let sigma4 = innov.sigma2 * innov.sigma2;
    let kurt = innov.gamma4() - sigma4;
    let mut beta = kurt * f_tilde(pair_a.0, pair_a.1, 0, 0) * f_tilde(pair_b.0, pair_b.1, 0, 0);
    for l in 1..=l_max.min(lag) {
        beta += sigma4 * f_tilde(pair_a.0, pair_a.1, l, 0) * f_tilde(pair_b.0, pair_b.1, l, 0);
    }
    if !beta.is_finite() {
        return Err(Error::Numeric(format!("beta evaluated to {beta}")));
    }
    Ok(beta)
}

/// `beta((v, w), (v~, w~))` for a model and two pairs of weighting vectors.
/// The diagonal case `pair_a == pair_b` reduces to `alpha^2`.
pub fn beta_coefficient(
    model: &CoefficientModel,
    innov: &InnovationSpec,
    pair_a: (&WeightVector, &WeightVector),
    pair_b: (&WeightVector, &WeightVector),
    l_max: Option<usize>,
) -> Result<f64> {
    let ca = (
        projected_coefficients(model, pair_a.0)?,
        projected_coefficients(model, pair_a.1)?,
    );
    let cb = (
        projected_coefficients(model, pair_b.0)?,
        projected_coefficients(model, pair_b.1)?,
    );
    beta_coefficient_projected((&ca.0, &ca.1), (&cb.0, &cb.1), innov, l_max)
}

fn check_bandwidth(n: usize, m: usize) -> Result<()> {
    if n <= m + 1 {
        return Err(Error::InsufficientData(format!(
            "long-run variance estimation needs n > m + 1 (n = {n}, m = {m})"
        )));
    }
    Ok(())
}

/// Lag-window long-run variance estimate from a precomputed product series
/// `p_i = y_i(v) y_i(w)`:
/// `Gamma_hat(h) = n^{-1} sum_{i=1}^{n-h} (p_i - mu)(p_{i+h} - mu)` and
/// `alpha_hat^2 = Gamma_hat(0) + 2 sum_{h=1}^m w_{mh} Gamma_hat(h)`.
pub fn lrv_estimate_from_products(products: &[f64], kernel: &KernelSpec) -> Result<f64> {
    let n = products.len();
    let m = kernel.bandwidth_for(n);
    check_bandwidth(n, m)?;
    let mu = products.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = products.iter().map(|p| p - mu).collect();
    let gamma = |h: usize| -> f64 {
        (0..n - h)
            .map(|i| centered[i] * centered[i + h])
            .sum::<f64>()
            / n as f64
    };
    let mut est = gamma(0);
    for h in 1..=m {
        est += 2.0 * kernel.weight(h, m) * gamma(h);
    }
    if kernel.clamp_to_zero && est < 0.0 {
        log::warn!("long-run variance estimate {est} clamped to 0");
        return Ok(0.0);
    }
    Ok(est)
}

/// `alpha_hat^2(v, w)` for a panel.
pub fn lrv_estimate(
    panel: &Panel,
    v: &WeightVector,
    w: &WeightVector,
    kernel: &KernelSpec,
) -> Result<f64> {
    let products = product_series(panel, v, w)?;
    lrv_estimate_from_products(&products, kernel)
}

/// Cross long-run covariance estimate `beta_hat^2(r, s)` from the two
/// product series of the pairs `r` and `s`, each centered at its own mean:
/// `Gamma_hat^{(r,s)}(h) = n^{-1} sum_{k=1}^{n-h} (p_k(r) - mu_r)(p_{k+h}(s) - mu_s)`.
pub fn cross_lrv_estimate_from_products(
    products_r: &[f64],
    products_s: &[f64],
    kernel: &KernelSpec,
) -> Result<f64> {
    let n = products_r.len();
    if products_s.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: products_s.len(),
            context: "cross product series",
        });
    }
    let m = kernel.bandwidth_for(n);
    check_bandwidth(n, m)?;
    let mu_r = products_r.iter().sum::<f64>() / n as f64;
    let mu_s = products_s.iter().sum::<f64>() / n as f64;
    let xr: Vec<f64> = products_r.iter().map(|p| p - mu_r).collect();
    let xs: Vec<f64> = products_s.iter().map(|p| p - mu_s).collect();
    let gamma = |h: usize| -> f64 { (0..n - h).map(|k| xr[k] * xs[k + h]).sum::<f64>() / n as f64 };
    let mut est = gamma(0);
    for h in 1..=m {
        est += 2.0 * kernel.weight(h, m) * gamma(h);
    }
    Ok(est)
}

/// `beta_hat^2((v_r, w_r), (v_s, w_s))` for a panel.
pub fn cross_lrv_estimate(
    panel: &Panel,
    pair_r: (&WeightVector, &WeightVector),
    pair_s: (&WeightVector, &WeightVector),
    kernel: &KernelSpec,
) -> Result<f64> {
    let pr = product_series(panel, pair_r.0, pair_r.1)?;
    let ps = product_series(panel, pair_s.0, pair_s.1)?;
    cross_lrv_estimate_from_products(&pr, &ps, kernel)
}

/// The `f~` coefficients that drive the approximating martingale
/// `M_k = f~_{0,0} sum_{i=0}^k (eps_i^2 - sigma^2)
///      + sum_{i=0}^k eps_i sum_{l=1}^{L} f~_{l,0} eps_{i-l}`.
#[derive(Debug, Clone)]
pub struct MartingaleCoeffs {
    f00: f64,
    /// `fl[l - 1] = f~_{l,0}`.
    fl: Vec<f64>,
}

impl MartingaleCoeffs {
    pub fn new(
        cv: &ProjectedCoefficients,
        cw: &ProjectedCoefficients,
        l_max: Option<usize>,
    ) -> Self {
        let lag = cv.truncation_lag().max(cw.truncation_lag());
        let l_max = l_max.unwrap_or(4 * lag.max(1)).min(lag.max(1));
        let f00 = f_tilde(cv, cw, 0, 0);
        let mut fl: Vec<f64> = (1..=l_max).map(|l| f_tilde(cv, cw, l, 0)).collect();
        // vanished tail lags would only demand history they cannot use
        while fl.last() == Some(&0.0) {
            fl.pop();
        }
        Self { f00, fl }
    }

    pub fn f00(&self) -> f64 {
        self.f00
    }

    pub fn lag_depth(&self) -> usize {
        self.fl.len()
    }

    fn increment(&self, history: &InnovationHistory, i: i64, sigma2: f64) -> Result<f64> {
        let eps_i = history.get(i).ok_or_else(|| {
            Error::InsufficientData(format!("martingale needs eps_{i} in the history"))
        })?;
        let mut cross = 0.0;
        for (idx, f) in self.fl.iter().enumerate() {
            let l = (idx + 1) as i64;
            let eps_lag = history.get(i - l).ok_or_else(|| {
                Error::InsufficientData(format!(
                    "martingale needs eps_{} (lag {l} behind eps_{i})",
                    i - l
                ))
            })?;
            cross += f * eps_lag;
        }
        Ok(self.f00 * (eps_i * eps_i - sigma2) + eps_i * cross)
    }
}

/// The martingale value `M_k` (sum over `i = 0..=k`). The innovation history
/// must reach back `L` lags before time 0.
pub fn martingale_partial_sum(
    history: &InnovationHistory,
    coeffs: &MartingaleCoeffs,
    k: usize,
    sigma2: f64,
) -> Result<f64> {
    let path = martingale_path(history, coeffs, k, sigma2)?;
    Ok(path[k])
}

/// The full martingale path `M_0, ..., M_n`.
pub fn martingale_path(
    history: &InnovationHistory,
    coeffs: &MartingaleCoeffs,
    n: usize,
    sigma2: f64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    for i in 0..=n as i64 {
        acc += coeffs.increment(history, i, sigma2)?;
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        simulate_innovations, simulate_panel, CoefficientModel, InnovationDistribution,
        InnovationSpec,
    };
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn pc(v: Vec<f64>) -> ProjectedCoefficients {
        ProjectedCoefficients::from_coeffs(v).unwrap()
    }

    /// Independent route to alpha^2: sum the autocovariances of the product
    /// series directly. With `A_h = sum a_j a_{j+h}` etc., the quartic
    /// moment expansion for linear forms of i.i.d. innovations gives
    /// `gamma_xi(h) = sigma^4 (A_h B_h + C_h D_h) + (gamma4 - 3 sigma^4) Q_h`
    /// and `alpha^2 = gamma_xi(0) + 2 sum_{h>=1} gamma_xi(h)`.
    fn alpha2_by_autocovariance_route(a: &[f64], b: &[f64], sigma2: f64, gamma4: f64) -> f64 {
        let lag = a.len().max(b.len());
        let at = |j: usize| a.get(j).copied().unwrap_or(0.0);
        let bt = |j: usize| b.get(j).copied().unwrap_or(0.0);
        let sigma4 = sigma2 * sigma2;
        let quart = gamma4 - 3.0 * sigma4;
        let gamma_xi = |h: usize| -> f64 {
            let mut ah = 0.0;
            let mut bh = 0.0;
            let mut ch = 0.0;
            let mut dh = 0.0;
            let mut qh = 0.0;
            for j in 0..lag {
                ah += at(j) * at(j + h);
                bh += bt(j) * bt(j + h);
                ch += at(j) * bt(j + h);
                dh += bt(j) * at(j + h);
                qh += at(j) * bt(j) * at(j + h) * bt(j + h);
            }
            sigma4 * (ah * bh + ch * dh) + quart * qh
        };
        let mut total = gamma_xi(0);
        for h in 1..=lag {
            total += 2.0 * gamma_xi(h);
        }
        total
    }

    #[test]
    fn projected_coefficients_cases() {
        let m = CoefficientModel::explicit(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let e0 = WeightVector::basis(2, 0).unwrap();
        assert_eq!(
            projected_coefficients(&m, &e0).unwrap().coeffs(),
            &[1.0, 0.0]
        );
        let zero = WeightVector::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(
            projected_coefficients(&m, &zero).unwrap().coeffs(),
            &[0.0, 0.0]
        );
        let half = WeightVector::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(
            projected_coefficients(&m, &half).unwrap().coeffs(),
            &[0.5, 0.5]
        );
    }

    #[test]
    fn f_tilde_cases() {
        let unit = pc(vec![1.0]);
        assert_eq!(f_tilde(&unit, &unit, 0, 0), 1.0);
        assert_eq!(f_tilde(&unit, &unit, 0, 5), 0.0);
        let ma1 = pc(vec![1.0, 0.5]);
        assert_eq!(f_tilde(&ma1, &ma1, 1, 0), 1.0);
    }

    #[test]
    fn f_tilde_treats_unequal_lengths_as_zero_padded() {
        let long = pc(vec![1.0, 1.0, 1.0]);
        let short = pc(vec![1.0]);
        let padded = pc(vec![1.0, 0.0, 0.0]);
        for l in 0..=3usize {
            for i in 0..=2usize {
                assert_eq!(
                    f_tilde(&long, &short, l, i),
                    f_tilde(&long, &padded, l, i),
                    "l={l} i={i}"
                );
                assert_eq!(
                    f_tilde(&short, &long, l, i),
                    f_tilde(&padded, &long, l, i),
                    "swapped l={l} i={i}"
                );
            }
        }
        // concrete value: sum a_j b_{j+1} + b_j a_{j+1} with b = delta_0
        assert_eq!(f_tilde(&long, &short, 1, 0), 1.0);
    }

    #[test]
    fn f_tilde_scaling_property() {
        let cv = pc(vec![1.0, 0.4, -0.2]);
        let cw = pc(vec![0.3, -0.1, 0.7]);
        let cv_s = pc(cv.coeffs().iter().map(|c| 2.5 * c).collect());
        let cw_s = pc(cw.coeffs().iter().map(|c| -0.5 * c).collect());
        for l in 0..=3usize {
            for i in 0..=3usize {
                assert_relative_eq!(
                    f_tilde(&cv_s, &cw_s, l, i),
                    2.5 * -0.5 * f_tilde(&cv, &cw, l, i),
                    max_relative = 1e-13,
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn alpha2_iid_gaussian_is_two() {
        let m = CoefficientModel::explicit(vec![vec![1.0]]).unwrap();
        let innov = InnovationSpec::standard_gaussian();
        let w = WeightVector::uniform(1).unwrap();
        let a = alpha_squared(&m, &innov, &w, &w, None).unwrap();
        assert_abs_diff_eq!(a.alpha2, 2.0, epsilon = 1e-12);
        assert_eq!(a.tail, 0.0);
    }

    #[test]
    fn alpha2_iid_gaussian_matches_monte_carlo_variance() {
        // Brute-force oracle for the benchmark value: the variance of
        // sqrt(n) (sigma2_hat - 1) over many i.i.d. N(0,1) samples is 2.
        use rayon::prelude::*;
        let reps = 4000usize;
        let n = 4000usize;
        let stats: Vec<f64> = (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let h =
                    simulate_innovations(&InnovationSpec::standard_gaussian(), 1, n as i64, 303, r)
                        .unwrap();
                let xs = h.window(1, n as i64).unwrap();
                let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
                (n as f64).sqrt() * (var - 1.0)
            })
            .collect();
        let mean = stats.iter().sum::<f64>() / reps as f64;
        let mc_var = stats.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (reps - 1) as f64;
        // SE of the MC variance: sqrt((E X^4 - var^2)/reps) with X
        // approximately N(0, 2), so E X^4 ~ 12
        let se = ((12.0 - 4.0) / reps as f64).sqrt();
        assert!(
            (mc_var - 2.0).abs() <= 3.0 * se,
            "MC variance {mc_var}, se {se}"
        );
    }

    #[test]
    fn alpha2_zero_weight_is_zero() {
        let m = CoefficientModel::geometric(vec![0.5, 0.2], 30).unwrap();
        let innov = InnovationSpec::standard_gaussian();
        let v = WeightVector::uniform(2).unwrap();
        let zero = WeightVector::new(vec![0.0, 0.0]).unwrap();
        let a = alpha_squared(&m, &innov, &v, &zero, None).unwrap();
        assert_eq!(a.alpha2, 0.0);
    }

    #[test]
    fn alpha2_scaling_property() {
        let m = CoefficientModel::geometric(vec![0.6, -0.4, 0.2], 50).unwrap();
        let innov = InnovationSpec::new(InnovationDistribution::StudentT { df: 7.0 }, 1.3).unwrap();
        let v = WeightVector::new(vec![0.4, 0.1, -0.3]).unwrap();
        let w = WeightVector::new(vec![-0.2, 0.5, 0.6]).unwrap();
        let base = alpha_squared(&m, &innov, &v, &w, None).unwrap().alpha2;
        let scaled = alpha_squared(
            &m,
            &innov,
            &v.scaled(3.0).unwrap(),
            &w.scaled(-2.0).unwrap(),
            None,
        )
        .unwrap()
        .alpha2;
        // alpha^2(s1 v, s2 w) = s1^2 s2^2 alpha^2(v, w)
        assert_relative_eq!(scaled, 36.0 * base, max_relative = 1e-12);
    }

    #[test]
    fn alpha2_agrees_with_autocovariance_summation_route() {
        // Two algebraically independent evaluations of the same limit.
        let laws = [
            InnovationSpec::new(InnovationDistribution::StudentT { df: 9.0 }, 0.7).unwrap(),
            InnovationSpec::new(InnovationDistribution::Uniform, 1.4).unwrap(),
            InnovationSpec::standard_gaussian(),
        ];
        let cases: Vec<(Vec<f64>, Vec<f64>)> = vec![
            (vec![1.0], vec![1.0]),
            (vec![1.0, 0.5], vec![1.0, 0.5]),
            (vec![1.0, -0.3, 0.2, 0.05], vec![0.5, 0.1, -0.4, 0.2]),
            (
                (0..40).map(|j| 0.7f64.powi(j)).collect(),
                (0..40).map(|j| (-0.5f64).powi(j) * 1.3).collect(),
            ),
        ];
        for innov in laws {
            for (a, b) in &cases {
                let direct = alpha2_by_autocovariance_route(a, b, innov.sigma2, innov.gamma4());
                let cv = pc(a.clone());
                let cw = pc(b.clone());
                let formula = alpha_squared_projected(&cv, &cw, &innov, None)
                    .unwrap()
                    .alpha2;
                assert_relative_eq!(formula, direct, max_relative = 1e-12, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn alpha2_truncated_l_series_reports_exact_tail() {
        let m = CoefficientModel::geometric(vec![0.7], 80).unwrap();
        let innov = InnovationSpec::standard_gaussian();
        let w = WeightVector::uniform(1).unwrap();
        let full = alpha_squared(&m, &innov, &w, &w, None).unwrap();
        let cut = alpha_squared(&m, &innov, &w, &w, Some(3)).unwrap();
        assert!(cut.tail > 0.0);
        // the dropped l-terms are reported exactly
        assert_relative_eq!(cut.alpha2 + cut.tail, full.alpha2, max_relative = 1e-13);
        assert_eq!(full.tail, 0.0);
    }

    #[test]
    fn beta_diagonal_reduces_to_alpha2() {
        let m = CoefficientModel::geometric(vec![0.5, 0.3], 40).unwrap();
        let innov = InnovationSpec::standard_gaussian();
        let v = WeightVector::new(vec![0.7, 0.2]).unwrap();
        let w = WeightVector::new(vec![-0.1, 0.9]).unwrap();
        let beta = beta_coefficient(&m, &innov, (&v, &w), (&v, &w), None).unwrap();
        let alpha2 = alpha_squared(&m, &innov, &v, &w, None).unwrap().alpha2;
        assert_relative_eq!(beta, alpha2, max_relative = 1e-13);
    }

    #[test]
    fn beta_vanishes_with_zero_pair() {
        let m = CoefficientModel::geometric(vec![0.5, 0.3], 40).unwrap();
        let innov = InnovationSpec::standard_gaussian();
        let v = WeightVector::new(vec![0.7, 0.2]).unwrap();
        let zero = WeightVector::new(vec![0.0, 0.0]).unwrap();
        let beta = beta_coefficient(&m, &innov, (&v, &v), (&zero, &v), None).unwrap();
        assert_eq!(beta, 0.0);
    }

    #[test]
    fn beta_satisfies_cauchy_schwarz() {
        // beta is an inner product across the weighted l-series, so
        // |beta| <= alpha(v,w) alpha(v~,w~).
        let innov = InnovationSpec::standard_gaussian();
        for seed in 0..5u64 {
            let mut rng = crate::rng::stream_rng(100 + seed, 0);
            use rand::Rng;
            let d = 3usize;
            let rhos: Vec<f64> = (0..d).map(|_| rng.random_range(-0.8..0.8)).collect();
            let m = CoefficientModel::geometric(rhos, 60).unwrap();
            let rand_w = |rng: &mut rand_chacha::ChaCha12Rng| {
                WeightVector::new((0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
            };
            let (v, w, vt, wt) = (
                rand_w(&mut rng),
                rand_w(&mut rng),
                rand_w(&mut rng),
                rand_w(&mut rng),
            );
            let beta = beta_coefficient(&m, &innov, (&v, &w), (&vt, &wt), None).unwrap();
            let a1 = alpha_squared(&m, &innov, &v, &w, None).unwrap().alpha2;
            let a2 = alpha_squared(&m, &innov, &vt, &wt, None).unwrap().alpha2;
            assert!(
                beta.abs() <= (a1 * a2).sqrt() + 1e-12,
                "beta {beta} bound {}",
                (a1 * a2).sqrt()
            );
        }
    }

    #[test]
    fn kernel_weights_are_sane() {
        let bartlett = KernelSpec::bartlett(Bandwidth::Fixed(4));
        let mut prev = 1.0;
        for h in 1..=4 {
            let w = bartlett.weight(h, 4);
            assert!((0.0..=1.0).contains(&w) && w <= prev);
            prev = w;
        }
        assert_eq!(bartlett.weight(5, 4), 0.0);
        let trunc = KernelSpec::truncated(Bandwidth::Fixed(3));
        for h in 1..=3 {
            assert_eq!(trunc.weight(h, 3), 1.0);
        }
        assert_eq!(trunc.weight(4, 3), 0.0);
        assert_eq!(KernelSpec::default().bandwidth_for(1000), 10);
    }

    #[test]
    fn lrv_constant_series_is_zero() {
        let products = vec![3.7; 100];
        let est = lrv_estimate_from_products(&products, &KernelSpec::default()).unwrap();
        assert_abs_diff_eq!(est, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn lrv_degenerate_bandwidth_is_plain_variance() {
        let products = vec![1.0, 2.0, 3.0, 4.0];
        let est =
            lrv_estimate_from_products(&products, &KernelSpec::truncated(Bandwidth::Fixed(0)))
                .unwrap();
        // variance of {1,2,3,4} with 1/n normalization
        assert_relative_eq!(est, 1.25);
    }

    #[test]
    fn lrv_rejects_short_series() {
        let products = vec![1.0, 2.0, 3.0];
        assert!(
            lrv_estimate_from_products(&products, &KernelSpec::bartlett(Bandwidth::Fixed(2)))
                .is_err()
        );
    }

    #[test]
    fn lrv_iid_benchmark_near_two() {
        // i.i.d. N(0,1), d = 1, v = w = 1: the estimator targets 2.
        let m = CoefficientModel::explicit(vec![vec![1.0]]).unwrap();
        let innov = InnovationSpec::standard_gaussian();
        let w = WeightVector::uniform(1).unwrap();
        let mut ests = Vec::new();
        for rep in 0..40u64 {
            let panel = crate::model::simulate_panel_stream(&m, &innov, 10_000, 77, rep).unwrap();
            ests.push(lrv_estimate(&panel, &w, &w, &KernelSpec::default()).unwrap());
        }
        let mean = ests.iter().sum::<f64>() / ests.len() as f64;
        let var = ests.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (ests.len() - 1) as f64;
        let se = (var / ests.len() as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn lrv_is_symmetric_in_v_w() {
        let m = CoefficientModel::geometric(vec![0.5, -0.3], 20).unwrap();
        let innov = InnovationSpec::standard_gaussian();
        let panel = simulate_panel(&m, &innov, 500, 21).unwrap();
        let v = WeightVector::new(vec![0.8, 0.1]).unwrap();
        let w = WeightVector::new(vec![-0.4, 0.6]).unwrap();
        let k = KernelSpec::default();
        assert_eq!(
            lrv_estimate(&panel, &v, &w, &k).unwrap(),
            lrv_estimate(&panel, &w, &v, &k).unwrap()
        );
    }

    #[test]
    fn cross_lrv_collapses_to_lrv_on_diagonal() {
        let m = CoefficientModel::geometric(vec![0.5, -0.3], 20).unwrap();
        let innov = InnovationSpec::standard_gaussian();
        let panel = simulate_panel(&m, &innov, 300, 5).unwrap();
        let v = WeightVector::new(vec![0.8, 0.1]).unwrap();
        let w = WeightVector::new(vec![-0.4, 0.6]).unwrap();
        let k = KernelSpec::default();
        let diag = cross_lrv_estimate(&panel, (&v, &w), (&v, &w), &k).unwrap();
        let plain = lrv_estimate(&panel, &v, &w, &k).unwrap();
        assert_eq!(diag, plain);
    }

    #[test]
    fn cross_lrv_zero_coordinate_pair() {
        let m = CoefficientModel::explicit(vec![vec![1.0, 0.3], vec![0.0, 0.0]]).unwrap();
        let innov = InnovationSpec::standard_gaussian();
        let panel = simulate_panel(&m, &innov, 200, 9).unwrap();
        let v = WeightVector::basis(2, 0).unwrap();
        let e2 = WeightVector::basis(2, 1).unwrap();
        let k = KernelSpec::default();
        let est = cross_lrv_estimate(&panel, (&v, &v), (&e2, &e2), &k).unwrap();
        assert_abs_diff_eq!(est, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn cross_lrv_matches_brute_force_double_loop() {
        let m = CoefficientModel::geometric(vec![0.6, 0.1, -0.4], 15).unwrap();
        let innov = InnovationSpec::standard_gaussian();
        let panel = simulate_panel(&m, &innov, 64, 31).unwrap();
        let vr = WeightVector::new(vec![0.5, 0.2, 0.0]).unwrap();
        let wr = WeightVector::new(vec![0.1, -0.6, 0.3]).unwrap();
        let vs = WeightVector::new(vec![-0.2, 0.4, 0.9]).unwrap();
        let ws = WeightVector::new(vec![0.7, 0.0, -0.1]).unwrap();
        let kernel = KernelSpec::bartlett(Bandwidth::Fixed(5));
        let fast = cross_lrv_estimate(&panel, (&vr, &wr), (&vs, &ws), &kernel).unwrap();

        // brute force, straight from the definition
        let pr = product_series(&panel, &vr, &wr).unwrap();
        let ps = product_series(&panel, &vs, &ws).unwrap();
        let n = pr.len();
        let mu_r = pr.iter().sum::<f64>() / n as f64;
        let mu_s = ps.iter().sum::<f64>() / n as f64;
        let m_bw = 5usize;
        let mut expected = 0.0;
        for h in 0..=m_bw {
            let mut g = 0.0;
            for k in 0..n - h {
                g += (pr[k] - mu_r) * (ps[k + h] - mu_s);
            }
            g /= n as f64;
            let w = if h == 0 {
                1.0
            } else {
                2.0 * (1.0 - h as f64 / (m_bw as f64 + 1.0))
            };
            expected += w * g;
        }
        assert_relative_eq!(fast, expected, max_relative = 1e-12);
    }

    #[test]
    fn martingale_zero_innovations() {
        let hist =
            simulate_innovations(&InnovationSpec::standard_gaussian(), -5, 10, 1, 0).unwrap();
        let zeroed = crate::model::InnovationHistory::from_values(
            hist.first_index(),
            vec![0.0; (hist.last_index() - hist.first_index() + 1) as usize],
        );
        let coeffs = MartingaleCoeffs::new(&pc(vec![1.0, 0.5]), &pc(vec![1.0, 0.5]), None);
        let m = martingale_partial_sum(&zeroed, &coeffs, 10, 0.0).unwrap();
        assert_eq!(m, 0.0);
    }

    #[test]
    fn martingale_identity_model_collapses_to_centered_squares() {
        let innov = InnovationSpec::standard_gaussian();
        let hist = simulate_innovations(&innov, -3, 20, 4, 0).unwrap();
        let unit = pc(vec![1.0]);
        let coeffs = MartingaleCoeffs::new(&unit, &unit, None);
        let k = 20usize;
        let m = martingale_partial_sum(&hist, &coeffs, k, 1.0).unwrap();
        let direct: f64 = (0..=k as i64)
            .map(|i| hist.get(i).unwrap().powi(2) - 1.0)
            .sum();
        assert_relative_eq!(m, direct, max_relative = 1e-12);
    }

    #[test]
    fn martingale_needs_history() {
        let innov = InnovationSpec::standard_gaussian();
        let hist = simulate_innovations(&innov, 0, 10, 4, 0).unwrap();
        let coeffs = MartingaleCoeffs::new(&pc(vec![1.0, 0.5]), &pc(vec![1.0, 0.5]), None);
        assert!(martingale_partial_sum(&hist, &coeffs, 5, 1.0).is_err());
    }

    #[test]
    fn martingale_tracks_partial_sum_for_identity_model() {
        // With c = [1] the difference M_n - M_0 equals D_nn exactly.
        let m = CoefficientModel::explicit(vec![vec![1.0]]).unwrap();
        let innov = InnovationSpec::standard_gaussian();
        let hist = simulate_innovations(&innov, 0, 50, 12, 0).unwrap();
        let panel = crate::model::panel_from_history(&m, &hist, 50).unwrap();
        let w = WeightVector::uniform(1).unwrap();
        let products = product_series(&panel, &w, &w).unwrap();
        let d_nn: f64 = products.iter().map(|p| p - 1.0).sum();
        let unit = pc(vec![1.0]);
        let coeffs = MartingaleCoeffs::new(&unit, &unit, None);
        let path = martingale_path(&hist, &coeffs, 50, 1.0).unwrap();
        assert_relative_eq!(path[50] - path[0], d_nn, max_relative = 1e-10);
    }
}
