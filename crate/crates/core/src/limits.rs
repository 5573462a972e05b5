//! Limit laws of the maximally selected statistics: the distribution
//! functions of `sup_{[0,1]} |B(t)|` for a standard Brownian motion `B` and
//! of `sup_{[0,1]} |B0(t)|` for a Brownian bridge `B0` (the Kolmogorov
//! distribution), with quantiles by bisection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which supremum law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitLawKind {
    /// `sup |B(t)|` over `[0,1]`, standard Brownian motion.
    SupAbsBm,
    /// `sup |B0(t)|` over `[0,1]`, Brownian bridge.
    SupAbsBridge,
}

/// A supremum limit law with its series truncation tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLaw {
    pub kind: LimitLawKind,
    /// Both series alternate, so truncating when a term drops below this
    /// bounds the error by the first omitted term.
    pub series_tol: f64,
}

impl LimitLaw {
    pub fn new(kind: LimitLawKind) -> Self {
        Self {
            kind,
            series_tol: 1e-12,
        }
    }

    pub fn sup_abs_bm() -> Self {
        Self::new(LimitLawKind::SupAbsBm)
    }

    pub fn sup_abs_bridge() -> Self {
        Self::new(LimitLawKind::SupAbsBridge)
    }

    /// Distribution function at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() || x <= 0.0 {
            return 0.0;
        }
        match self.kind {
            LimitLawKind::SupAbsBm => cdf_sup_abs_bm(x, self.series_tol),
            LimitLawKind::SupAbsBridge => cdf_sup_abs_bridge(x, self.series_tol),
        }
    }

    /// Quantile at level `p` by bisection on the bracket [1e-6, 10].
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid("p", format!("need p in (0,1), got {p}")));
        }
        let mut lo = 1e-6_f64;
        let mut hi = 10.0_f64;
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let c = self.cdf(mid);
            if (c - p).abs() < 1e-10 {
                return Ok(mid);
            }
            if c < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(mid)
    }
}

/// `P(sup |B| <= x) = (4/pi) sum_{k>=0} (-1)^k/(2k+1) exp(-(2k+1)^2 pi^2 / (8 x^2))`.
///
/// Below `x = 0.05` the value is far under any representable probability, so
/// 0 is returned outright to dodge underflow; above `x = 8` the complement is
/// below 1e-14 and 1 is returned (the series itself converges too slowly to
/// truncate by term size out there).
fn cdf_sup_abs_bm(x: f64, tol: f64) -> f64 {
    if x < 0.05 {
        return 0.0;
    }
    if x >= 8.0 {
        return 1.0;
    }
    let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
    let mut sum = 0.0;
    for k in 0..10_000u32 {
        let odd = (2 * k + 1) as f64;
        let term = (if k % 2 == 0 { 1.0 } else { -1.0 }) / odd * (-c * odd * odd).exp();
        sum += term;
        if term.abs() < tol {
            break;
        }
    }
    (4.0 / std::f64::consts::PI * sum).clamp(0.0, 1.0)
}

/// Kolmogorov distribution `P(sup |B0| <= x)`.
///
/// For `x >= 1` the alternating series
/// `1 - 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2)` is used; below that it
/// suffers catastrophic cancellation, so the theta-transformed series
/// `(sqrt(2 pi)/x) sum_{k>=1} exp(-(2k-1)^2 pi^2/(8 x^2))` takes over.
fn cdf_sup_abs_bridge(x: f64, tol: f64) -> f64 {
    if x < 0.04 {
        return 0.0;
    }
    if x >= 1.0 {
        let mut sum = 0.0;
        let x2 = x * x;
        for k in 1..10_000u32 {
            let kf = k as f64;
            let term = (if k % 2 == 1 { 1.0 } else { -1.0 }) * (-2.0 * kf * kf * x2).exp();
            sum += term;
            if term.abs() < tol {
                break;
            }
        }
        (1.0 - 2.0 * sum).clamp(0.0, 1.0)
    } else {
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
        let mut sum = 0.0;
        for k in 1..10_000u32 {
            let odd = (2 * k - 1) as f64;
            let term = (-c * odd * odd).exp();
            sum += term;
            if term < tol {
                break;
            }
        }
        ((2.0 * std::f64::consts::PI).sqrt() / x * sum).clamp(0.0, 1.0)
    }
}
