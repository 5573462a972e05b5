//! Off-line CUSUM tests for a change in the variance of a projection.
//!
//! Under the no-change null the maximally selected statistics converge to
//! the suprema of `|B|` (known-target variant) and `|B0|` (self-centered
//! variant); see [`crate::limits`]. The change location is estimated by the
//! first time the path attains its maximum absolute value.

use serde::{Deserialize, Serialize};

use crate::covariance::{
    bridge_from_products, bridge_path, partial_sum_path, PartialSumPath, PathTarget, WeightVector,
};
use crate::error::{Error, Result};
use crate::limits::{LimitLaw, LimitLawKind};
use crate::lrv::{lrv_estimate, KernelSpec};
use crate::model::Panel;

/// Which CUSUM variant a report came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CusumMode {
    /// `V_n = max_k |D_n(k/n)| / alpha`, centered at a known target.
    Known,
    /// `V_n0 = max_k |D_n0(k/n)| / alpha`, self-centered.
    Bridge,
}

/// Result of a change-point test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CpReport {
    pub mode: CusumMode,
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    /// First (1-based) time index attaining the maximum absolute path value;
    /// reported only when the test rejects.
    pub k_hat: Option<usize>,
    /// Which path `k_hat` came from. The location estimator is defined on
    /// the known-target path; reading it off the self-centered path is an
    /// extension, flagged here.
    pub k_hat_path: &'static str,
    /// The normalizer actually used.
    pub alpha_hat: f64,
    pub law: LimitLawKind,
    pub level: f64,
    pub n: usize,
}

fn build_report(
    mode: CusumMode,
    path: &PartialSumPath,
    alpha_hat: f64,
    level: f64,
) -> Result<CpReport> {
    if !alpha_hat.is_finite() || alpha_hat <= 0.0 {
        return Err(Error::invalid(
            "alpha_hat",
            format!("need alpha_hat > 0, got {alpha_hat}"),
        ));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(
            "level",
            format!("need level in (0,1), got {level}"),
        ));
    }
    let (law_kind, k_hat_path) = match mode {
        CusumMode::Known => (LimitLawKind::SupAbsBm, "raw"),
        CusumMode::Bridge => (LimitLawKind::SupAbsBridge, "bridge"),
    };
    let law = LimitLaw::new(law_kind);
    let statistic = path.max_abs() / alpha_hat;
    let critical_value = law.quantile(1.0 - level)?;
    let p_value = 1.0 - law.cdf(statistic);
    let reject = statistic > critical_value;
    let k_hat = if reject {
        Some(estimate_changepoint(path))
    } else {
        None
    };
    Ok(CpReport {
        mode,
        statistic,
        critical_value,
        p_value,
        reject,
        k_hat,
        k_hat_path,
        alpha_hat,
        law: law_kind,
        level,
        n: path.len(),
    })
}

/// CUSUM test against a known stationary target `sigma0_proj = v' Sigma0 w`,
/// normalized by a given `alpha_hat`. The maximum runs over `k = 1..=n`.
pub fn cusum_test_known(
    panel: &Panel,
    v: &WeightVector,
    w: &WeightVector,
    sigma0_proj: f64,
    alpha_hat: f64,
    level: f64,
) -> Result<CpReport> {
    let path =
        partial_sum_path(panel, v, w, &PathTarget::StationaryProjected(sigma0_proj))?.scaled();
    build_report(CusumMode::Known, &path, alpha_hat, level)
}

/// Self-centered CUSUM test; needs no covariance target.
pub fn cusum_test_bridge(
    panel: &Panel,
    v: &WeightVector,
    w: &WeightVector,
    alpha_hat: f64,
    level: f64,
) -> Result<CpReport> {
    let path = bridge_path(panel, v, w)?;
    build_report(CusumMode::Bridge, &path, alpha_hat, level)
}

/// Self-centered test from a precomputed product series (the Monte Carlo
/// fast path).
pub fn cusum_test_bridge_from_products(
    products: &[f64],
    alpha_hat: f64,
    level: f64,
) -> Result<CpReport> {
    let path = bridge_from_products(products)?;
    build_report(CusumMode::Bridge, &path, alpha_hat, level)
}

/// First index attaining the maximum absolute path value,
/// `min { k : |path_k| >= |path_l| for all l }`, 1-based.
pub fn estimate_changepoint(path: &PartialSumPath) -> usize {
    let mut best = 1usize;
    let mut best_abs = path.value_at(1).abs();
    for k in 2..=path.len() {
        let a = path.value_at(k).abs();
        if a > best_abs {
            best_abs = a;
            best = k;
        }
    }
    best
}

/// Estimate the normalizer from a stationary learning sample (the
/// non-contamination assumption is the caller's responsibility), then run
/// the self-centered test on the test panel.
pub fn learning_sample_pipeline(
    learning: &Panel,
    test: &Panel,
    v: &WeightVector,
    w: &WeightVector,
    kernel: &KernelSpec,
    level: f64,
) -> Result<CpReport> {
    let alpha2 = lrv_estimate(learning, v, w, kernel)?;
    if alpha2.is_nan() || alpha2 <= 0.0 {
        return Err(Error::NonPositiveVariance { value: alpha2 });
    }
    cusum_test_bridge(test, v, w, alpha2.sqrt(), level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::partial_sum_from_products;
    use crate::model::{simulate_panel, CoefficientModel, InnovationSpec, Panel};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use ndarray::Array2;

    fn zero_panel(n: usize, d: usize) -> Panel {
        Panel::new(Array2::zeros((n, d))).unwrap()
    }

    #[test]
    fn zero_panel_does_not_reject() {
        let p = zero_panel(10, 2);
        let v = WeightVector::uniform(2).unwrap();
        let r = cusum_test_known(&p, &v, &v, 0.0, 1.0, 0.05).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(!r.reject);
        assert!(r.k_hat.is_none());
        assert!(r.p_value > 0.999);
    }

    #[test]
    fn constant_products_give_zero_bridge_statistic() {
        // constant product series: the bridge of a linear path vanishes
        let p = Panel::new(Array2::from_elem((20, 1), 1.0)).unwrap();
        let v = WeightVector::uniform(1).unwrap();
        let r = cusum_test_bridge(&p, &v, &v, 1.0, 0.05).unwrap();
        assert_abs_diff_eq!(r.statistic, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_alpha_and_level() {
        let p = zero_panel(10, 1);
        let v = WeightVector::uniform(1).unwrap();
        assert!(cusum_test_known(&p, &v, &v, 0.0, 0.0, 0.05).is_err());
        assert!(cusum_test_known(&p, &v, &v, 0.0, -1.0, 0.05).is_err());
        assert!(cusum_test_bridge(&p, &v, &v, 1.0, 1.5).is_err());
    }

    #[test]
    fn estimate_changepoint_breaks_ties_to_first() {
        let path = partial_sum_from_products(&[1.0, 2.0, 0.0, -1.0], &[0.0; 4]).unwrap();
        // raw path: 1, 3, 3, 2 -> first argmax at k = 2
        assert_eq!(path.values(), &[1.0, 3.0, 3.0, 2.0]);
        assert_eq!(estimate_changepoint(&path), 2);

        let flat = partial_sum_from_products(&[0.0, 0.0, 0.0], &[0.0; 3]).unwrap();
        assert_eq!(estimate_changepoint(&flat), 1);
    }

    #[test]
    fn scale_invariance_of_bridge_statistic() {
        let model = CoefficientModel::geometric(vec![0.5, 0.2], 20).unwrap();
        let panel = simulate_panel(&model, &InnovationSpec::standard_gaussian(), 100, 8).unwrap();
        let v = WeightVector::uniform(2).unwrap();
        let r1 = cusum_test_bridge(&panel, &v, &v, 2.0, 0.05).unwrap();
        // multiply the panel by s: products scale by s^2, so alpha by s^2
        let s = 3.0f64;
        let scaled_panel = Panel::new(panel.data() * s).unwrap();
        let r2 = cusum_test_bridge(&scaled_panel, &v, &v, 2.0 * s * s, 0.05).unwrap();
        assert_relative_eq!(r1.statistic, r2.statistic, max_relative = 1e-12);
    }

    #[test]
    fn bridge_statistic_matches_explicit_formula() {
        let model = CoefficientModel::geometric(vec![0.4], 15).unwrap();
        let panel = simulate_panel(&model, &InnovationSpec::standard_gaussian(), 60, 10).unwrap();
        let v = WeightVector::uniform(1).unwrap();
        let r = cusum_test_bridge(&panel, &v, &v, 1.0, 0.05).unwrap();
        // explicit: D_n(k/n) - (k/n) D_n(1) with an arbitrary target
        let raw = partial_sum_path(&panel, &v, &v, &PathTarget::StationaryProjected(0.77))
            .unwrap()
            .scaled();
        let n = raw.len();
        let explicit = (1..=n)
            .map(|k| (raw.value_at(k) - (k as f64 / n as f64) * raw.value_at(n)).abs())
            .fold(0.0_f64, f64::max);
        assert_abs_diff_eq!(r.statistic, explicit, epsilon = 1e-12);
    }

    #[test]
    fn p_value_decreases_in_statistic() {
        let law = LimitLaw::sup_abs_bridge();
        let mut prev = 1.0;
        for s in [0.2, 0.6, 1.0, 1.4, 2.0, 3.0] {
            let p = 1.0 - law.cdf(s);
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn learning_pipeline_rejects_degenerate_sample() {
        let p = zero_panel(50, 1);
        let v = WeightVector::uniform(1).unwrap();
        let err =
            learning_sample_pipeline(&p, &p, &v, &v, &KernelSpec::default(), 0.05).unwrap_err();
        assert!(matches!(err, Error::NonPositiveVariance { .. }));
    }

    #[test]
    fn learning_pipeline_runs_end_to_end() {
        let model = CoefficientModel::geometric(vec![0.5, -0.2], 30).unwrap();
        let innov = InnovationSpec::standard_gaussian();
        let learning = simulate_panel(&model, &innov, 400, 1).unwrap();
        let test = crate::model::simulate_panel_stream(&model, &innov, 400, 1, 1).unwrap();
        let v = WeightVector::uniform(2).unwrap();
        let r = learning_sample_pipeline(&learning, &test, &v, &v, &KernelSpec::default(), 0.05)
            .unwrap();
        assert!(r.p_value > 0.0 && r.p_value < 1.0);
        assert_eq!(r.mode, CusumMode::Bridge);
    }
}
