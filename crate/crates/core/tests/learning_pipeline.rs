//! Statistical behavior of the learning-sample pipeline: size with an
//! estimated normalizer, and plug-in consistency against the formula value.

use hdcov::changepoint::{cusum_test_bridge, learning_sample_pipeline};
use hdcov::covariance::WeightVector;
use hdcov::lrv::{alpha_squared, KernelSpec};
use hdcov::model::{simulate_panel_stream, CoefficientModel, InnovationSpec};
use rayon::prelude::*;

#[test]
fn estimated_alpha_size_and_plugin_consistency() {
    let d = 10usize;
    let model = CoefficientModel::geometric(vec![0.5; d], 64).unwrap();
    let innov = InnovationSpec::standard_gaussian();
    let v = WeightVector::uniform(d).unwrap();
    let alpha_true = alpha_squared(&model, &innov, &v, &v, None)
        .unwrap()
        .alpha2
        .sqrt();
    let kernel = KernelSpec::default();
    let n = 2000usize;
    let reps = 500usize;

    let outcomes: Vec<(f64, f64, bool)> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let learning = simulate_panel_stream(&model, &innov, n, 4242, 2 * r).unwrap();
            let test = simulate_panel_stream(&model, &innov, n, 4242, 2 * r + 1).unwrap();
            let est = learning_sample_pipeline(&learning, &test, &v, &v, &kernel, 0.05).unwrap();
            let truth = cusum_test_bridge(&test, &v, &v, alpha_true, 0.05).unwrap();
            (est.p_value, truth.p_value, est.reject)
        })
        .collect();

    // null size with the estimated normalizer stays near nominal
    let size = outcomes.iter().filter(|o| o.2).count() as f64 / reps as f64;
    assert!(
        (0.02..=0.09).contains(&size),
        "size with estimated alpha = {size}"
    );

    // plug-in consistency: p-values computed with alpha_hat agree with the
    // formula-alpha p-values within Monte Carlo error
    let diffs: Vec<f64> = outcomes.iter().map(|o| o.0 - o.1).collect();
    let mean_diff = diffs.iter().sum::<f64>() / reps as f64;
    let sd = (diffs
        .iter()
        .map(|x| (x - mean_diff) * (x - mean_diff))
        .sum::<f64>()
        / (reps - 1) as f64)
        .sqrt();
    let se = sd / (reps as f64).sqrt();
    assert!(
        mean_diff.abs() <= 3.0 * se.max(0.01),
        "mean p-value gap {mean_diff} (se {se})"
    );
}
