//! Shrinkage of a sample covariance matrix toward the identity target.
//!
//! `Sigma_s(W) = (1 - W) Sigma_hat + W mu I` with grand mean
//! `mu = trace(Sigma_hat)/d` pulls every eigenvalue toward their average by
//! the factor `1 - W` while preserving the trace exactly. The weight that
//! minimizes the expected squared Frobenius loss has the closed form
//!
//! ```text
//! W* = E ||Sigma_hat - Sigma||_F^2 / E ||mu I - Sigma_hat||_F^2,
//! ```
//!
//! estimated here by replacing the expectations with averages over
//! replicates and clamping to [0, 1]. The d^-1 normalizations of both
//! Frobenius norms cancel in the ratio.

use ndarray::Array2;

use crate::error::{Error, Result};

/// A shrunken covariance matrix along with the weight and grand mean used.
#[derive(Debug, Clone)]
pub struct ShrinkResult {
    pub matrix: Array2<f64>,
    pub weight: f64,
    pub grand_mean: f64,
}

/// Grand mean `trace(sigma)/d` of a square matrix.
pub fn grand_mean(sigma: &Array2<f64>) -> f64 {
    sigma.diag().sum() / sigma.nrows() as f64
}

/// Shrink `sigma_hat` toward `grand_mean * I` with weight `W` in [0, 1].
pub fn shrink_covariance(sigma_hat: &Array2<f64>, weight: f64) -> Result<ShrinkResult> {
    let d = sigma_hat.nrows();
    if d == 0 || sigma_hat.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d.max(1),
            got: sigma_hat.ncols(),
            context: "shrinkage input must be square",
        });
    }
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::invalid(
            "weight",
            format!("need W in [0,1], got {weight}"),
        ));
    }
    let mu = grand_mean(sigma_hat);
    let mut matrix = sigma_hat * (1.0 - weight);
    for i in 0..d {
        matrix[[i, i]] += weight * mu;
    }
    Ok(ShrinkResult {
        matrix,
        weight,
        grand_mean: mu,
    })
}

fn frobenius_sq(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum()
}

fn diff_frobenius_sq(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Estimate the optimal shrinkage weight from replicates of
/// `(sample covariance, reference)`, where the reference is the true
/// covariance or a held-out estimate:
/// `W_hat = mean ||Sigma_hat - ref||_F^2 / mean ||mu I - Sigma_hat||_F^2`,
/// clamped to [0, 1].
pub fn estimate_shrink_weight(replicates: &[(Array2<f64>, Array2<f64>)]) -> Result<f64> {
    if replicates.is_empty() {
        return Err(Error::InsufficientData(
            "need at least one replicate".into(),
        ));
    }
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for (sample, reference) in replicates {
        let d = sample.nrows();
        if d == 0 || sample.ncols() != d || reference.nrows() != d || reference.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d.max(1),
                got: reference.nrows(),
                context: "replicate matrices must be square and matching",
            });
        }
        numerator += diff_frobenius_sq(sample, reference);
        let mu = grand_mean(sample);
        let mut target = sample.clone();
        for i in 0..d {
            target[[i, i]] -= mu;
        }
        denominator += frobenius_sq(&target);
    }
    let r = replicates.len() as f64;
    numerator /= r;
    denominator /= r;
    if denominator <= 0.0 {
        return Err(Error::DegenerateConstraints(
            "every sample covariance is already a multiple of the identity".into(),
        ));
    }
    Ok((numerator / denominator).clamp(0.0, 1.0))
}

/// Weight estimate from independent copies only: each sample covariance is
/// paired with the average of the others as its held-out reference.
/// Needs at least two matrices.
pub fn leave_one_out_weight(covs: &[Array2<f64>]) -> Result<f64> {
    if covs.len() < 2 {
        return Err(Error::InsufficientData(
            "leave-one-out weight estimation needs at least two samples".into(),
        ));
    }
    let mut replicates = Vec::with_capacity(covs.len());
    for (i, cov) in covs.iter().enumerate() {
        let mut held_out = Array2::<f64>::zeros(cov.raw_dim());
        for (j, other) in covs.iter().enumerate() {
            if i != j {
                if other.raw_dim() != cov.raw_dim() {
                    return Err(Error::DimensionMismatch {
                        expected: cov.nrows(),
                        got: other.nrows(),
                        context: "leave-one-out covariance sizes",
                    });
                }
                held_out += other;
            }
        }
        held_out /= (covs.len() - 1) as f64;
        replicates.push((cov.clone(), held_out));
    }
    estimate_shrink_weight(&replicates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::sample_cov;
    use crate::model::{simulate_panel_stream, CoefficientModel, InnovationSpec};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use ndarray::array;

    #[test]
    fn identity_is_a_fixed_point() {
        let eye = Array2::eye(3);
        for w in [0.0, 0.4, 1.0] {
            let r = shrink_covariance(&eye, w).unwrap();
            assert_eq!(r.matrix, eye);
            assert_eq!(r.grand_mean, 1.0);
        }
    }

    #[test]
    fn full_weight_gives_grand_mean_identity() {
        let sigma = array![[1.0, 0.7], [0.7, 3.0]];
        let r = shrink_covariance(&sigma, 1.0).unwrap();
        assert_eq!(r.matrix, array![[2.0, 0.0], [0.0, 2.0]]);
    }

    #[test]
    fn half_weight_entrywise() {
        let sigma = array![[1.0, 0.0], [0.0, 3.0]];
        let r = shrink_covariance(&sigma, 0.5).unwrap();
        assert_eq!(r.matrix, array![[1.5, 0.0], [0.0, 2.5]]);
    }

    #[test]
    fn trace_is_preserved_exactly() {
        let sigma = array![[2.0, 0.4, 0.1], [0.4, 0.9, -0.3], [0.1, -0.3, 1.6]];
        for w in [0.0, 0.25, 0.8, 1.0] {
            let r = shrink_covariance(&sigma, w).unwrap();
            assert_abs_diff_eq!(r.matrix.diag().sum(), sigma.diag().sum(), epsilon = 1e-10);
        }
        assert!(shrink_covariance(&sigma, 1.5).is_err());
        assert!(shrink_covariance(&sigma, -0.1).is_err());
    }

    #[test]
    fn eigenvalues_contract_affinely() {
        // eig(Sigma_s) = (1-W) eig(Sigma_hat) + W mu, so the dispersion
        // max - min contracts exactly by 1 - W
        use nalgebra::{DMatrix, SymmetricEigen};
        let sigma = array![[3.0, 0.8, 0.2], [0.8, 1.0, -0.4], [0.2, -0.4, 0.5]];
        let eig = |m: &Array2<f64>| -> (f64, f64, Vec<f64>) {
            let dm = DMatrix::from_row_iterator(3, 3, m.iter().copied());
            let mut vals: Vec<f64> = SymmetricEigen::new(dm)
                .eigenvalues
                .iter()
                .copied()
                .collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            (vals[0], vals[2], vals)
        };
        let (lo0, hi0, vals0) = eig(&sigma);
        for w in [0.3, 0.6] {
            let r = shrink_covariance(&sigma, w).unwrap();
            let (lo, hi, vals) = eig(&r.matrix);
            assert_relative_eq!(hi - lo, (1.0 - w) * (hi0 - lo0), max_relative = 1e-9);
            for (a, b) in vals.iter().zip(vals0.iter()) {
                assert_relative_eq!(*a, (1.0 - w) * b + w * r.grand_mean, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn condition_number_is_nonincreasing_in_weight() {
        let sigma = array![[4.0, 0.5], [0.5, 0.25]];
        let cond = |m: &Array2<f64>| {
            use nalgebra::{DMatrix, SymmetricEigen};
            let dm = DMatrix::from_row_iterator(2, 2, m.iter().copied());
            let vals = SymmetricEigen::new(dm).eigenvalues;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for v in vals.iter() {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
            hi / lo
        };
        let mut prev = f64::INFINITY;
        for w in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
            let c = cond(&shrink_covariance(&sigma, w).unwrap().matrix);
            assert!(c <= prev + 1e-12, "condition number rose at W = {w}");
            prev = c;
        }
    }

    #[test]
    fn perfect_estimates_need_no_shrinkage() {
        let sigma = array![[1.0, 0.2], [0.2, 0.8]];
        let reps = vec![(sigma.clone(), sigma.clone()); 3];
        assert_eq!(estimate_shrink_weight(&reps).unwrap(), 0.0);
    }

    #[test]
    fn spherical_truth_saturates_the_weight() {
        // With Sigma = mu I, ||Sigma_hat - mu I||^2 >= ||Sigma_hat - mu_n I||^2
        // for the sample grand mean mu_n, so the ratio clamps to 1.
        let innov = InnovationSpec::standard_gaussian();
        let id = CoefficientModel::explicit(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let truth = crate::model::theoretical_covariance(&id, &innov, 0);
        let mut reps = Vec::new();
        for r in 0..20 {
            let p = simulate_panel_stream(&id, &innov, 15, 99, r).unwrap();
            reps.push((sample_cov(&p), truth.clone()));
        }
        assert_eq!(estimate_shrink_weight(&reps).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_denominator_is_an_error() {
        let eye: Array2<f64> = Array2::eye(2);
        let reps = vec![(eye.clone(), Array2::eye(2) * 2.0)];
        assert!(matches!(
            estimate_shrink_weight(&reps),
            Err(Error::DegenerateConstraints(_))
        ));
    }
}
