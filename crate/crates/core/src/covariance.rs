//! Sample covariance matrices, bilinear forms and partial-sum processes.
//!
//! For weighting vectors `v`, `w` the centered partial sums
//!
//! ```text
//! D_k = sum_{i<=k} [ y_i(v) y_i(w) - t_i ],    y_i(w) = sum_nu w_nu Y_i^(nu),
//! ```
//!
//! carry all the statistics of interest: `n^{-1/2} D_k` is the rescaled
//! process whose maximum is the change-point statistic, and
//! `n^{-1/2} D_n = sqrt(n) (v' Sigma_hat w - v' Sigma w)` is the centered
//! bilinear form. Everything here runs through the two projected series in
//! `O(n d)`; building the `d x d` sample covariance is only needed when the
//! matrix itself is the object of interest.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Panel;

/// A projection/weighting vector with cached l1 and l2 norms.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    entries: Array1<f64>,
    l1: f64,
    l2: f64,
}

impl WeightVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid(
                "entries",
                "weight vector needs at least one entry",
            ));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("entries", "non-finite weight"));
        }
        let l1 = entries.iter().map(|x| x.abs()).sum();
        let l2 = entries.iter().map(|x| x * x).sum::<f64>().sqrt();
        Ok(Self {
            entries: Array1::from(entries),
            l1,
            l2,
        })
    }

    /// Equal weights `1/d` on every coordinate.
    pub fn uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("d", "need d >= 1"));
        }
        Self::new(vec![1.0 / d as f64; d])
    }

    /// The `nu`-th (0-based) standard basis vector in dimension `d`.
    pub fn basis(d: usize, nu: usize) -> Result<Self> {
        if nu >= d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: nu,
                context: "basis index",
            });
        }
        let mut e = vec![0.0; d];
        e[nu] = 1.0;
        Self::new(e)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &Array1<f64> {
        &self.entries
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(self.entries.iter().map(|x| s * x).collect())
    }

    /// Parse from JSON: either a bare array `[w_1, ..., w_d]` or a sparse
    /// document `{"d": 5, "sparse": {"0": 0.5, "3": -0.2}}` with 0-based
    /// indices; unlisted coordinates are zero.
    pub fn from_json_str(json: &str) -> Result<Self> {
        let doc: WeightVectorJson = serde_json::from_str(json)?;
        doc.build()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.entries.to_vec())?)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WeightVectorJson {
    Dense(Vec<f64>),
    Sparse {
        d: usize,
        sparse: std::collections::BTreeMap<String, f64>,
    },
}

impl WeightVectorJson {
    fn build(self) -> Result<WeightVector> {
        match self {
            WeightVectorJson::Dense(entries) => WeightVector::new(entries),
            WeightVectorJson::Sparse { d, sparse } => {
                if d == 0 || d > crate::model::MAX_COEFFICIENT_CELLS {
                    return Err(Error::invalid("d", format!("dimension {d} out of range")));
                }
                let mut entries = vec![0.0; d];
                for (key, value) in sparse {
                    let idx: usize = key.parse().map_err(|_| {
                        Error::InvalidInput(format!("sparse index {key:?} is not an integer"))
                    })?;
                    if idx >= d {
                        return Err(Error::InvalidInput(format!(
                            "sparse index {idx} >= d = {d}"
                        )));
                    }
                    entries[idx] = value;
                }
                WeightVector::new(entries)
            }
        }
    }
}

fn check_dim(panel: &Panel, w: &WeightVector, context: &'static str) -> Result<()> {
    if panel.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: panel.dim(),
            got: w.dim(),
            context,
        });
    }
    Ok(())
}

/// Sample covariance `(1/n) sum_i Y_i Y_i'` without mean centering (the
/// model is mean zero; see [`Panel::demeaned`] for real data).
pub fn sample_cov(panel: &Panel) -> Array2<f64> {
    let n = panel.len();
    let d = panel.dim();
    let mut out = Array2::zeros((d, d));
    for row in panel.data().rows() {
        for nu in 0..d {
            let y = row[nu];
            for mu in nu..d {
                out[[nu, mu]] += y * row[mu];
            }
        }
    }
    let scale = 1.0 / n as f64;
    for nu in 0..d {
        for mu in nu..d {
            let v = out[[nu, mu]] * scale;
            out[[nu, mu]] = v;
            out[[mu, nu]] = v;
        }
    }
    out
}

/// Projected series `y_i(w) = sum_nu w_nu Y_i^(nu)`, `i = 1..=n`.
pub fn project_series(panel: &Panel, w: &WeightVector) -> Result<Array1<f64>> {
    check_dim(panel, w, "project_series weights")?;
    Ok(panel.data().dot(w.entries()))
}

/// Pointwise products `y_i(v) y_i(w)` of the two projected series.
pub fn product_series(panel: &Panel, v: &WeightVector, w: &WeightVector) -> Result<Vec<f64>> {
    let yv = project_series(panel, v)?;
    let yw = project_series(panel, w)?;
    Ok(yv.iter().zip(yw.iter()).map(|(a, b)| a * b).collect())
}

/// Bilinear form `Q_n(v, w) = v' Sigma_hat w`, computed through the
/// projected series as `(1/n) sum_i y_i(v) y_i(w)`.
pub fn bilinear_form(panel: &Panel, v: &WeightVector, w: &WeightVector) -> Result<f64> {
    let products = product_series(panel, v, w)?;
    Ok(products.iter().sum::<f64>() / products.len() as f64)
}

/// Centering target for the partial-sum process: the per-step expectation
/// `t_i = v' Sigma[i] w` subtracted from each product.
#[derive(Debug, Clone)]
pub enum PathTarget<'a> {
    /// A stationary covariance matrix `Sigma_0`; `t_i = v' Sigma_0 w`.
    StationaryMatrix(&'a Array2<f64>),
    /// The projected value `v' Sigma_0 w` directly.
    StationaryProjected(f64),
    /// Per-observation projected values `t_i`, one per time point.
    PerObservationProjected(&'a [f64]),
}

/// Which normalization a [`PartialSumPath`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    /// `D_k = sum_{i<=k} (p_i - t_i)`.
    Raw,
    /// `n^{-1/2} D_k`, the rescaled process evaluated at `k/n`.
    Scaled,
    /// `n^{-1/2} (S_k - (k/n) S_n)`: the self-centered process, free of any
    /// centering target.
    Bridge,
}

/// A partial-sum path, indexed `k = 1..=n` (use [`PartialSumPath::value_at`]).
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSumPath {
    values: Vec<f64>,
    kind: PathKind,
}

impl PartialSumPath {
    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Path value at time `k` (1-based, `k <= n`).
    pub fn value_at(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Maximum of `|path|` over `k = 1..=n`.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Rescale a raw path by `n^{-1/2}`.
    pub fn scaled(&self) -> PartialSumPath {
        assert_eq!(self.kind, PathKind::Raw, "only raw paths are rescaled");
        let root_n = (self.values.len() as f64).sqrt();
        PartialSumPath {
            values: self.values.iter().map(|v| v / root_n).collect(),
            kind: PathKind::Scaled,
        }
    }
}

fn projected_target(v: &WeightVector, w: &WeightVector, sigma: &Array2<f64>) -> Result<f64> {
    if sigma.nrows() != v.dim() || sigma.ncols() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            got: sigma.nrows(),
            context: "target covariance matrix",
        });
    }
    Ok(v.entries().dot(&sigma.dot(w.entries())))
}

/// Centered partial sums of projected products from a precomputed product
/// series (`products[i-1] = y_i(v) y_i(w)`): the raw path
/// `D_k = sum_{i<=k} (p_i - t_i)`.
pub fn partial_sum_from_products(products: &[f64], targets: &[f64]) -> Result<PartialSumPath> {
    if products.is_empty() {
        return Err(Error::EmptyPanel("partial-sum path needs n >= 1"));
    }
    if targets.len() != products.len() {
        return Err(Error::DimensionMismatch {
            expected: products.len(),
            got: targets.len(),
            context: "per-observation targets",
        });
    }
    let mut acc = 0.0;
    let values = products
        .iter()
        .zip(targets)
        .map(|(p, t)| {
            acc += p - t;
            acc
        })
        .collect();
    Ok(PartialSumPath {
        values,
        kind: PathKind::Raw,
    })
}

/// The raw partial-sum path `D_k = v'(Sigma_hat_k - Sigma_k) w` where
/// `Sigma_hat_k` is the unnormalized running sum of outer products and
/// `Sigma_k` the accumulated target. Rescale with [`PartialSumPath::scaled`]
/// to evaluate the process at `k/n`.
pub fn partial_sum_path(
    panel: &Panel,
    v: &WeightVector,
    w: &WeightVector,
    target: &PathTarget<'_>,
) -> Result<PartialSumPath> {
    let products = product_series(panel, v, w)?;
    let n = products.len();
    let targets: Vec<f64> = match target {
        PathTarget::StationaryMatrix(sigma) => vec![projected_target(v, w, sigma)?; n],
        PathTarget::StationaryProjected(t) => vec![*t; n],
        PathTarget::PerObservationProjected(ts) => {
            if ts.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: ts.len(),
                    context: "per-observation targets",
                });
            }
            ts.to_vec()
        }
    };
    partial_sum_from_products(&products, &targets)
}

/// Self-centered (bridge) path from a product series:
/// `n^{-1/2} (S_k - (k/n) S_n)`. Any centering target cancels, so none is
/// taken.
pub fn bridge_from_products(products: &[f64]) -> Result<PartialSumPath> {
    let n = products.len();
    if n < 2 {
        return Err(Error::InsufficientData("bridge path needs n >= 2".into()));
    }
    let mut prefix = Vec::with_capacity(n);
    let mut acc = 0.0;
    for p in products {
        acc += p;
        prefix.push(acc);
    }
    let total = acc;
    let root_n = (n as f64).sqrt();
    let values = prefix
        .iter()
        .enumerate()
        .map(|(idx, s)| {
            let k = (idx + 1) as f64;
            if idx + 1 == n {
                0.0 // exact by construction
            } else {
                (s - k / n as f64 * total) / root_n
            }
        })
        .collect();
    Ok(PartialSumPath {
        values,
        kind: PathKind::Bridge,
    })
}

/// Bridge path of the projected products of a panel.
pub fn bridge_path(panel: &Panel, v: &WeightVector, w: &WeightVector) -> Result<PartialSumPath> {
    let products = product_series(panel, v, w)?;
    bridge_from_products(&products)
}

/// Autocovariance estimates of a univariate series at lag `h`:
/// `gamma_hat = T^{-1} sum_{i=1}^{T-h} z_i z_{i+h}` and the
/// window-corrected `gamma_tilde = T/(T-h) gamma_hat`, which is what the
/// first row of the sample covariance of the embedded panel reports.
pub fn autocov_estimates(z: &[f64], h: usize) -> Result<(f64, f64)> {
    let t = z.len();
    if h >= t {
        return Err(Error::invalid(
            "h",
            format!("need h < series length {t}, got {h}"),
        ));
    }
    let sum: f64 = (0..t - h).map(|i| z[i] * z[i + h]).sum();
    let gamma_hat = sum / t as f64;
    let gamma_tilde = gamma_hat * t as f64 / (t - h) as f64;
    Ok((gamma_hat, gamma_tilde))
}
