//! Scenario-driven Monte Carlo harness.
//!
//! Each experiment simulates the panel model through projected series (the
//! partial sums only ever see `y_i(v)`, `y_i(w)`, so filtering the shared
//! innovation stream with the projected coefficients reproduces the panel
//! statistics exactly at `O(n J)` per replication) and compares empirical
//! laws, moments or error curves against the closed-form limits.
//!
//! Replication `r` of grid point `g` draws from stream `g * R + r` of the
//! scenario seed (alternatives and learning samples use disjoint stream
//! blocks), so reports are deterministic functions of the scenario,
//! independent of thread count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;

use crate::changepoint::estimate_changepoint;
use crate::covariance::{partial_sum_from_products, sample_cov, WeightVector};
use crate::error::{Error, Result};
use crate::limits::LimitLaw;
use crate::lrv::{
    alpha_squared_projected, beta_coefficient_projected, f_tilde, lrv_estimate_from_products,
    martingale_path, KernelSpec, MartingaleCoeffs, ProjectedCoefficients,
};
use crate::model::{
    simulate_innovations, simulate_panel_stream, theoretical_covariance, CoefficientModel,
    InnovationSpec, ModelSpec,
};
use crate::shrinkage::{estimate_shrink_weight, shrink_covariance};

/// Which verification an [`Scenario`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Law of the standardized centered bilinear form vs the standard normal.
    Clt,
    /// Laws of the maximally selected statistics vs `sup|B|` and `sup|B0|`.
    FcltMax,
    /// Mean absolute error of the long-run variance estimator across `n`.
    LrvConsistency,
    /// Decay of the normalized gap between partial sum and martingale.
    MartingaleGap,
    /// Empirical covariance of several bilinear forms vs the beta matrix.
    MultivariateCov,
    /// Frobenius risk of the shrunken vs the raw covariance estimate.
    ShrinkageMse,
    /// Null rejection rate, power and change-point localization.
    CpSizePower,
}

impl Experiment {
    fn is_distributional(self) -> bool {
        matches!(
            self,
            Experiment::Clt
                | Experiment::FcltMax
                | Experiment::MultivariateCov
                | Experiment::CpSizePower
        )
    }
}

/// A `(v, w)` weighting pair, as plain entry vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightPairSpec {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

/// Change-point alternative: at time `floor(at_frac * n)` the coefficients
/// of the selected coordinates (all, when absent) are multiplied by `scale`,
/// so the projected variance changes by `scale^2` on the affected block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeSpec {
    pub at_frac: f64,
    pub scale: f64,
    #[serde(default)]
    pub coordinates: Option<Vec<usize>>,
}

/// Pass criteria. Every threshold an experiment consults lives here, in the
/// scenario, not in code.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PassThresholds {
    /// Kolmogorov distance cap for distributional experiments.
    #[serde(default)]
    pub ks_max: Option<f64>,
    /// Multiplier on the Monte Carlo standard error for moment comparisons.
    #[serde(default)]
    pub se_multiplier: Option<f64>,
    /// Admissible null rejection band `[lo, hi]`.
    #[serde(default)]
    pub size_range: Option<[f64; 2]>,
    /// Lower bound on power under the configured alternative.
    #[serde(default)]
    pub power_min: Option<f64>,
    /// Cap on `median |k_hat - q| / n`.
    #[serde(default)]
    pub location_error_frac: Option<f64>,
}

fn default_l1_budget() -> f64 {
    16.0
}

/// A full experiment description; serializable, and the sole input of
/// [`run`], which is deterministic in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub experiment: Experiment,
    pub model: ModelSpec,
    pub innov: InnovationSpec,
    pub n_grid: Vec<usize>,
    pub weight_pairs: Vec<WeightPairSpec>,
    pub replications: usize,
    pub seed: u64,
    /// Test level for change-point experiments (default 0.05).
    #[serde(default)]
    pub level: Option<f64>,
    /// Kernel for estimator-based experiments (default Bartlett, auto m).
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    /// Alternative for `cp_size_power`.
    #[serde(default)]
    pub change: Option<ChangeSpec>,
    /// Normalize max-statistics by the estimated instead of the formula
    /// alpha (`fclt_max`, `cp_size_power`).
    #[serde(default)]
    pub use_estimated_alpha: bool,
    /// Every weight vector's l1 norm must stay below this.
    #[serde(default = "default_l1_budget")]
    pub l1_budget: f64,
    pub thresholds: PassThresholds,
}

impl Scenario {
    pub fn from_json_str(json: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(json)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.innov.validate()?;
        if self.n_grid.is_empty() {
            return Err(Error::invalid("n_grid", "need at least one sample size"));
        }
        if self.n_grid.iter().any(|&n| n < 2) {
            return Err(Error::invalid("n_grid", "sample sizes must be >= 2"));
        }
        if self.n_grid.iter().any(|&n| n > 1_000_000_000) || self.replications > 1_000_000_000 {
            return Err(Error::invalid(
                "n_grid",
                "sample sizes and replication counts are capped at 1e9",
            ));
        }
        if self.weight_pairs.is_empty() && self.experiment != Experiment::ShrinkageMse {
            return Err(Error::invalid("weight_pairs", "need at least one pair"));
        }
        if self.experiment.is_distributional() && self.replications < 100 {
            return Err(Error::invalid(
                "replications",
                "distributional experiments need at least 100 replications",
            ));
        }
        if self.replications == 0 {
            return Err(Error::invalid(
                "replications",
                "need at least one replication",
            ));
        }
        if let Some(level) = self.level {
            if !(level > 0.0 && level < 1.0) {
                return Err(Error::invalid(
                    "level",
                    format!("need level in (0,1), got {level}"),
                ));
            }
        }
        if let Some(change) = &self.change {
            if !(change.at_frac > 0.0 && change.at_frac < 1.0) {
                return Err(Error::invalid("change.at_frac", "need a fraction in (0,1)"));
            }
            if !change.scale.is_finite() {
                return Err(Error::invalid("change.scale", "must be finite"));
            }
        }
        for (idx, pair) in self.weight_pairs.iter().enumerate() {
            for (name, entries) in [("v", &pair.v), ("w", &pair.w)] {
                let l1: f64 = entries.iter().map(|x| x.abs()).sum();
                if !l1.is_finite() || l1 > self.l1_budget {
                    return Err(Error::invalid(
                        "weight_pairs",
                        format!(
                            "pair {idx} {name} violates the l1 budget {}",
                            self.l1_budget
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    fn build_model(&self) -> Result<CoefficientModel> {
        CoefficientModel::new(self.model.clone())
    }

    fn kernel(&self) -> KernelSpec {
        self.kernel.unwrap_or_default()
    }

    fn level_or_default(&self) -> f64 {
        self.level.unwrap_or(0.05)
    }
}

/// Per-sample-size metric block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerNSummary {
    pub n: usize,
    pub metrics: BTreeMap<String, f64>,
}

/// One per-replication record for the optional raw dump.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicationRecord {
    pub n: usize,
    pub replication: usize,
    pub metric: String,
    pub value: f64,
}

/// Machine-readable experiment report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub experiment: Experiment,
    pub seed: u64,
    pub replications: usize,
    pub per_n: Vec<PerNSummary>,
    pub pass: bool,
    pub notes: Vec<String>,
}

/// Cap the global worker pool. Callable once per process; later calls
/// return an error that is safe to ignore.
pub fn configure_threads(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Numeric(format!("thread pool: {e}")))
}

/// Run a scenario and keep the per-replication samples for dumping.
pub fn run_with_samples(scenario: &Scenario) -> Result<(McReport, Vec<ReplicationRecord>)> {
    scenario.validate()?;
    match scenario.experiment {
        Experiment::Clt => run_clt(scenario),
        Experiment::FcltMax => run_fclt_max(scenario),
        Experiment::LrvConsistency => run_lrv_consistency(scenario),
        Experiment::MartingaleGap => run_martingale_gap(scenario),
        Experiment::MultivariateCov => run_multivariate_cov(scenario),
        Experiment::ShrinkageMse => run_shrinkage_mse(scenario),
        Experiment::CpSizePower => run_cp_size_power(scenario),
    }
}

/// Run a scenario.
pub fn run(scenario: &Scenario) -> Result<McReport> {
    run_with_samples(scenario).map(|(report, _)| report)
}

/// Write per-replication records as CSV (`n,replication,metric,value`).
pub fn write_samples_csv<W: std::io::Write>(
    writer: W,
    records: &[ReplicationRecord],
) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(true)
        .from_writer(writer);
    wtr.write_record(["n", "replication", "metric", "value"])?;
    for r in records {
        wtr.write_record([
            r.n.to_string(),
            r.replication.to_string(),
            r.metric.clone(),
            format!("{}", r.value),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Kolmogorov distance between a sample and a reference CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("no NaN statistics"));
    let n = xs.len() as f64;
    let mut d = 0.0_f64;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        d = d
            .max((f - i as f64 / n).abs())
            .max((f - (i + 1) as f64 / n).abs());
    }
    d
}

struct PairContext {
    cv: ProjectedCoefficients,
    cw: ProjectedCoefficients,
    same: bool,
    /// Exact expectation of the product series, `sigma2 * f~_{0,0}`.
    target: f64,
    alpha2: f64,
}

fn prepare_pair(
    model: &CoefficientModel,
    innov: &InnovationSpec,
    pair: &WeightPairSpec,
) -> Result<PairContext> {
    let v = WeightVector::new(pair.v.clone())?;
    let w = WeightVector::new(pair.w.clone())?;
    let cv = crate::lrv::projected_coefficients(model, &v)?;
    let cw = crate::lrv::projected_coefficients(model, &w)?;
    let same = cv == cw;
    let target = innov.sigma2 * f_tilde(&cv, &cw, 0, 0);
    let alpha2 = alpha_squared_projected(&cv, &cw, innov, None)?.alpha2;
    Ok(PairContext {
        cv,
        cw,
        same,
        target,
        alpha2,
    })
}

fn require_positive_alpha(ctx: &PairContext, idx: usize) -> Result<f64> {
    if ctx.alpha2 <= 1e-14 {
        return Err(Error::invalid(
            "weight_pairs",
            format!(
                "pair {idx} has a degenerate limit variance (alpha^2 = {})",
                ctx.alpha2
            ),
        ));
    }
    Ok(ctx.alpha2.sqrt())
}

/// Product series of one replication, by filtering the innovation stream.
fn simulate_products(
    ctx: &PairContext,
    innov: &InnovationSpec,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<f64>> {
    let lag = ctx.cv.truncation_lag().max(ctx.cw.truncation_lag());
    let history = simulate_innovations(innov, 1 - lag as i64, n as i64, seed, stream)?;
    let yv = crate::model::filter_history(ctx.cv.coeffs(), &history, n)?;
    if ctx.same {
        Ok(yv.iter().map(|a| a * a).collect())
    } else {
        let yw = crate::model::filter_history(ctx.cw.coeffs(), &history, n)?;
        Ok(yv.iter().zip(yw.iter()).map(|(a, b)| a * b).collect())
    }
}

fn run_clt(scenario: &Scenario) -> Result<(McReport, Vec<ReplicationRecord>)> {
    let model = scenario.build_model()?;
    let innov = scenario.innov;
    let reps = scenario.replications;
    let ks_max = scenario.thresholds.ks_max.ok_or_else(|| {
        Error::invalid(
            "thresholds.ks_max",
            "the CLT experiment needs a KS threshold",
        )
    })?;
    let contexts: Vec<PairContext> = scenario
        .weight_pairs
        .iter()
        .map(|p| prepare_pair(&model, &innov, p))
        .collect::<Result<_>>()?;
    let normal = statrs::distribution::Normal::standard();

    let mut per_n = Vec::new();
    let mut records = Vec::new();
    let mut pass = true;
    for (g, &n) in scenario.n_grid.iter().enumerate() {
        let mut metrics = BTreeMap::new();
        for (j, ctx) in contexts.iter().enumerate() {
            let alpha = require_positive_alpha(ctx, j)?;
            let stats: Vec<f64> = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let stream = (g * reps + r) as u64;
                    let products = simulate_products(ctx, &innov, n, scenario.seed, stream)
                        .expect("validated scenario");
                    let sum: f64 = products.iter().sum();
                    (sum - n as f64 * ctx.target) / (n as f64).sqrt() / alpha
                })
                .collect();
            let ks = ks_distance(&stats, |x| normal.cdf(x));
            let mean = stats.iter().sum::<f64>() / reps as f64;
            let var =
                stats.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (reps - 1) as f64;
            let suffix = if contexts.len() == 1 {
                String::new()
            } else {
                format!("_pair{j}")
            };
            metrics.insert(format!("ks{suffix}"), ks);
            metrics.insert(format!("mean{suffix}"), mean);
            metrics.insert(format!("var{suffix}"), var);
            pass &= ks <= ks_max;
            for (r, s) in stats.iter().enumerate() {
                records.push(ReplicationRecord {
                    n,
                    replication: r,
                    metric: "clt_stat".into(),
                    value: *s,
                });
            }
        }
        per_n.push(PerNSummary { n, metrics });
    }
    Ok((
        McReport {
            experiment: scenario.experiment,
            seed: scenario.seed,
            replications: reps,
            per_n,
            pass,
            notes: vec![format!("KS threshold {ks_max}")],
        },
        records,
    ))
}

fn run_fclt_max(scenario: &Scenario) -> Result<(McReport, Vec<ReplicationRecord>)> {
    let model = scenario.build_model()?;
    let innov = scenario.innov;
    let reps = scenario.replications;
    let ks_max = scenario.thresholds.ks_max.ok_or_else(|| {
        Error::invalid(
            "thresholds.ks_max",
            "the functional-limit experiment needs a KS threshold",
        )
    })?;
    let kernel = scenario.kernel();
    let contexts: Vec<PairContext> = scenario
        .weight_pairs
        .iter()
        .map(|p| prepare_pair(&model, &innov, p))
        .collect::<Result<_>>()?;
    let bm = LimitLaw::sup_abs_bm();
    let bridge = LimitLaw::sup_abs_bridge();

    let mut per_n = Vec::new();
    let mut records = Vec::new();
    let mut pass = true;
    for (g, &n) in scenario.n_grid.iter().enumerate() {
        let mut metrics = BTreeMap::new();
        for (j, ctx) in contexts.iter().enumerate() {
            let alpha = require_positive_alpha(ctx, j)?;
            let pairs: Vec<(f64, f64)> = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let stream = (g * reps + r) as u64;
                    let products = simulate_products(ctx, &innov, n, scenario.seed, stream)
                        .expect("validated scenario");
                    let norm = if scenario.use_estimated_alpha {
                        lrv_estimate_from_products(&products, &kernel)
                            .expect("validated scenario")
                            .max(1e-12)
                            .sqrt()
                    } else {
                        alpha
                    };
                    let root_n = (n as f64).sqrt();
                    let total: f64 = products.iter().sum();
                    let mut acc = 0.0;
                    let mut vmax = 0.0_f64;
                    let mut v0max = 0.0_f64;
                    for (idx, p) in products.iter().enumerate() {
                        acc += p;
                        let k = (idx + 1) as f64;
                        vmax = vmax.max((acc - k * ctx.target).abs());
                        v0max = v0max.max((acc - k / n as f64 * total).abs());
                    }
                    (vmax / root_n / norm, v0max / root_n / norm)
                })
                .collect();
            let vs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let v0s: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let ks_bm = ks_distance(&vs, |x| bm.cdf(x));
            let ks_bridge = ks_distance(&v0s, |x| bridge.cdf(x));
            let suffix = if contexts.len() == 1 {
                String::new()
            } else {
                format!("_pair{j}")
            };
            metrics.insert(format!("ks_sup_bm{suffix}"), ks_bm);
            metrics.insert(format!("ks_sup_bridge{suffix}"), ks_bridge);
            pass &= ks_bm <= ks_max && ks_bridge <= ks_max;
            for (r, (v, v0)) in pairs.iter().enumerate() {
                records.push(ReplicationRecord {
                    n,
                    replication: r,
                    metric: "sup_stat".into(),
                    value: *v,
                });
                records.push(ReplicationRecord {
                    n,
                    replication: r,
                    metric: "sup_bridge_stat".into(),
                    value: *v0,
                });
            }
        }
        per_n.push(PerNSummary { n, metrics });
    }
    Ok((
        McReport {
            experiment: scenario.experiment,
            seed: scenario.seed,
            replications: reps,
            per_n,
            pass,
            notes: vec![format!(
                "KS threshold {ks_max}; normalizer: {}",
                if scenario.use_estimated_alpha {
                    "estimated"
                } else {
                    "formula"
                }
            )],
        },
        records,
    ))
}

fn run_lrv_consistency(scenario: &Scenario) -> Result<(McReport, Vec<ReplicationRecord>)> {
    let model = scenario.build_model()?;
    let innov = scenario.innov;
    let reps = scenario.replications;
    let kernel = scenario.kernel();
    let ctx = prepare_pair(&model, &innov, &scenario.weight_pairs[0])?;

    let mut per_n = Vec::new();
    let mut records = Vec::new();
    let mut maes = Vec::new();
    for (g, &n) in scenario.n_grid.iter().enumerate() {
        let errors: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let stream = (g * reps + r) as u64;
                let products = simulate_products(&ctx, &innov, n, scenario.seed, stream)
                    .expect("validated scenario");
                let est =
                    lrv_estimate_from_products(&products, &kernel).expect("validated scenario");
                (est - ctx.alpha2).abs()
            })
            .collect();
        let mae = errors.iter().sum::<f64>() / reps as f64;
        let mut metrics = BTreeMap::new();
        metrics.insert("mae".into(), mae);
        metrics.insert("alpha2".into(), ctx.alpha2);
        metrics.insert("bandwidth".into(), kernel.bandwidth_for(n) as f64);
        per_n.push(PerNSummary { n, metrics });
        maes.push(mae);
        for (r, e) in errors.iter().enumerate() {
            records.push(ReplicationRecord {
                n,
                replication: r,
                metric: "abs_error".into(),
                value: *e,
            });
        }
    }
    let pass = maes.windows(2).all(|w| w[1] <= w[0]);
    Ok((
        McReport {
            experiment: scenario.experiment,
            seed: scenario.seed,
            replications: reps,
            per_n,
            pass,
            notes: vec!["pass = mean |alpha2_hat - alpha2| nonincreasing across the grid".into()],
        },
        records,
    ))
}

fn run_martingale_gap(scenario: &Scenario) -> Result<(McReport, Vec<ReplicationRecord>)> {
    let model = scenario.build_model()?;
    let innov = scenario.innov;
    let reps = scenario.replications;
    let ctx = prepare_pair(&model, &innov, &scenario.weight_pairs[0])?;
    let coeffs = MartingaleCoeffs::new(&ctx.cv, &ctx.cw, None);
    let lag = ctx
        .cv
        .truncation_lag()
        .max(ctx.cw.truncation_lag())
        .max(coeffs.lag_depth());

    let mut per_n = Vec::new();
    let mut records = Vec::new();
    let mut gaps = Vec::new();
    for (g, &n) in scenario.n_grid.iter().enumerate() {
        let sq_gaps: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let stream = (g * reps + r) as u64;
                let history =
                    simulate_innovations(&innov, -(lag as i64), n as i64, scenario.seed, stream)
                        .expect("validated scenario");
                let yv = crate::model::filter_history(ctx.cv.coeffs(), &history, n)
                    .expect("history is long enough");
                let d_nn: f64 = if ctx.same {
                    yv.iter().map(|a| a * a - ctx.target).sum()
                } else {
                    let yw = crate::model::filter_history(ctx.cw.coeffs(), &history, n)
                        .expect("history is long enough");
                    yv.iter()
                        .zip(yw.iter())
                        .map(|(a, b)| a * b - ctx.target)
                        .sum()
                };
                // the martingale-difference approximation of D over times
                // 1..=n is M_n - M_0
                let m = martingale_path(&history, &coeffs, n, innov.sigma2)
                    .expect("history is long enough");
                let gap = d_nn - (m[n] - m[0]);
                gap * gap
            })
            .collect();
        let normalized = sq_gaps.iter().sum::<f64>() / reps as f64 / n as f64;
        let mut metrics = BTreeMap::new();
        metrics.insert("normalized_sq_gap".into(), normalized);
        per_n.push(PerNSummary { n, metrics });
        gaps.push(normalized);
        for (r, v) in sq_gaps.iter().enumerate() {
            records.push(ReplicationRecord {
                n,
                replication: r,
                metric: "sq_gap".into(),
                value: *v,
            });
        }
    }
    let degenerate = gaps.iter().all(|&v| v < 1e-20);
    let pass = degenerate || gaps.windows(2).all(|w| w[1] < w[0]);
    Ok((
        McReport {
            experiment: scenario.experiment,
            seed: scenario.seed,
            replications: reps,
            per_n,
            pass,
            notes: vec![
                "pass = n^-1 mean (D_nn - (M_n - M_0))^2 decreasing across the grid".into(),
            ],
        },
        records,
    ))
}

fn run_multivariate_cov(scenario: &Scenario) -> Result<(McReport, Vec<ReplicationRecord>)> {
    let model = scenario.build_model()?;
    let innov = scenario.innov;
    let reps = scenario.replications;
    let se_mult = scenario.thresholds.se_multiplier.unwrap_or(3.0);
    let contexts: Vec<PairContext> = scenario
        .weight_pairs
        .iter()
        .map(|p| prepare_pair(&model, &innov, p))
        .collect::<Result<_>>()?;
    let k = contexts.len();
    // beta matrix from the formula; diagonal entries are the alpha^2
    let mut beta = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            beta[i][j] = beta_coefficient_projected(
                (&contexts[i].cv, &contexts[i].cw),
                (&contexts[j].cv, &contexts[j].cw),
                &innov,
                None,
            )?;
        }
    }

    let mut per_n = Vec::new();
    let mut records = Vec::new();
    let mut pass = true;
    for (g, &n) in scenario.n_grid.iter().enumerate() {
        // one shared innovation stream per replication drives all K pairs
        let draws: Vec<Vec<f64>> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let stream = (g * reps + r) as u64;
                let lag = contexts
                    .iter()
                    .map(|c| c.cv.truncation_lag().max(c.cw.truncation_lag()))
                    .max()
                    .unwrap_or(0);
                let history =
                    simulate_innovations(&innov, 1 - lag as i64, n as i64, scenario.seed, stream)
                        .expect("validated scenario");
                contexts
                    .iter()
                    .map(|ctx| {
                        let yv = crate::model::filter_history(ctx.cv.coeffs(), &history, n)
                            .expect("history is long enough");
                        let sum: f64 = if ctx.same {
                            yv.iter().map(|a| a * a).sum()
                        } else {
                            let yw = crate::model::filter_history(ctx.cw.coeffs(), &history, n)
                                .expect("history is long enough");
                            yv.iter().zip(yw.iter()).map(|(a, b)| a * b).sum()
                        };
                        (sum - n as f64 * ctx.target) / (n as f64).sqrt()
                    })
                    .collect()
            })
            .collect();
        let means: Vec<f64> = (0..k)
            .map(|i| draws.iter().map(|d| d[i]).sum::<f64>() / reps as f64)
            .collect();
        let mut metrics = BTreeMap::new();
        let mut max_dev_in_se = 0.0_f64;
        for i in 0..k {
            for j in i..k {
                let prods: Vec<f64> = draws
                    .iter()
                    .map(|d| (d[i] - means[i]) * (d[j] - means[j]))
                    .collect();
                let emp = prods.iter().sum::<f64>() / (reps - 1) as f64;
                let mean_prod = prods.iter().sum::<f64>() / reps as f64;
                let var_prod = prods
                    .iter()
                    .map(|p| (p - mean_prod) * (p - mean_prod))
                    .sum::<f64>()
                    / (reps - 1) as f64;
                let se = (var_prod / reps as f64).sqrt();
                let dev = (emp - beta[i][j]).abs();
                let dev_in_se = if se > 0.0 {
                    dev / se
                } else if dev == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                max_dev_in_se = max_dev_in_se.max(dev_in_se);
                metrics.insert(format!("emp_cov_{i}{j}"), emp);
                metrics.insert(format!("beta_{i}{j}"), beta[i][j]);
                metrics.insert(format!("dev_in_se_{i}{j}"), dev_in_se);
            }
        }
        metrics.insert("max_dev_in_se".into(), max_dev_in_se);
        pass &= max_dev_in_se <= se_mult;
        for (r, d) in draws.iter().enumerate() {
            for (i, value) in d.iter().enumerate() {
                records.push(ReplicationRecord {
                    n,
                    replication: r,
                    metric: format!("d1_pair{i}"),
                    value: *value,
                });
            }
        }
        per_n.push(PerNSummary { n, metrics });
    }
    Ok((
        McReport {
            experiment: scenario.experiment,
            seed: scenario.seed,
            replications: reps,
            per_n,
            pass,
            notes: vec![format!(
                "entrywise |emp - beta| within {se_mult} MC standard errors"
            )],
        },
        records,
    ))
}

fn run_shrinkage_mse(scenario: &Scenario) -> Result<(McReport, Vec<ReplicationRecord>)> {
    let model = scenario.build_model()?;
    let innov = scenario.innov;
    let reps = scenario.replications;
    if reps < 4 {
        return Err(Error::invalid(
            "replications",
            "shrinkage comparison needs at least 4",
        ));
    }
    let truth = theoretical_covariance(&model, &innov, 0);

    let mut per_n = Vec::new();
    let mut records = Vec::new();
    let mut pass = true;
    for (g, &n) in scenario.n_grid.iter().enumerate() {
        let samples: Vec<ndarray::Array2<f64>> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let stream = (g * reps + r) as u64;
                let panel = simulate_panel_stream(&model, &innov, n, scenario.seed, stream)
                    .expect("validated scenario");
                sample_cov(&panel)
            })
            .collect();
        // weight from the first half, risk comparison on the held-out half
        let half = reps / 2;
        let fit: Vec<(ndarray::Array2<f64>, ndarray::Array2<f64>)> = samples[..half]
            .iter()
            .map(|s| (s.clone(), truth.clone()))
            .collect();
        let w_star = estimate_shrink_weight(&fit)?;
        let frob = |a: &ndarray::Array2<f64>| -> f64 {
            a.iter()
                .zip(truth.iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum()
        };
        let mut mse_raw = 0.0;
        let mut mse_shrunk = 0.0;
        for (idx, s) in samples[half..].iter().enumerate() {
            let raw = frob(s);
            let shrunk = frob(&shrink_covariance(s, w_star)?.matrix);
            mse_raw += raw;
            mse_shrunk += shrunk;
            records.push(ReplicationRecord {
                n,
                replication: half + idx,
                metric: "frob_raw".into(),
                value: raw,
            });
            records.push(ReplicationRecord {
                n,
                replication: half + idx,
                metric: "frob_shrunk".into(),
                value: shrunk,
            });
        }
        let held_out = (reps - half) as f64;
        mse_raw /= held_out;
        mse_shrunk /= held_out;
        let mut metrics = BTreeMap::new();
        metrics.insert("w_star".into(), w_star);
        metrics.insert("mse_raw".into(), mse_raw);
        metrics.insert("mse_shrunk".into(), mse_shrunk);
        metrics.insert("improvement".into(), mse_raw - mse_shrunk);
        pass &= mse_shrunk < mse_raw;
        per_n.push(PerNSummary { n, metrics });
    }
    Ok((
        McReport {
            experiment: scenario.experiment,
            seed: scenario.seed,
            replications: reps,
            per_n,
            pass,
            notes: vec!["pass = held-out Frobenius risk improves under shrinkage".into()],
        },
        records,
    ))
}

fn run_cp_size_power(scenario: &Scenario) -> Result<(McReport, Vec<ReplicationRecord>)> {
    let model = scenario.build_model()?;
    let innov = scenario.innov;
    let reps = scenario.replications;
    let level = scenario.level_or_default();
    let kernel = scenario.kernel();
    let ctx = prepare_pair(&model, &innov, &scenario.weight_pairs[0])?;
    let alpha = require_positive_alpha(&ctx, 0)?;
    let bm = LimitLaw::sup_abs_bm();
    let bridge = LimitLaw::sup_abs_bridge();
    let crit_bm = bm.quantile(1.0 - level)?;
    let crit_bridge = bridge.quantile(1.0 - level)?;
    let grid_len = scenario.n_grid.len();

    // post-change projected coefficients, when an alternative is configured
    let change = scenario.change.as_ref();
    let post_ctx: Option<PairContext> = match change {
        Some(spec) => {
            let mut coefficients: Vec<Vec<f64>> =
                (0..model.dim()).map(|nu| model.coordinate(nu)).collect();
            match &spec.coordinates {
                Some(idx) => {
                    for &nu in idx {
                        if nu >= coefficients.len() {
                            return Err(Error::invalid(
                                "change.coordinates",
                                format!("coordinate {nu} out of range"),
                            ));
                        }
                        for c in &mut coefficients[nu] {
                            *c *= spec.scale;
                        }
                    }
                }
                None => {
                    for row in &mut coefficients {
                        for c in row {
                            *c *= spec.scale;
                        }
                    }
                }
            }
            let post_model = CoefficientModel::explicit(coefficients)?;
            Some(prepare_pair(
                &post_model,
                &innov,
                &scenario.weight_pairs[0],
            )?)
        }
        None => None,
    };

    struct RepOutcome {
        reject_known: bool,
        reject_bridge: bool,
        /// Argmax of the raw known-target path. Under a sustained variance
        /// change its drift keeps growing, so this boundary-peaks; kept as a
        /// diagnostic only.
        k_hat_raw: usize,
        /// Argmax of the self-centered path, whose drift is tent-shaped with
        /// the peak at the change point; this is the localization estimate.
        k_hat_bridge: usize,
        stat_bridge: f64,
    }

    let run_block = |n: usize, g: usize, block: u64, alternative: bool| -> Vec<RepOutcome> {
        let q = change.map(|c| ((c.at_frac * n as f64).floor() as usize).clamp(1, n - 1));
        (0..reps)
            .into_par_iter()
            .map(|r| {
                let stream = (block * grid_len as u64 + g as u64) * reps as u64 + r as u64;
                let lag = ctx.cv.truncation_lag().max(ctx.cw.truncation_lag());
                let history =
                    simulate_innovations(&innov, 1 - lag as i64, n as i64, scenario.seed, stream)
                        .expect("validated scenario");
                let pre = {
                    let yv = crate::model::filter_history(ctx.cv.coeffs(), &history, n)
                        .expect("history is long enough");
                    if ctx.same {
                        yv.iter().map(|a| a * a).collect::<Vec<f64>>()
                    } else {
                        let yw = crate::model::filter_history(ctx.cw.coeffs(), &history, n)
                            .expect("history is long enough");
                        yv.iter().zip(yw.iter()).map(|(a, b)| a * b).collect()
                    }
                };
                let products: Vec<f64> = if alternative {
                    let pc = post_ctx
                        .as_ref()
                        .expect("alternative requires a change spec");
                    let q = q.expect("alternative requires a change spec");
                    let yv = crate::model::filter_history(pc.cv.coeffs(), &history, n)
                        .expect("history is long enough");
                    let post: Vec<f64> = if pc.same {
                        yv.iter().map(|a| a * a).collect()
                    } else {
                        let yw = crate::model::filter_history(pc.cw.coeffs(), &history, n)
                            .expect("history is long enough");
                        yv.iter().zip(yw.iter()).map(|(a, b)| a * b).collect()
                    };
                    pre.iter()
                        .take(q)
                        .chain(post.iter().skip(q))
                        .copied()
                        .collect()
                } else {
                    pre
                };
                let norm = if scenario.use_estimated_alpha {
                    // learning sample from a disjoint stream block, same size
                    let learn_stream = (1u64 << 32) ^ stream;
                    let learn = simulate_products(&ctx, &innov, n, scenario.seed, learn_stream)
                        .expect("validated scenario");
                    lrv_estimate_from_products(&learn, &kernel)
                        .expect("validated scenario")
                        .max(1e-12)
                        .sqrt()
                } else {
                    alpha
                };
                // known-target path, centered at the pre-change expectation
                let targets = vec![ctx.target; n];
                let raw =
                    partial_sum_from_products(&products, &targets).expect("nonempty products");
                let scaled = raw.scaled();
                let stat_known = scaled.max_abs() / norm;
                let bridge_path =
                    crate::covariance::bridge_from_products(&products).expect("n >= 2");
                let stat_bridge = bridge_path.max_abs() / norm;
                RepOutcome {
                    reject_known: stat_known > crit_bm,
                    reject_bridge: stat_bridge > crit_bridge,
                    k_hat_raw: estimate_changepoint(&scaled),
                    k_hat_bridge: estimate_changepoint(&bridge_path),
                    stat_bridge,
                }
            })
            .collect()
    };

    let mut per_n = Vec::new();
    let mut records = Vec::new();
    let mut pass = true;
    for (g, &n) in scenario.n_grid.iter().enumerate() {
        let mut metrics = BTreeMap::new();
        let null_outcomes = run_block(n, g, 0, false);
        let size_known =
            null_outcomes.iter().filter(|o| o.reject_known).count() as f64 / reps as f64;
        let size_bridge =
            null_outcomes.iter().filter(|o| o.reject_bridge).count() as f64 / reps as f64;
        metrics.insert("size_known".into(), size_known);
        metrics.insert("size_bridge".into(), size_bridge);
        for (r, o) in null_outcomes.iter().enumerate() {
            records.push(ReplicationRecord {
                n,
                replication: r,
                metric: "null_stat_bridge".into(),
                value: o.stat_bridge,
            });
        }
        if let Some([lo, hi]) = scenario.thresholds.size_range {
            pass &= size_known >= lo && size_known <= hi && size_bridge >= lo && size_bridge <= hi;
        }

        if let Some(spec) = change {
            let alt_outcomes = run_block(n, g, 1, true);
            let q = ((spec.at_frac * n as f64).floor() as usize).clamp(1, n - 1);
            let power_known =
                alt_outcomes.iter().filter(|o| o.reject_known).count() as f64 / reps as f64;
            let power_bridge =
                alt_outcomes.iter().filter(|o| o.reject_bridge).count() as f64 / reps as f64;
            let median_of = |mut xs: Vec<f64>| -> f64 {
                xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mid = xs.len() / 2;
                if xs.len() % 2 == 1 {
                    xs[mid]
                } else {
                    0.5 * (xs[mid - 1] + xs[mid])
                }
            };
            let median_err = median_of(
                alt_outcomes
                    .iter()
                    .map(|o| (o.k_hat_bridge as f64 - q as f64).abs())
                    .collect(),
            );
            let median_err_raw = median_of(
                alt_outcomes
                    .iter()
                    .map(|o| (o.k_hat_raw as f64 - q as f64).abs())
                    .collect(),
            );
            metrics.insert("power_known".into(), power_known);
            metrics.insert("power_bridge".into(), power_bridge);
            metrics.insert("khat_median_abs_err".into(), median_err);
            metrics.insert("khat_median_abs_err_raw".into(), median_err_raw);
            metrics.insert("q".into(), q as f64);
            if let Some(pmin) = scenario.thresholds.power_min {
                pass &= power_known >= pmin && power_bridge >= pmin;
            }
            if let Some(frac) = scenario.thresholds.location_error_frac {
                pass &= median_err <= frac * n as f64;
            }
            for (r, o) in alt_outcomes.iter().enumerate() {
                records.push(ReplicationRecord {
                    n,
                    replication: r,
                    metric: "k_hat".into(),
                    value: o.k_hat_bridge as f64,
                });
            }
        }
        per_n.push(PerNSummary { n, metrics });
    }
    Ok((
        McReport {
            experiment: scenario.experiment,
            seed: scenario.seed,
            replications: reps,
            per_n,
            pass,
            notes: vec![format!(
                "level {level}; normalizer: {}",
                if scenario.use_estimated_alpha {
                    "estimated (learning stream)"
                } else {
                    "formula"
                }
            )],
        },
        records,
    ))
}
