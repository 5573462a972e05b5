//! Inference machinery for bilinear forms of sample covariance matrices of
//! high-dimensional vector time series.
//!
//! The library models each coordinate of a `d`-dimensional panel as a
//! truncated moving average of a shared i.i.d. innovation stream,
//!
//! ```text
//! Y_i^(nu) = sum_{j=0}^{J} c_j^(nu) eps_{i-j},
//! ```
//!
//! and provides, for l1-bounded weighting vectors `v`, `w`:
//!
//! - exact simulation of the panel and of projected series ([`model`]),
//! - sample covariance matrices, bilinear forms `v' Sigma_hat w` and the
//!   centered partial-sum (CUSUM) processes built from them ([`covariance`]),
//! - the asymptotic variance parameters of those statistics, their
//!   lag-window (long-run variance) estimators and the approximating
//!   martingale ([`lrv`]),
//! - the limit laws `sup |B|` and `sup |B0|` of the maximally selected
//!   statistics ([`limits`]) and off-line change-point tests built on them
//!   ([`changepoint`]),
//! - closed-form minimum-variance and mean-variance portfolio weights
//!   ([`portfolio`]), soft-threshold l1 projection of weighting vectors
//!   ([`sparse`]) and shrinkage of sample covariance matrices toward the
//!   identity target ([`shrinkage`]),
//! - a reproducible Monte Carlo harness that checks the distributional
//!   approximations at desk scale ([`montecarlo`]).
//!
//! All statistics involving weighting vectors are computed through the two
//! projected series `y_i(v)`, `y_i(w)` in `O(n d)` time; the explicit
//! `d x d` route exists only as a test oracle.

pub mod changepoint;
pub mod covariance;
pub mod error;
pub mod io;
pub mod limits;
pub mod lrv;
pub mod model;
pub mod montecarlo;
pub mod portfolio;
pub mod rng;
pub mod shrinkage;
pub mod sparse;

pub use error::{Error, Result};
