//! Experiment drivers, Monte Carlo machinery and table export.
//!
//! Every driver is a pure function of its config and seed. Trials draw from
//! per-trial derived seeds and run on a rayon pool; per-trial values are
//! collected in trial order and reduced with [`pairwise_sum`], so results do
//! not depend on the number of workers.

mod cluster;
mod config;
mod dist;
mod export;
mod pointwise;
mod verify;

pub use cluster::{cluster_benchmark, ClusterBenchConfig, ClusterBenchRecord, ClusterEstimatorId};
pub use config::{
    resolve_workers, run_with_workers, EstimatorConfig, HarnessConfig, WORKERS_ENV,
};
pub use dist::{
    approx_softmax_distribution, ks_distance, softmax_distribution_bench, wasserstein1, DistMetricRecord,
    KernelEstimator, SoftmaxDist, SoftmaxDistConfig,
};
pub use export::{export, read_csv, read_json, write_records, Format, TableRecord};
pub use pointwise::{match_flops, pointwise_sweep, quantile, PointwiseConfig, SweepRecord};
pub use verify::{flops_query, flops_report, mse_verify, FlopsConfig, FlopsRecord, MseVerifyConfig, MseVerifyRecord};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_form::sm_exact;
use crate::error::{HrfError, Result};
use crate::estimators::HybridSpec;
use crate::rng::Seed;

/// Sum in a fixed binary tree over the slice: halves are summed
/// recursively, leaves of up to eight values left to right.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Mean and spread of a Monte Carlo sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub trials: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of the mean.
    pub std_error: f64,
}

impl SampleStats {
    pub fn from_values(v: &[f64]) -> Result<Self> {
        if v.len() < 2 {
            return Err(HrfError::InvalidArgument("need at least two trials".into()));
        }
        let n = v.len() as f64;
        let mean = pairwise_sum(v) / n;
        let dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
        let variance = pairwise_sum(&dev) / (n - 1.0);
        Ok(Self { trials: v.len(), mean, variance, std_error: (variance / n).sqrt() })
    }
}

/// Runs `f(seed.child(i))` for `i < trials` in parallel and returns the
/// values in trial order.
pub fn monte_carlo_values<F>(trials: usize, seed: Seed, f: F) -> Result<Vec<f64>>
where
    F: Fn(Seed) -> Result<f64> + Sync,
{
    (0..trials as u64).into_par_iter().map(|i| f(seed.child(i))).collect()
}

/// Like [`monte_carlo_values`] for `N` quantities per trial; returns one
/// [`SampleStats`] per quantity.
pub fn monte_carlo<const N: usize, F>(trials: usize, seed: Seed, f: F) -> Result<[SampleStats; N]>
where
    F: Fn(Seed) -> Result<[f64; N]> + Sync,
{
    let rows: Vec<[f64; N]> = (0..trials as u64).into_par_iter().map(|i| f(seed.child(i))).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(N);
    for q in 0..N {
        let col: Vec<f64> = rows.iter().map(|r| r[q]).collect();
        out.push(SampleStats::from_values(&col)?);
    }
    Ok(out.try_into().expect("N columns"))
}

/// Empirical MSE of an estimator family at one input pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseEstimate {
    pub trials: usize,
    pub mse: f64,
    /// Variance of the `mse` estimate itself (`Var[(ŝ − SM)²] / trials`).
    pub mse_variance: f64,
    pub mean: f64,
    pub mean_std_error: f64,
    pub exact: f64,
}

/// Mean of `(SM̂ − SM(x, y))²` over `trials` independent estimators, the
/// `i`-th built by `factory(seed.child(i))`.
pub fn empirical_mse<F>(x: &[f64], y: &[f64], factory: F, trials: usize, seed: Seed) -> Result<MseEstimate>
where
    F: Fn(Seed) -> Result<HybridSpec> + Sync,
{
    if trials < 2 {
        return Err(HrfError::InvalidArgument("empirical MSE needs at least two trials".into()));
    }
    let exact = sm_exact(x, y);
    let [est, sq] = monte_carlo(trials, seed, |s| {
        let v = factory(s)?.estimate(x, y)?.value;
        Ok([v, (v - exact) * (v - exact)])
    })?;
    Ok(MseEstimate {
        trials,
        mse: sq.mean,
        mse_variance: sq.variance / trials as f64,
        mean: est.mean,
        mean_std_error: est.std_error,
        exact,
    })
}
