use std::path::PathBuf;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::EstimatorConfig;
use crate::closed_form::sm_exact;
use crate::error::{check_dim, HrfError, Result};
use crate::estimators::{HybridSpec, Sharing};
use crate::features::Side;
use crate::rng::{derive_seed, Seed};

/// Kernel used to score keys: the exact softmax kernel or an estimator.
#[derive(Debug, Clone)]
pub enum KernelEstimator {
    Exact,
    Hybrid(HybridSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxDist {
    /// `K̂(q, k_i) / Σ_j K̂(q, k_j)`; may contain negative entries.
    pub raw: Vec<f64>,
    /// Negative estimates set to zero, then renormalized.
    pub clipped: Vec<f64>,
    /// Share of raw entries below zero.
    pub negative_fraction: f64,
}

fn kernel_values(query: &[f64], keys: &[Vec<f64>], kernel: &KernelEstimator) -> Result<Vec<f64>> {
    if keys.is_empty() {
        return Err(HrfError::InvalidArgument("need at least one key".into()));
    }
    Ok(match kernel {
        KernelEstimator::Exact => {
            keys.iter().map(|k| check_dim(query.len(), k.len()).map(|_| sm_exact(query, k))).collect::<Result<_>>()?
        }
        KernelEstimator::Hybrid(spec) => {
            let q = spec.prepare(query, Side::Query)?;
            keys.iter()
                .map(|k| spec.combine(&q, &spec.prepare(k, Side::Key)?).map(|r| r.value))
                .collect::<Result<_>>()?
        }
    })
}

/// Softmax distribution of `query` over `keys` from kernel estimates.
pub fn approx_softmax_distribution(query: &[f64], keys: &[Vec<f64>], kernel: &KernelEstimator) -> Result<SoftmaxDist> {
    let est = kernel_values(query, keys, kernel)?;
    let negatives = est.iter().filter(|&&v| v < 0.0).count();
    let sum: f64 = est.iter().sum();
    if !(sum > 0.0) {
        return Err(HrfError::DegenerateDistribution { sum, negatives, len: est.len() });
    }
    let clipped_sum: f64 = est.iter().map(|v| v.max(0.0)).sum();
    Ok(SoftmaxDist {
        raw: est.iter().map(|v| v / sum).collect(),
        clipped: est.iter().map(|v| v.max(0.0) / clipped_sum).collect(),
        negative_fraction: negatives as f64 / est.len() as f64,
    })
}

fn check_support(support: &[f64], p: &[f64], q: &[f64]) -> Result<()> {
    check_dim(support.len(), p.len())?;
    check_dim(support.len(), q.len())?;
    if support.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(HrfError::InvalidArgument("support must be sorted".into()));
    }
    Ok(())
}

/// `Σ_i |F_p(s_i) − F_q(s_i)|·(s_{i+1} − s_i)` over a sorted support.
pub fn wasserstein1(support: &[f64], p: &[f64], q: &[f64]) -> Result<f64> {
    check_support(support, p, q)?;
    let (mut fp, mut fq, mut total) = (0.0, 0.0, 0.0);
    for i in 0..support.len().saturating_sub(1) {
        fp += p[i];
        fq += q[i];
        total += (fp - fq).abs() * (support[i + 1] - support[i]);
    }
    Ok(total)
}

/// `max_i |F_p(i) − F_q(i)|` for distributions on a common support.
pub fn ks_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    check_dim(p.len(), q.len())?;
    let (mut fp, mut fq, mut best) = (0.0f64, 0.0f64, 0.0f64);
    for (a, b) in p.iter().zip(q) {
        fp += a;
        fq += b;
        best = best.max((fp - fq).abs());
    }
    Ok(best.min(1.0))
}

/// Queries and keys scored by each estimator against the exact softmax.
///
/// Embeddings come from `embeddings` (a JSON object with `queries` and
/// `keys` matrices) or are drawn as Gaussian vectors rescaled to length
/// `norm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoftmaxDistConfig {
    pub d: usize,
    pub n_queries: usize,
    pub n_keys: usize,
    pub norm: f64,
    pub estimators: Vec<EstimatorConfig>,
    pub embeddings: Option<PathBuf>,
}

impl Default for SoftmaxDistConfig {
    fn default() -> Self {
        Self {
            d: 16,
            n_queries: 16,
            n_keys: 64,
            norm: 1.5,
            estimators: vec![
                EstimatorConfig::Trig { m: 16 },
                EstimatorConfig::PosPlusPlus { m: 16 },
                EstimatorConfig::AngularHybrid { m: 8, n: 2, sharing: Sharing::Independent },
            ],
            embeddings: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistMetricRecord {
    pub query_id: usize,
    pub estimator_id: String,
    pub wasserstein1: f64,
    pub ks: f64,
    pub negative_mass_fraction: f64,
}

#[derive(Deserialize)]
struct Embeddings {
    queries: Vec<Vec<f64>>,
    keys: Vec<Vec<f64>>,
}

fn embeddings(cfg: &SoftmaxDistConfig, seed: Seed) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    if let Some(path) = &cfg.embeddings {
        let e: Embeddings = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if e.queries.is_empty() || e.keys.is_empty() {
            return Err(HrfError::InvalidArgument("embedding file needs queries and keys".into()));
        }
        return Ok((e.queries, e.keys));
    }
    let draw = |label: &str, count: usize| -> Vec<Vec<f64>> {
        let mut rng = derive_seed(seed, label).rng();
        (0..count)
            .map(|_| {
                let v: Vec<f64> = (0..cfg.d).map(|_| rng.sample(StandardNormal)).collect();
                let len = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                v.into_iter().map(|x| x * cfg.norm / len).collect()
            })
            .collect()
    };
    Ok((draw("dist-queries", cfg.n_queries), draw("dist-keys", cfg.n_keys)))
}

/// Wasserstein-1 and KS distance (over key indices) between the clipped
/// approximate distribution and the exact softmax, per query and estimator.
///
/// When the raw estimates sum to a non-positive value the clipped
/// distribution is still formed from the positive estimates; if none are
/// positive it is taken as uniform.
pub fn softmax_distribution_bench(cfg: &SoftmaxDistConfig, seed: Seed) -> Result<Vec<DistMetricRecord>> {
    let (queries, keys) = embeddings(cfg, seed)?;
    let d = queries[0].len();
    let support: Vec<f64> = (0..keys.len()).map(|i| i as f64).collect();
    let mut out = Vec::new();
    for est in &cfg.estimators {
        let id = est.id(d)?;
        for (qi, q) in queries.iter().enumerate() {
            let exact = approx_softmax_distribution(q, &keys, &KernelEstimator::Exact)?;
            let spec = est.build(d, cfg.norm, derive_seed(seed, &format!("dist/{id}/{qi}")))?;
            let est = kernel_values(q, &keys, &KernelEstimator::Hybrid(spec))?;
            let neg = est.iter().filter(|&&v| v < 0.0).count() as f64 / est.len() as f64;
            let pos: f64 = est.iter().map(|v| v.max(0.0)).sum();
            let clipped: Vec<f64> = if pos > 0.0 {
                est.iter().map(|v| v.max(0.0) / pos).collect()
            } else {
                vec![1.0 / est.len() as f64; est.len()]
            };
            let w = wasserstein1(&support, &clipped, &exact.raw)?;
            let ks = ks_distance(&clipped, &exact.raw)?;
            out.push(DistMetricRecord { query_id: qi, estimator_id: id.clone(), wasserstein1: w, ks, negative_mass_fraction: neg });
        }
    }
    Ok(out)
}
