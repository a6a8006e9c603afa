use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::cluster::ClusterBenchConfig;
use super::dist::SoftmaxDistConfig;
use super::pointwise::{match_flops, PointwiseConfig};
use super::verify::{FlopsConfig, MseVerifyConfig};
use crate::closed_form::{mse_angular_hybrid, mse_gaussian_hybrid, mse_pos_plus, mse_pos_plusplus, mse_trig};
use crate::error::{HrfError, Result};
use crate::estimators::{make_angular_hybrid, make_gaussian_hybrid, BaseEstimatorSpec, BaseFamily, HybridSpec, Sharing};
use crate::features::GaussianLambdaParams;
use crate::rng::{sample_ensemble, EnsembleScheme, Seed};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "HRF_WORKERS";

/// Worker count: the explicit value, else `HRF_WORKERS`, else rayon's
/// default.
pub fn resolve_workers(explicit: Option<usize>) -> Option<usize> {
    explicit.or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok())).filter(|&w| w > 0)
}

/// Runs `f` on a dedicated pool of `workers` threads (rayon's global pool
/// when `None`).
pub fn run_with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HrfError::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// One estimator in a benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum EstimatorConfig {
    Trig { m: usize },
    PosPlus { m: usize },
    PosPlusPlus { m: usize },
    AngularHybrid {
        m: usize,
        n: usize,
        #[serde(default)]
        sharing: Sharing,
    },
    /// Normalized bipolar Gaussian hybrid; `ρ` uses the input length of the
    /// cell being evaluated.
    GaussianHybrid {
        m: usize,
        n: usize,
        sigma: f64,
        #[serde(default)]
        sharing: Sharing,
    },
    /// Angular hybrid whose `(m, n)` is chosen by [`match_flops`] against a
    /// regular map with `target_m` features.
    MatchedAngularHybrid {
        target_m: usize,
        #[serde(default)]
        sharing: Sharing,
    },
}

impl EstimatorConfig {
    /// Resolves FLOPS matching for input dimension `d`.
    pub fn resolve(&self, d: usize) -> Result<EstimatorConfig> {
        Ok(match self {
            EstimatorConfig::MatchedAngularHybrid { target_m, sharing } => {
                let (m, n) = match_flops(d, *target_m, *sharing)?;
                EstimatorConfig::AngularHybrid { m, n, sharing: *sharing }
            }
            other => other.clone(),
        })
    }

    /// Stable identifier, e.g. `trig_m128` or `anghyb_m16_n8_shared`.
    pub fn id(&self, d: usize) -> Result<String> {
        let share = |s: &Sharing| match s {
            Sharing::Independent => "",
            Sharing::Shared => "_shared",
        };
        Ok(match self.resolve(d)? {
            EstimatorConfig::Trig { m } => format!("trig_m{m}"),
            EstimatorConfig::PosPlus { m } => format!("pos_plus_m{m}"),
            EstimatorConfig::PosPlusPlus { m } => format!("pos_plusplus_m{m}"),
            EstimatorConfig::AngularHybrid { m, n, sharing } => format!("anghyb_m{m}_n{n}{}", share(&sharing)),
            EstimatorConfig::GaussianHybrid { m, n, sigma, sharing } => {
                format!("gausshyb_m{m}_n{n}_s{sigma}{}", share(&sharing))
            }
            EstimatorConfig::MatchedAngularHybrid { .. } => unreachable!(),
        })
    }

    /// Fresh estimator for inputs of dimension `d` and length `r`.
    pub fn build(&self, d: usize, r: f64, seed: Seed) -> Result<HybridSpec> {
        let single = |family: BaseFamily, m: usize| -> Result<HybridSpec> {
            let e = sample_ensemble(d, m, EnsembleScheme::Iid, seed)?;
            Ok(HybridSpec::single(BaseEstimatorSpec::new(family, Arc::new(e))?))
        };
        match self.resolve(d)? {
            EstimatorConfig::Trig { m } => single(BaseFamily::Trig, m),
            EstimatorConfig::PosPlus { m } => single(BaseFamily::PosPlus, m),
            EstimatorConfig::PosPlusPlus { m } => single(BaseFamily::PosPlusPlus, m),
            EstimatorConfig::AngularHybrid { m, n, sharing } => make_angular_hybrid(d, m, n, sharing, seed),
            EstimatorConfig::GaussianHybrid { m, n, sigma, sharing } => {
                make_gaussian_hybrid(d, m, n, sigma, r, sharing, seed)
            }
            EstimatorConfig::MatchedAngularHybrid { .. } => unreachable!(),
        }
    }

    /// Closed-form MSE at `(x, y)`; `r` as in [`EstimatorConfig::build`].
    pub fn closed_form_mse(&self, x: &[f64], y: &[f64], r: f64) -> Result<f64> {
        match self.resolve(x.len())? {
            EstimatorConfig::Trig { m } => mse_trig(x, y, m),
            EstimatorConfig::PosPlus { m } => mse_pos_plus(x, y, m),
            EstimatorConfig::PosPlusPlus { m } => mse_pos_plusplus(x, y, m),
            EstimatorConfig::AngularHybrid { m, n, sharing } => {
                mse_angular_hybrid(x, y, m, n, sharing == Sharing::Shared)
            }
            EstimatorConfig::GaussianHybrid { m, n, sigma, .. } => {
                let p = GaussianLambdaParams::normalized(sigma, r, n)?;
                mse_gaussian_hybrid(x, y, m, n, sigma, p.rho)
            }
            EstimatorConfig::MatchedAngularHybrid { .. } => unreachable!(),
        }
    }
}

/// Top-level JSON config; every section is optional and falls back to its
/// defaults.
///
/// ```json
/// {
///   "seed": 1,
///   "workers": 4,
///   "pointwise": { "thetas": [0.0, 1.5707963267948966], "r_list": [1.0], "d": 64, "samples": 10000,
///                  "estimators": [{ "family": "trig", "m": 128 }] },
///   "mse_verify": { "trials": 100000 },
///   "cluster_bench": { "m_list": [50, 100, 200], "repetitions": 20 },
///   "softmax_dist": { "n_keys": 64 },
///   "flops": { "d": 64, "m": 16, "n": 8 }
/// }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub seed: Option<Seed>,
    pub workers: Option<usize>,
    pub pointwise: PointwiseConfig,
    pub mse_verify: MseVerifyConfig,
    pub cluster_bench: ClusterBenchConfig,
    pub softmax_dist: SoftmaxDistConfig,
    pub flops: FlopsConfig,
}

impl HarnessConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
