use serde::{Deserialize, Serialize};

use super::config::EstimatorConfig;
use super::{monte_carlo_values, pairwise_sum};
use crate::closed_form::{flops_model, sm_exact, FlopsQuery, GeometryPoint};
use crate::error::{HrfError, Result};
use crate::estimators::Sharing;
use crate::rng::{derive_seed, Seed};

/// Same-length sweep over an angle grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointwiseConfig {
    pub thetas: Vec<f64>,
    pub r_list: Vec<f64>,
    pub d: usize,
    /// Independent estimates per cell.
    pub samples: usize,
    pub estimators: Vec<EstimatorConfig>,
}

impl Default for PointwiseConfig {
    fn default() -> Self {
        let steps = 12;
        Self {
            thetas: (0..=steps).map(|i| std::f64::consts::PI * i as f64 / steps as f64).collect(),
            r_list: vec![1.0, 1.25, 1.5],
            d: 64,
            samples: 10_000,
            estimators: vec![
                EstimatorConfig::Trig { m: 128 },
                EstimatorConfig::PosPlusPlus { m: 128 },
                EstimatorConfig::MatchedAngularHybrid { target_m: 128, sharing: Sharing::Independent },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub theta: f64,
    pub r: f64,
    pub estimator_id: String,
    pub feature_dim: usize,
    pub trials: usize,
    pub mean_estimate: f64,
    pub q05: f64,
    pub q95: f64,
    pub empirical_rel_err: f64,
    pub closedform_rel_err: f64,
    pub exact_sm: f64,
}

/// Quantile of a sorted sample by linear interpolation between order
/// statistics at position `q·(n − 1)`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Angular hybrid `(m, n)` with `mn ≥ target_m` whose modelled cost is
/// closest to the modelled cost of a regular two-sub-map (trig or `++`) map
/// with `target_m` features. Ties go to the smaller `m`, then the smaller
/// `n`.
pub fn match_flops(d: usize, target_m: usize, sharing: Sharing) -> Result<(usize, usize)> {
    if d == 0 || target_m == 0 {
        return Err(HrfError::InvalidArgument("flops matching needs d, target_m >= 1".into()));
    }
    let regular = FlopsQuery { d, m: target_m, n: 1, t: vec![2], l: vec![], base_ensembles: 1 };
    let goal = flops_model(&regular)?.hybrid_cost as i128;
    let ensembles = match sharing {
        Sharing::Independent => 2,
        Sharing::Shared => 1,
    };
    let mut best: Option<(i128, usize, usize)> = None;
    for m in 1..=target_m {
        for n in target_m.div_ceil(m)..=target_m {
            let q = FlopsQuery { d, m, n, t: vec![2, 2], l: vec![1], base_ensembles: ensembles };
            let gap = (flops_model(&q)?.hybrid_cost as i128 - goal).abs();
            if best.map_or(true, |(g, _, _)| gap < g) {
                best = Some((gap, m, n));
            }
        }
    }
    let (_, m, n) = best.expect("non-empty search");
    Ok((m, n))
}

/// Empirical and closed-form accuracy of each estimator on a grid of
/// same-length input pairs `x = r·e₁`, `y = r·(cos θ·e₁ + sin θ·e₂)`.
pub fn pointwise_sweep(cfg: &PointwiseConfig, seed: Seed) -> Result<Vec<SweepRecord>> {
    if cfg.thetas.is_empty() || cfg.r_list.is_empty() || cfg.estimators.is_empty() {
        return Err(HrfError::InvalidArgument("pointwise sweep needs thetas, r_list and estimators".into()));
    }
    if cfg.samples < 2 {
        return Err(HrfError::InvalidArgument("pointwise sweep needs at least two samples".into()));
    }
    let mut out = Vec::new();
    for est in &cfg.estimators {
        let est = est.resolve(cfg.d)?;
        let id = est.id(cfg.d)?;
        for (ti, &theta) in cfg.thetas.iter().enumerate() {
            for (ri, &r) in cfg.r_list.iter().enumerate() {
                let g = GeometryPoint::new(theta, r)?;
                let (x, y) = g.vectors(cfg.d)?;
                let exact = sm_exact(&x, &y);
                let cell = derive_seed(seed, &format!("pointwise/{id}/{ti}/{ri}"));
                let mut values = monte_carlo_values(cfg.samples, cell, |s| Ok(est.build(cfg.d, r, s)?.estimate(&x, &y)?.value))?;
                let n = values.len() as f64;
                let sq: Vec<f64> = values.iter().map(|v| (v - exact) * (v - exact)).collect();
                let mean = pairwise_sum(&values) / n;
                let mse = pairwise_sum(&sq) / n;
                values.sort_by(f64::total_cmp);
                out.push(SweepRecord {
                    theta,
                    r,
                    estimator_id: id.clone(),
                    feature_dim: est.build(cfg.d, r, cell)?.feature_dim(),
                    trials: cfg.samples,
                    mean_estimate: mean,
                    q05: quantile(&values, 0.05),
                    q95: quantile(&values, 0.95),
                    empirical_rel_err: mse.sqrt() / exact,
                    closedform_rel_err: est.closed_form_mse(&x, &y, r)?.sqrt() / exact,
                    exact_sm: exact,
                });
            }
        }
    }
    Ok(out)
}
