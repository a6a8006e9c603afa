use std::collections::HashSet;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::EstimatorConfig;
use super::empirical_mse;
use crate::closed_form::{flops_model, FlopsQuery, GeometryPoint};
use crate::error::{HrfError, Result};
use crate::estimators::{HybridSpec, Sharing};
use crate::features::Side;
use crate::rng::{derive_seed, Seed};

/// Grid on which empirical MSEs are compared with the closed forms.
///
/// Inputs are `x = r·e₁` and `y = ratio·r·(cos θ·e₁ + sin θ·e₂)` for each
/// `ratio` in `length_ratios`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MseVerifyConfig {
    pub trials: usize,
    pub d: usize,
    pub thetas: Vec<f64>,
    pub r_list: Vec<f64>,
    pub length_ratios: Vec<f64>,
    pub m: usize,
    pub n: usize,
    /// σ of the Gaussian hybrid, checked on same-length pairs only.
    pub sigma: f64,
}

impl Default for MseVerifyConfig {
    fn default() -> Self {
        Self {
            trials: 100_000,
            d: 8,
            thetas: (0..=4).map(|i| PI * i as f64 / 4.0).collect(),
            r_list: vec![0.5, 1.0, 1.5],
            length_ratios: vec![1.0, 0.8],
            m: 1,
            n: 1,
            sigma: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseVerifyRecord {
    pub formula: String,
    pub theta: f64,
    pub r: f64,
    pub length_ratio: f64,
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub empirical: f64,
    pub closed_form: f64,
    /// `|empirical − closed_form| / max(closed_form, (1e-12·SM)²)`; the floor
    /// keeps cells whose MSE is zero up to rounding from dividing by zero.
    pub rel_dev: f64,
    /// Standard error of `empirical`.
    pub std_error: f64,
}

fn verify_estimators(cfg: &MseVerifyConfig) -> Vec<(&'static str, EstimatorConfig)> {
    let (m, n) = (cfg.m, cfg.n);
    vec![
        ("trig", EstimatorConfig::Trig { m }),
        ("pos_plus", EstimatorConfig::PosPlus { m }),
        ("pos_plusplus", EstimatorConfig::PosPlusPlus { m }),
        ("angular_hybrid", EstimatorConfig::AngularHybrid { m, n, sharing: Sharing::Independent }),
        ("angular_hybrid_shared", EstimatorConfig::AngularHybrid { m, n, sharing: Sharing::Shared }),
        ("gaussian_hybrid", EstimatorConfig::GaussianHybrid { m, n, sigma: cfg.sigma, sharing: Sharing::Independent }),
    ]
}

/// Empirical against closed-form MSE for every formula on the grid.
pub fn mse_verify(cfg: &MseVerifyConfig, seed: Seed) -> Result<Vec<MseVerifyRecord>> {
    if cfg.thetas.is_empty() || cfg.r_list.is_empty() || cfg.length_ratios.is_empty() {
        return Err(HrfError::InvalidArgument("mse-verify needs thetas, r_list and length_ratios".into()));
    }
    let mut out = Vec::new();
    for (formula, est) in verify_estimators(cfg) {
        for (ti, &theta) in cfg.thetas.iter().enumerate() {
            for (ri, &r) in cfg.r_list.iter().enumerate() {
                for (li, &ratio) in cfg.length_ratios.iter().enumerate() {
                    if formula == "gaussian_hybrid" && ratio != 1.0 {
                        continue;
                    }
                    let (x, mut y) = GeometryPoint::new(theta, r)?.vectors(cfg.d)?;
                    y.iter_mut().for_each(|v| *v *= ratio);
                    let cell = derive_seed(seed, &format!("mse-verify/{formula}/{ti}/{ri}/{li}"));
                    let e = empirical_mse(&x, &y, |s| est.build(cfg.d, r, s), cfg.trials, cell)?;
                    let cf = est.closed_form_mse(&x, &y, r)?;
                    let floor = (1e-12 * e.exact).powi(2);
                    out.push(MseVerifyRecord {
                        formula: formula.into(),
                        theta,
                        r,
                        length_ratio: ratio,
                        m: cfg.m,
                        n: cfg.n,
                        trials: cfg.trials,
                        empirical: e.mse,
                        closed_form: cf,
                        rel_dev: (e.mse - cf).abs() / cf.max(floor),
                        std_error: e.mse_variance.sqrt(),
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlopsConfig {
    pub d: usize,
    pub estimators: Vec<EstimatorConfig>,
}

impl Default for FlopsConfig {
    fn default() -> Self {
        Self {
            d: 64,
            estimators: vec![
                EstimatorConfig::AngularHybrid { m: 16, n: 8, sharing: Sharing::Independent },
                EstimatorConfig::AngularHybrid { m: 16, n: 8, sharing: Sharing::Shared },
                EstimatorConfig::MatchedAngularHybrid { target_m: 128, sharing: Sharing::Independent },
                EstimatorConfig::GaussianHybrid { m: 16, n: 8, sigma: 1.0, sharing: Sharing::Independent },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopsRecord {
    pub estimator_id: String,
    pub d: usize,
    pub m: usize,
    pub n: usize,
    pub model_mul_add: u64,
    /// Multiply-adds counted while building one query-side feature vector.
    pub measured_mul_add: u64,
    pub measured_transcendental: u64,
    /// `|measured − model| / model`.
    pub model_rel_gap: f64,
    /// `m·n·d`.
    pub regular_cost: u64,
    /// Model cost over regular cost.
    pub ratio: f64,
    pub measured_ratio: f64,
    pub feature_dim: usize,
    pub big_o_terms: u64,
}

/// Cost-model query describing `spec`.
pub fn flops_query(spec: &HybridSpec) -> FlopsQuery {
    let ensembles: HashSet<*const _> = spec.bases().iter().map(|b| Arc::as_ptr(&b.ensemble)).collect();
    FlopsQuery {
        d: spec.dim(),
        m: spec.bases()[0].m(),
        n: spec.lambdas().iter().map(|l| l.n()).max().unwrap_or(1).max(1),
        t: spec.bases().iter().map(|b| b.family.sub_map_count()).collect(),
        l: spec.lambdas().iter().map(|l| l.sub_map_count()).collect(),
        base_ensembles: ensembles.len(),
    }
}

/// Modelled against measured feature construction cost for each estimator.
pub fn flops_report(cfg: &FlopsConfig, seed: Seed) -> Result<Vec<FlopsRecord>> {
    let mut rng = derive_seed(seed, "flops-input").rng();
    let u: Vec<f64> = (0..cfg.d).map(|_| rng.sample::<f64, _>(StandardNormal) / (cfg.d as f64).sqrt()).collect();
    let r = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = Vec::new();
    for est in &cfg.estimators {
        let id = est.id(cfg.d)?;
        let spec = est.build(cfg.d, r, derive_seed(seed, &format!("flops/{id}")))?;
        let q = flops_query(&spec);
        let model = flops_model(&q)?;
        let (fv, ops) = spec.features_counted(&u, Side::Query)?;
        out.push(FlopsRecord {
            estimator_id: id,
            d: q.d,
            m: q.m,
            n: q.n,
            model_mul_add: model.hybrid_cost,
            measured_mul_add: ops.mul_add,
            measured_transcendental: ops.transcendental,
            model_rel_gap: (ops.mul_add as f64 - model.hybrid_cost as f64).abs() / model.hybrid_cost as f64,
            regular_cost: model.regular_cost,
            ratio: model.ratio,
            measured_ratio: ops.mul_add as f64 / model.regular_cost as f64,
            feature_dim: fv.len(),
            big_o_terms: model.big_o_terms,
        });
    }
    Ok(out)
}
