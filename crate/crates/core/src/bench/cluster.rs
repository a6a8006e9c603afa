use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pairwise_sum;
use crate::closed_form::sm_exact;
use crate::clustering::{generate_synthetic_clusters, ClusterModel, SyntheticClusterConfig};
use crate::error::{HrfError, Result};
use crate::estimators::{make_clustered_hybrid, BaseEstimatorSpec, BaseFamily, ClusterCoefficient, HybridSpec};
use crate::features::Side;
use crate::rng::{derive_seed, sample_ensemble, EnsembleScheme, Seed};

/// Synthetic clustered-data benchmark.
///
/// The data seed and all estimator seeds derive from the run seed; the
/// `seed` field of `synthetic` is ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterBenchConfig {
    pub dataset_id: String,
    pub synthetic: SyntheticClusterConfig,
    pub m_list: Vec<usize>,
    pub repetitions: usize,
    /// Points per side on which the MSE is averaged (all query-key pairs
    /// among them), taken at an even stride through the data.
    pub eval_points: usize,
    pub kmeans_max_iter: usize,
}

impl Default for ClusterBenchConfig {
    fn default() -> Self {
        Self {
            dataset_id: "synthetic".into(),
            synthetic: SyntheticClusterConfig::default(),
            m_list: vec![20, 50, 80, 100, 120, 150, 200],
            repetitions: 20,
            eval_points: 100,
            kmeans_max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterEstimatorId {
    /// Zero-one clustered hybrid with real diagonal `A`.
    HybridCluster,
    /// Positive `++` features.
    FavorPlus,
    Trig,
}

impl ClusterEstimatorId {
    pub const ALL: [ClusterEstimatorId; 3] =
        [ClusterEstimatorId::HybridCluster, ClusterEstimatorId::FavorPlus, ClusterEstimatorId::Trig];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClusterEstimatorId::HybridCluster => "hybrid_cluster",
            ClusterEstimatorId::FavorPlus => "favor_plus",
            ClusterEstimatorId::Trig => "trig",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterBenchRecord {
    pub dataset_id: String,
    pub rf_count: usize,
    pub estimator_id: String,
    pub repetitions: usize,
    pub mean_mse: f64,
    pub min_mse: f64,
    pub max_mse: f64,
    /// Mean of the per-pair minimal real-diagonal losses of the fitted
    /// centers.
    pub mean_s: f64,
}

fn build(id: ClusterEstimatorId, model: &ClusterModel, d: usize, m: usize, seed: Seed) -> Result<HybridSpec> {
    let single = |family| -> Result<HybridSpec> {
        let e = sample_ensemble(d, m, EnsembleScheme::Iid, seed)?;
        Ok(HybridSpec::single(BaseEstimatorSpec::new(family, Arc::new(e))?))
    };
    match id {
        ClusterEstimatorId::HybridCluster => make_clustered_hybrid(model, ClusterCoefficient::ZeroOne, m, true, seed),
        ClusterEstimatorId::FavorPlus => single(BaseFamily::PosPlusPlus),
        ClusterEstimatorId::Trig => single(BaseFamily::Trig),
    }
}

fn strided(points: &[Vec<f64>], count: usize) -> Vec<&Vec<f64>> {
    let count = count.min(points.len());
    (0..count).map(|i| &points[i * points.len() / count]).collect()
}

/// Min, mean and max MSE over repetitions of each estimator at each `m`.
pub fn cluster_benchmark(cfg: &ClusterBenchConfig, seed: Seed) -> Result<Vec<ClusterBenchRecord>> {
    if cfg.repetitions == 0 || cfg.m_list.is_empty() || cfg.eval_points == 0 {
        return Err(HrfError::InvalidArgument("cluster benchmark needs repetitions, m_list and eval_points".into()));
    }
    let data = generate_synthetic_clusters(&SyntheticClusterConfig { seed: derive_seed(seed, "data"), ..cfg.synthetic.clone() })?;
    let model = ClusterModel::fit(
        &data.queries,
        &data.keys,
        cfg.synthetic.clusters_q,
        cfg.synthetic.clusters_k,
        derive_seed(seed, "kmeans"),
        cfg.kmeans_max_iter,
    )?;
    let mean_s = pairwise_sum(&model.s_values) / model.s_values.len() as f64;
    let qs = strided(&data.queries, cfg.eval_points);
    let ks = strided(&data.keys, cfg.eval_points);
    let exact: Vec<Vec<f64>> = qs.iter().map(|x| ks.iter().map(|y| sm_exact(x, y)).collect()).collect();
    let d = cfg.synthetic.d;
    let mut out = Vec::new();
    for &m in &cfg.m_list {
        for id in ClusterEstimatorId::ALL {
            let mses: Vec<f64> = (0..cfg.repetitions)
                .into_par_iter()
                .map(|rep| {
                    let s = derive_seed(seed, &format!("cluster/{}/{m}/{rep}", id.as_str()));
                    let spec = build(id, &model, d, m, s)?;
                    let pk = ks.iter().map(|y| spec.prepare(y, Side::Key)).collect::<Result<Vec<_>>>()?;
                    let rows: Vec<f64> = qs
                        .par_iter()
                        .zip(&exact)
                        .map(|(x, ex)| {
                            let pq = spec.prepare(x, Side::Query)?;
                            let sq = pk
                                .iter()
                                .zip(ex)
                                .map(|(k, e)| spec.combine(&pq, k).map(|r| (r.value - e) * (r.value - e)))
                                .collect::<Result<Vec<f64>>>()?;
                            Ok(pairwise_sum(&sq))
                        })
                        .collect::<Result<_>>()?;
                    Ok(pairwise_sum(&rows) / (qs.len() * ks.len()) as f64)
                })
                .collect::<Result<_>>()?;
            out.push(ClusterBenchRecord {
                dataset_id: cfg.dataset_id.clone(),
                rf_count: m,
                estimator_id: id.as_str().into(),
                repetitions: cfg.repetitions,
                mean_mse: pairwise_sum(&mses) / mses.len() as f64,
                min_mse: mses.iter().copied().fold(f64::INFINITY, f64::min),
                max_mse: mses.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean_s,
            });
        }
    }
    Ok(out)
}
