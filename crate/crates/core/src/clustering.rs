//! k-means clustering of queries and keys, per-cluster-pair matrices `A`,
//! and synthetic clustered data.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, HrfError, Result};
use crate::features::{DiagMatrix, Side};
use crate::rng::{derive_seed, orthonormal_rows, Seed};

/// Stand-in for an unbounded entry of `A` where the loss wants `a_k → ∞`.
pub const DEFAULT_BIG: f64 = 1e3;
/// Stand-in for a vanishing entry of `A`.
pub const DEFAULT_SMALL: f64 = 1e-3;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Output of [`kmeans`] for one population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub centers: Vec<Vec<f64>>,
    pub assign: Vec<usize>,
    /// Sum of squared distances to the assigned center after each
    /// assignment step.
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Lloyd iterations from a seeded k-means++ start.
///
/// Points go to the nearest center, lowest index on ties. A cluster that
/// empties is re-seeded with the point farthest from its current center.
/// On return every center is the mean of its assigned points.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: Seed, max_iter: usize) -> Result<KMeansResult> {
    if points.is_empty() {
        return Err(HrfError::InvalidArgument("kmeans needs at least one point".into()));
    }
    if k == 0 || k > points.len() {
        return Err(HrfError::InvalidArgument(format!("need 1 <= k <= {} points, got k={k}", points.len())));
    }
    let d = points[0].len();
    for p in points {
        check_dim(d, p.len())?;
    }
    let mut rng = seed.rng();
    let mut centers = plus_plus_init(points, k, &mut rng);
    let mut assign = vec![usize::MAX; points.len()];
    let mut objective = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter.max(1) {
        iterations += 1;
        let mut changed = false;
        let mut total = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (best, dist) = nearest(p, &centers);
            total += dist;
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        objective.push(total);
        if !changed {
            converged = true;
            break;
        }
        update_centers(points, &mut assign, &mut centers);
    }
    if !converged {
        update_centers(points, &mut assign, &mut centers);
    }
    Ok(KMeansResult { centers, assign, objective, iterations, converged })
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus_init<R: Rng>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centers = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = d2.iter().rposition(|&v| v > 0.0).unwrap_or(0);
            for (i, &v) in d2.iter().enumerate() {
                acc += v;
                if v > 0.0 && acc > target {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.gen_range(0..points.len())
        };
        centers.push(points[idx].clone());
        for (v, p) in d2.iter_mut().zip(points) {
            *v = v.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

fn update_centers(points: &[Vec<f64>], assign: &mut [usize], centers: &mut [Vec<f64>]) {
    let k = centers.len();
    let d = points[0].len();
    loop {
        let mut counts = vec![0usize; k];
        for &a in assign.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else { break };
        // farthest point from its center among clusters that can spare one
        let mut far = (usize::MAX, -1.0);
        for (i, p) in points.iter().enumerate() {
            if counts[assign[i]] < 2 {
                continue;
            }
            let dist = sq_dist(p, &centers[assign[i]]);
            if dist > far.1 {
                far = (i, dist);
            }
        }
        if far.0 == usize::MAX {
            break;
        }
        assign[far.0] = empty;
        centers[empty] = points[far.0].clone();
    }
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assign.iter()) {
        counts[a] += 1;
        sums[a].iter_mut().zip(p).for_each(|(s, v)| *s += v);
    }
    for ((c, s), n) in centers.iter_mut().zip(sums).zip(counts) {
        if n > 0 {
            *c = s.into_iter().map(|v| v / n as f64).collect();
        }
    }
}

/// Query and key clusterings plus the minimal real-diagonal loss `s` of
/// every center pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub centers_q: Vec<Vec<f64>>,
    pub centers_k: Vec<Vec<f64>>,
    pub assign_q: Vec<usize>,
    pub assign_k: Vec<usize>,
    /// `s_{ij}`, row-major over `(i, j)`.
    #[serde(default)]
    pub s_values: Vec<f64>,
}

impl ClusterModel {
    pub fn from_centers(centers_q: Vec<Vec<f64>>, centers_k: Vec<Vec<f64>>) -> Result<Self> {
        let s_values = s_values(&centers_q, &centers_k)?;
        Ok(Self { centers_q, centers_k, assign_q: Vec::new(), assign_k: Vec::new(), s_values })
    }

    /// Clusters both populations with independent seeded k-means runs.
    pub fn fit(
        queries: &[Vec<f64>],
        keys: &[Vec<f64>],
        k_q: usize,
        k_k: usize,
        seed: Seed,
        max_iter: usize,
    ) -> Result<Self> {
        let q = kmeans(queries, k_q, derive_seed(seed, "kmeans-q"), max_iter)?;
        let k = kmeans(keys, k_k, derive_seed(seed, "kmeans-k"), max_iter)?;
        let s_values = s_values(&q.centers, &k.centers)?;
        Ok(Self { centers_q: q.centers, centers_k: k.centers, assign_q: q.assign, assign_k: k.assign, s_values })
    }
}

fn s_values(cq: &[Vec<f64>], ck: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(cq.len() * ck.len());
    for ci in cq {
        for cj in ck {
            out.push(min_real_loss(ci, cj)?);
        }
    }
    Ok(out)
}

/// Minimal loss over real diagonal `A`: `4·Σ_{k: c_ik c_jk > 0} c_ik c_jk`.
pub fn min_real_loss(ci: &[f64], cj: &[f64]) -> Result<f64> {
    check_dim(ci.len(), cj.len())?;
    Ok(4.0 * ci.iter().zip(cj).map(|(a, b)| (a * b).max(0.0)).sum::<f64>())
}

/// Real diagonal `A` minimizing `‖A c_i + A⁻¹ c_j‖²` coordinatewise:
/// `a_k = √|c_jk / c_ik|`, `big` if only `c_ik` is zero, `1/big` if only
/// `c_jk` is, `1` if both are.
pub fn build_a_real(ci: &[f64], cj: &[f64], big: f64) -> Result<DiagMatrix> {
    check_dim(ci.len(), cj.len())?;
    let entries: Vec<f64> = ci
        .iter()
        .zip(cj)
        .map(|(&a, &b)| match (a == 0.0, b == 0.0) {
            (false, _) if b != 0.0 => (b / a).abs().sqrt(),
            (false, _) => 1.0 / big,
            (true, false) => big,
            (true, true) => 1.0,
        })
        .collect();
    DiagMatrix::real(&entries)
}

/// Complex diagonal `A` with `A c_i + A⁻¹ c_j = 0` wherever no coordinate
/// has exactly one of `c_ik`, `c_jk` equal to zero.
pub fn build_a_complex(ci: &[f64], cj: &[f64], big: f64, small: f64) -> Result<DiagMatrix> {
    check_dim(ci.len(), cj.len())?;
    let entries = ci
        .iter()
        .zip(cj)
        .map(|(&a, &b)| {
            let prod = a * b;
            if prod > 0.0 {
                Complex64::new(0.0, (b / a).sqrt())
            } else if prod < 0.0 {
                Complex64::new((-b / a).sqrt(), 0.0)
            } else if a == 0.0 && b == 0.0 {
                Complex64::new(1.0, 1.0)
            } else if a == 0.0 {
                Complex64::new(big, 0.0)
            } else {
                Complex64::new(small, small)
            }
        })
        .collect();
    DiagMatrix::new(entries)
}

/// `‖A c_i + A⁻¹ c_j‖² = Σ_k |A_kk c_ik + c_jk / A_kk|²`.
pub fn cluster_loss(a: &DiagMatrix, ci: &[f64], cj: &[f64]) -> Result<f64> {
    let u = a.apply(ci, Side::Query)?;
    let v = a.apply(cj, Side::Key)?;
    Ok(u.iter().zip(&v).map(|(p, q)| (p + q).norm_sqr()).sum())
}

/// Synthetic clustered queries and keys.
///
/// Centers are `X_i = O^{i,1} X₀` and `Y_j = O^{j,2} Y₀` with random
/// orthogonal `O` and `X₀, Y₀ ~ N(0, center_scale²·I_d)`. Points are
/// `N(center, σ²I)` draws, all rescaled to length `norm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticClusterConfig {
    pub d: usize,
    pub clusters_q: usize,
    pub clusters_k: usize,
    pub points_per_cluster: usize,
    pub sigma: f64,
    /// Scale of `X₀, Y₀`. With `σ = 1` a scale near 1 makes the noise as
    /// large as the center coordinates, and real diagonal `A` (whose entries
    /// are ratios of center coordinates) then amplifies it.
    pub center_scale: f64,
    /// Flip coordinate signs of the centers so that every query center
    /// coordinate is opposite in sign to every key center coordinate.
    pub sign_adjust: bool,
    pub norm: f64,
    pub seed: Seed,
}

impl Default for SyntheticClusterConfig {
    fn default() -> Self {
        Self {
            d: 50,
            clusters_q: 2,
            clusters_k: 2,
            points_per_cluster: 1000,
            sigma: 1.0,
            center_scale: 50.0,
            sign_adjust: true,
            norm: 1.0,
            seed: Seed(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticClusters {
    pub queries: Vec<Vec<f64>>,
    pub keys: Vec<Vec<f64>>,
    pub labels_q: Vec<usize>,
    pub labels_k: Vec<usize>,
    /// Centers before noise and normalization.
    pub centers_q: Vec<Vec<f64>>,
    pub centers_k: Vec<Vec<f64>>,
    /// Minimal real-diagonal loss of each pair of empirical cluster means
    /// of the normalized points (row-major over `(i, j)`).
    pub s_values: Vec<f64>,
}

pub fn generate_synthetic_clusters(cfg: &SyntheticClusterConfig) -> Result<SyntheticClusters> {
    if cfg.d == 0 || cfg.points_per_cluster == 0 || cfg.clusters_q == 0 || cfg.clusters_k == 0 {
        return Err(HrfError::InvalidArgument("synthetic clusters need positive sizes".into()));
    }
    if !(cfg.sigma > 0.0) || !(cfg.norm > 0.0) || !(cfg.center_scale > 0.0) {
        return Err(HrfError::InvalidArgument("sigma, norm and center_scale must be positive".into()));
    }
    let d = cfg.d;
    let gauss = |label: &str, len: usize, scale: f64| -> Vec<f64> {
        let mut rng = derive_seed(cfg.seed, label).rng();
        (0..len).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
    };
    let rotate = |label: String, v: &[f64]| -> Vec<f64> {
        let o = orthonormal_rows(d, d, &mut derive_seed(cfg.seed, &label).rng());
        o.chunks_exact(d).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    };
    let x0 = gauss("x0", d, cfg.center_scale);
    let y0 = gauss("y0", d, cfg.center_scale);
    let mut centers_q: Vec<Vec<f64>> = (0..cfg.clusters_q).map(|i| rotate(format!("o-q-{i}"), &x0)).collect();
    let mut centers_k: Vec<Vec<f64>> = (0..cfg.clusters_k).map(|j| rotate(format!("o-k-{j}"), &y0)).collect();
    if cfg.sign_adjust {
        for k in 0..d {
            let s = if centers_q[0][k] >= 0.0 { 1.0 } else { -1.0 };
            centers_q.iter_mut().for_each(|c| c[k] = s * c[k].abs());
            centers_k.iter_mut().for_each(|c| c[k] = -s * c[k].abs());
        }
    }
    let sample = |label: &str, centers: &[Vec<f64>]| -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = derive_seed(cfg.seed, label).rng();
        let mut pts = Vec::with_capacity(centers.len() * cfg.points_per_cluster);
        let mut labels = Vec::with_capacity(pts.capacity());
        for (c_idx, c) in centers.iter().enumerate() {
            for _ in 0..cfg.points_per_cluster {
                let mut p: Vec<f64> = c.iter().map(|v| v + cfg.sigma * rng.sample::<f64, _>(StandardNormal)).collect();
                let len = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                if len > 0.0 {
                    p.iter_mut().for_each(|v| *v *= cfg.norm / len);
                }
                pts.push(p);
                labels.push(c_idx);
            }
        }
        (pts, labels)
    };
    let (queries, labels_q) = sample("noise-q", &centers_q);
    let (keys, labels_k) = sample("noise-k", &centers_k);
    let means = |pts: &[Vec<f64>], labels: &[usize], n: usize| -> Vec<Vec<f64>> {
        let mut sums = vec![vec![0.0; d]; n];
        let mut counts = vec![0usize; n];
        for (p, &l) in pts.iter().zip(labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        sums.into_iter().zip(counts).map(|(s, c)| s.into_iter().map(|v| v / c as f64).collect()).collect()
    };
    let s_values = s_values(
        &means(&queries, &labels_q, cfg.clusters_q),
        &means(&keys, &labels_k, cfg.clusters_k),
    )?;
    Ok(SyntheticClusters { queries, keys, labels_q, labels_k, centers_q, centers_k, s_values })
}
