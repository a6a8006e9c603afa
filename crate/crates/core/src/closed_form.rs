//! Exact softmax kernel and closed-form error analytics of every estimator.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{check_dim, HrfError, Result};
use crate::rng::dot;

/// Angle and common length of a same-length input pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryPoint {
    pub theta: f64,
    pub r: f64,
}

impl GeometryPoint {
    pub fn new(theta: f64, r: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) || !(r > 0.0) {
            return Err(HrfError::OutOfDomain(format!("need θ in [0, π] and r > 0 (θ={theta}, r={r})")));
        }
        Ok(Self { theta, r })
    }

    /// `x = r·e₁`, `y = r·(cos θ·e₁ + sin θ·e₂)` in `R^d`.
    pub fn vectors(&self, d: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if d < 2 {
            return Err(HrfError::InvalidArgument("need d >= 2 to place an angle".into()));
        }
        let mut x = vec![0.0; d];
        let mut y = vec![0.0; d];
        x[0] = self.r;
        y[0] = self.r * self.theta.cos();
        y[1] = self.r * self.theta.sin();
        Ok((x, y))
    }

    /// `‖x − y‖ = 2r·sin(θ/2)`.
    pub fn delta_norm(&self) -> f64 {
        2.0 * self.r * (self.theta / 2.0).sin()
    }

    /// `‖x + y‖ = 2r·cos(θ/2)`.
    pub fn z_norm(&self) -> f64 {
        2.0 * self.r * (self.theta / 2.0).cos()
    }
}

/// Angle between `x` and `y` as `2·atan2(‖x̂ − ŷ‖, ‖x̂ + ŷ‖)` on the unit
/// vectors, which stays accurate near 0 and π. Zero vectors give `θ = 0`.
pub fn theta_between(x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    let (nx, ny) = (dot(x, x).sqrt(), dot(y, y).sqrt());
    if nx == 0.0 || ny == 0.0 {
        return Ok(0.0);
    }
    let (mut d2, mut z2) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (u, v) = (a / nx, b / ny);
        d2 += (u - v) * (u - v);
        z2 += (u + v) * (u + v);
    }
    Ok(2.0 * d2.sqrt().atan2(z2.sqrt()))
}

/// `SM(x, y) = exp(x·y)`.
pub fn sm_exact(x: &[f64], y: &[f64]) -> f64 {
    dot(x, y).exp()
}

fn check_m(m: usize) -> Result<f64> {
    if m == 0 {
        return Err(HrfError::InvalidArgument("feature count must be >= 1".into()));
    }
    Ok(m as f64)
}

struct PairStats {
    xy: f64,
    z2: f64,
    d2: f64,
}

fn pair_stats(x: &[f64], y: &[f64]) -> Result<PairStats> {
    check_dim(x.len(), y.len())?;
    let (mut z2, mut d2) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        z2 += (a + b) * (a + b);
        d2 += (a - b) * (a - b);
    }
    Ok(PairStats { xy: dot(x, y), z2, d2 })
}

/// `(1/2m)·exp(‖z‖²)·SM⁻²·(1 − exp(−‖Δ‖²))²`.
pub fn mse_trig(x: &[f64], y: &[f64], m: usize) -> Result<f64> {
    let m = check_m(m)?;
    let s = pair_stats(x, y)?;
    Ok((s.z2 - 2.0 * s.xy).exp() / (2.0 * m) * (-s.d2).exp_m1().powi(2))
}

/// `(1/2m)·exp(‖z‖²)·SM²·(1 − exp(−‖z‖²))²`.
pub fn mse_pos_plusplus(x: &[f64], y: &[f64], m: usize) -> Result<f64> {
    let m = check_m(m)?;
    let s = pair_stats(x, y)?;
    Ok((s.z2 + 2.0 * s.xy).exp() / (2.0 * m) * (-s.z2).exp_m1().powi(2))
}

/// `(1/m)·exp(‖z‖²)·SM²·(1 − exp(−‖z‖²))`.
pub fn mse_pos_plus(x: &[f64], y: &[f64], m: usize) -> Result<f64> {
    let m = check_m(m)?;
    let s = pair_stats(x, y)?;
    Ok((s.z2 + 2.0 * s.xy).exp() / m * -(-s.z2).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelErrFamily {
    Trig,
    PosPlusPlus,
}

/// Relative error `√MSE / SM` on the sphere of radius `r`:
/// `(1/√2m)·exp(2r² sin²(θ/2))·(1 − exp(−4r² sin²(θ/2)))` for trig, and
/// the same at `π − θ` for `++`.
///
/// Both families go through `cos²(φ/2)` with `φ = π − θ` for trig and
/// `φ = θ` for `++`, so `rel_err(θ, Trig)` and `rel_err(π − θ, PosPlusPlus)`
/// agree bit for bit.
pub fn rel_err(theta: f64, r: f64, m: usize, family: RelErrFamily) -> Result<f64> {
    let m = check_m(m)?;
    let phi = match family {
        RelErrFamily::Trig => PI - theta,
        RelErrFamily::PosPlusPlus => theta,
    };
    let s2 = (phi / 2.0).cos().powi(2);
    Ok((2.0 * r * r * s2).exp() * -(-4.0 * r * r * s2).exp_m1() / (2.0 * m).sqrt())
}

/// `W(r) = exp(2r²)·(1 − exp(−4r²))`.
pub fn w_scale(r: f64) -> f64 {
    (2.0 * r * r).exp() * -(-4.0 * r * r).exp_m1()
}

/// Moments of the angular λ̂ with `n` sign projections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularMoments {
    pub e_l2: f64,
    pub e_1ml2: f64,
    pub e_l1ml: f64,
}

pub fn lambda_moments_angular(theta: f64, n: usize) -> Result<AngularMoments> {
    let n = check_m(n)?;
    let t = theta / PI;
    Ok(AngularMoments {
        e_l2: t * (t - t / n + 1.0 / n),
        e_1ml2: (1.0 - t) * (1.0 - t + t / n),
        e_l1ml: t * (1.0 - 1.0 / n - t + t / n),
    })
}

/// `e_l2·mse_a + e_1ml2·mse_b − correction`.
pub fn mse_general_hybrid(e_l2: f64, e_1ml2: f64, mse_a: f64, mse_b: f64, correction: f64) -> f64 {
    e_l2 * mse_a + e_1ml2 * mse_b - correction
}

/// Covariance correction of two bases sharing projections:
/// `(2/m)·SM²·(1 − cos(‖x‖² − ‖y‖²))·E[λ̂(1 − λ̂)]`.
pub fn shared_correction(x: &[f64], y: &[f64], m: usize, e_l1ml: f64) -> Result<f64> {
    let m = check_m(m)?;
    check_dim(x.len(), y.len())?;
    let sm2 = (2.0 * dot(x, y)).exp();
    Ok(2.0 / m * sm2 * (1.0 - (dot(x, x) - dot(y, y)).cos()) * e_l1ml)
}

/// MSE of the angular hybrid (λ̂ weights `++`, 1 − λ̂ weights trig).
pub fn mse_angular_hybrid(x: &[f64], y: &[f64], m: usize, n: usize, shared: bool) -> Result<f64> {
    let mom = lambda_moments_angular(theta_between(x, y)?, n)?;
    let correction = if shared { shared_correction(x, y, m, mom.e_l1ml)? } else { 0.0 };
    Ok(mse_general_hybrid(mom.e_l2, mom.e_1ml2, mse_pos_plusplus(x, y, m)?, mse_trig(x, y, m)?, correction))
}

/// `(cos²(θ/2), sin²(θ/2))`, each exactly zero at its endpoint and
/// accurate near it.
fn half_angle(theta: f64) -> (f64, f64) {
    (((PI - theta) / 2.0).sin().powi(2), (theta / 2.0).sin().powi(2))
}

/// Same-length form of [`mse_angular_hybrid`]; independent of sharing.
pub fn mse_angular_hybrid_same_length(theta: f64, r: f64, m: usize, n: usize) -> Result<f64> {
    let mom = lambda_moments_angular(theta, n)?;
    let mf = check_m(m)?;
    let (c2, s2) = half_angle(theta);
    let r2 = r * r;
    let pp = (8.0 * r2 * c2 - 2.0 * r2).exp() * (-4.0 * r2 * c2).exp_m1().powi(2);
    let tr = (2.0 * r2).exp() * (-4.0 * r2 * s2).exp_m1().powi(2);
    Ok((mom.e_l2 * pp + mom.e_1ml2 * tr) / (2.0 * mf))
}

/// `a_r(θ) = (θ/π)(θ/π − θ/(nπ) + 1/n)·exp(2r² cos θ)·(1 − exp(−4r² cos²(θ/2)))²`.
pub fn a_r(theta: f64, r: f64, n: usize) -> Result<f64> {
    let mom = lambda_moments_angular(theta, n)?;
    let (c2, _) = half_angle(theta);
    Ok(mom.e_l2 * (2.0 * r * r * theta.cos()).exp() * (-4.0 * r * r * c2).exp_m1().powi(2))
}

/// Relative error of the angular hybrid for same-length inputs:
/// `exp(r²)/√(2m) · √(a_r(θ) + a_r(π − θ))`.
pub fn rel_err_angular_hybrid(theta: f64, r: f64, m: usize, n: usize) -> Result<f64> {
    let mf = check_m(m)?;
    let h = a_r(theta, r, n)? + a_r(PI - theta, r, n)?;
    Ok((r * r).exp() / (2.0 * mf).sqrt() * h.sqrt())
}

/// Upper bound on the max relative error of the angular hybrid on the sphere
/// of radius `r ≥ 1`:
/// `(1/r)·√(1/2m)·W(r)·√(1/π − 1/(nπ) + 1/(n√π))`.
pub fn max_rel_error_bound(r: f64, m: usize, n: usize) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(HrfError::OutOfDomain(format!("bound holds only for r >= 1, got {r}")));
    }
    let mf = check_m(m)?;
    let nf = check_m(n)?;
    let tail = 1.0 / PI - 1.0 / (nf * PI) + 1.0 / (nf * PI.sqrt());
    Ok(w_scale(r) / (r * (2.0 * mf).sqrt()) * tail.sqrt())
}

/// Moments of the normalized bipolar Gaussian λ̂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMoments {
    pub e_l2: f64,
    pub e_1ml2: f64,
}

/// `E[λ̂²] = (1/ρ²)(1 − e^{−σ²‖Δ‖²/2})² + (1/(2ρ²n))(1 − e^{−σ²‖Δ‖²})²` and
/// `E[(1 − λ̂)²] = (1/ρ²)((1 − ρ) − e^{−σ²‖Δ‖²/2})² + (same second term)`.
pub fn lambda_moments_gaussian(delta_norm: f64, sigma: f64, rho: f64, n: usize) -> Result<GaussianMoments> {
    let nf = check_m(n)?;
    if !(sigma > 0.0) || !(rho > 0.0 && rho <= 1.0) {
        return Err(HrfError::OutOfDomain(format!("need σ > 0 and ρ in (0, 1] (σ={sigma}, ρ={rho})")));
    }
    let s = sigma * sigma * delta_norm * delta_norm;
    let noise = (-s).exp_m1().powi(2) / (2.0 * rho * rho * nf);
    Ok(GaussianMoments {
        e_l2: (-s / 2.0).exp_m1().powi(2) / (rho * rho) + noise,
        e_1ml2: ((1.0 - rho) - (-s / 2.0).exp()).powi(2) / (rho * rho) + noise,
    })
}

/// MSE of the normalized bipolar Gaussian hybrid (λ̂ weights `++`).
pub fn mse_gaussian_hybrid(x: &[f64], y: &[f64], m: usize, n: usize, sigma: f64, rho: f64) -> Result<f64> {
    let s = pair_stats(x, y)?;
    let mom = lambda_moments_gaussian(s.d2.sqrt(), sigma, rho, n)?;
    Ok(mse_general_hybrid(mom.e_l2, mom.e_1ml2, mse_pos_plusplus(x, y, m)?, mse_trig(x, y, m)?, 0.0))
}

/// Shape of a hybrid estimator for cost accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopsQuery {
    pub d: usize,
    pub m: usize,
    pub n: usize,
    /// Sub-map counts `t_1, …, t_{p+1}` of the bases.
    pub t: Vec<usize>,
    /// Sub-map counts `l_1, …, l_p` of the λ-coefficients.
    pub l: Vec<usize>,
    /// Distinct projection ensembles among the bases (fewer than `p + 1`
    /// when projections are shared).
    pub base_ensembles: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlopsEstimate {
    /// Multiply-adds to build one hybrid feature vector.
    pub hybrid_cost: u64,
    /// `m·n·d`: an `mn`-dimensional conventional map.
    pub regular_cost: u64,
    pub ratio: f64,
    /// Length of the hybrid feature vector.
    pub feature_dim: u64,
    /// `(Σ t_k)·m·d + (nd + md + mn)·Σ_k Σ_r t_k l_r` read as an exact count.
    pub big_o_terms: u64,
}

/// Multiply-add model of building a linearized hybrid feature vector.
///
/// One scalar multiplication counts as one operation whether real or
/// complex; transcendental evaluations are not counted. The terms are: base
/// projections (`m·d` per distinct ensemble), `‖u‖²` (`d`), λ projections
/// (`n·d` per non-constant λ), the two outer-product blocks
/// (`Σ_k l_k·n·m·(t_k + t_{p+1})`), scaling of the plain base blocks
/// (`m·Σ t_k`) and of the λ maps (`2n·Σ l_k`). Per-family prefactors of
/// order `m` are left out.
pub fn flops_model(q: &FlopsQuery) -> Result<FlopsEstimate> {
    if q.d == 0 || q.m == 0 || q.n == 0 || q.t.is_empty() || q.base_ensembles == 0 {
        return Err(HrfError::InvalidArgument("flops model needs positive counts".into()));
    }
    if q.t.len() != q.l.len() + 1 {
        return Err(HrfError::InvalidArgument("need |t| = |l| + 1".into()));
    }
    let (d, m, n) = (q.d as u64, q.m as u64, q.n as u64);
    let t_last = *q.t.last().unwrap() as u64;
    let t_sum: u64 = q.t.iter().map(|&t| t as u64).sum();
    let l_sum: u64 = q.l.iter().map(|&l| l as u64).sum();
    let lambda_proj: u64 = q.l.iter().filter(|&&l| l > 0).count() as u64 * n * d;
    let outer: u64 = q.t.iter().zip(&q.l).map(|(&t, &l)| l as u64 * n * m * (t as u64 + t_last)).sum();
    let hybrid = q.base_ensembles as u64 * m * d + d + lambda_proj + outer + m * t_sum + 2 * n * l_sum;
    let regular = m * n * d;
    let feature_dim: u64 = q.t.iter().zip(&q.l).map(|(&t, &l)| t as u64 * m * (1 + l as u64 * n) + l as u64 * n * t_last * m).sum::<u64>()
        + t_last * m;
    let big_o = t_sum * m * d + (n * d + m * d + m * n) * t_sum * l_sum;
    Ok(FlopsEstimate {
        hybrid_cost: hybrid,
        regular_cost: regular,
        ratio: hybrid as f64 / regular as f64,
        feature_dim,
        big_o_terms: big_o,
    })
}
