//! Random feature maps for the softmax kernel `SM(x, y) = exp(x·y)` and for
//! the λ-coefficients that mix estimators.
//!
//! Every estimate in the crate is a (bilinear, unconjugated) dot product of a
//! query-side and a key-side [`FeatureVector`]. Maps that need an imaginary
//! prefactor to turn a product into a subtraction return complex vectors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, HrfError, Result};
use crate::rng::{dot, ProjectionEnsemble};

/// Which argument of the kernel a feature vector is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Query,
    Key,
}

/// Scalar work performed while building features.
///
/// One multiplication (or fused multiply-add) of two scalars counts as one
/// `mul_add`, whether the operands are real or complex. Evaluations of
/// `exp`, `sin`, `cos` and `sqrt` are tallied separately.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCount {
    pub mul_add: u64,
    pub transcendental: u64,
}

impl OpCount {
    #[inline]
    pub(crate) fn mac(&mut self, n: usize) {
        self.mul_add += n as u64;
    }

    #[inline]
    pub(crate) fn tr(&mut self, n: usize) {
        self.transcendental += n as u64;
    }
}

/// Coordinates of one feature map evaluated at one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "coords", rename_all = "lowercase")]
pub enum FeatureVector {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        match self {
            FeatureVector::Real(v) => v.len(),
            FeatureVector::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, FeatureVector::Complex(_))
    }

    pub fn get(&self, i: usize) -> Complex64 {
        match self {
            FeatureVector::Real(v) => Complex64::new(v[i], 0.0),
            FeatureVector::Complex(v) => v[i],
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            FeatureVector::Real(v) => v.iter().all(|x| x.is_finite()),
            FeatureVector::Complex(v) => v.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
        }
    }

    pub fn into_complex(self) -> Vec<Complex64> {
        match self {
            FeatureVector::Real(v) => v.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
            FeatureVector::Complex(v) => v,
        }
    }

    /// Bilinear product `Σ_i a_i b_i` (no conjugation).
    pub fn dot(&self, other: &FeatureVector) -> Result<Complex64> {
        check_dim(self.len(), other.len())?;
        Ok(match (self, other) {
            (FeatureVector::Real(a), FeatureVector::Real(b)) => Complex64::new(dot(a, b), 0.0),
            (FeatureVector::Real(a), FeatureVector::Complex(b))
            | (FeatureVector::Complex(b), FeatureVector::Real(a)) => {
                a.iter().zip(b).map(|(x, z)| z * x).sum()
            }
            (FeatureVector::Complex(a), FeatureVector::Complex(b)) => {
                a.iter().zip(b).map(|(x, y)| x * y).sum()
            }
        })
    }
}

/// Invertible diagonal matrix `A = diag(α_k + β_k i)` parameterising a
/// complex exponential feature map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagMatrix {
    entries: Vec<Complex64>,
}

impl DiagMatrix {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(HrfError::InvalidArgument("empty diagonal".into()));
        }
        if let Some(index) = entries.iter().position(|z| z.re == 0.0 && z.im == 0.0) {
            return Err(HrfError::SingularMatrix { index });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(HrfError::InvalidArgument("non-finite diagonal entry".into()));
        }
        Ok(Self { entries })
    }

    pub fn real(entries: &[f64]) -> Result<Self> {
        Self::new(entries.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn identity(d: usize) -> Self {
        Self { entries: vec![Complex64::new(1.0, 0.0); d] }
    }

    /// `i·I_d`, which turns the complex exponential map into the
    /// trigonometric one.
    pub fn imaginary_identity(d: usize) -> Self {
        Self { entries: vec![Complex64::new(0.0, 1.0); d] }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }

    /// `A u` (query side) or `(Aᵀ)⁻¹ u = A⁻¹ u` (key side).
    pub fn apply(&self, u: &[f64], side: Side) -> Result<Vec<Complex64>> {
        check_dim(self.dim(), u.len())?;
        Ok(match side {
            Side::Query => self.entries.iter().zip(u).map(|(a, x)| a * x).collect(),
            Side::Key => self.entries.iter().zip(u).map(|(a, x)| x / a).collect(),
        })
    }
}

/// Parameters of a Gaussian λ-coefficient.
///
/// The normalized bipolar form estimates
/// `λ(x, y) = (1 − exp(−σ²‖x − y‖²/2)) / ρ` with `ρ = 1 − exp(−2σ²r²)`, so that
/// `λ = 0` at `θ = 0` and `λ = 1` at `θ = π` for inputs of length `r`.
/// The general form estimates `λ(x, y) = exp(−‖x + M y‖² / (2c²))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianLambdaParams {
    pub sigma: f64,
    pub rho: f64,
    pub r: f64,
    pub n: usize,
    pub general: Option<GeneralGaussianForm>,
}

/// `M` (row-major, `d × d`) and scale `c` of the general Gaussian λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralGaussianForm {
    pub matrix: Vec<f64>,
    pub c: f64,
}

impl GaussianLambdaParams {
    pub fn normalized(sigma: f64, r: f64, n: usize) -> Result<Self> {
        if !(sigma > 0.0) || !(r > 0.0) || n == 0 {
            return Err(HrfError::InvalidArgument(format!(
                "gaussian lambda needs sigma > 0, r > 0, n >= 1 (sigma={sigma}, r={r}, n={n})"
            )));
        }
        let rho = -(-2.0 * sigma * sigma * r * r).exp_m1();
        Self { sigma, rho, r, n, general: None }.validated()
    }

    pub fn general(matrix: Vec<f64>, c: f64, n: usize) -> Result<Self> {
        if !(c > 0.0) || n == 0 {
            return Err(HrfError::InvalidArgument("general gaussian lambda needs c > 0, n >= 1".into()));
        }
        let d = (matrix.len() as f64).sqrt() as usize;
        if d * d != matrix.len() || d == 0 {
            return Err(HrfError::InvalidArgument("M must be a non-empty square matrix".into()));
        }
        Ok(Self { sigma: 1.0 / c, rho: 1.0, r: 1.0, n, general: Some(GeneralGaussianForm { matrix, c }) })
    }

    fn validated(self) -> Result<Self> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(HrfError::InvalidArgument(format!("rho must lie in (0, 1], got {}", self.rho)));
        }
        Ok(self)
    }

    /// Additive offset `a` of the λ estimator.
    pub fn offset(&self) -> f64 {
        if self.general.is_some() {
            0.0
        } else {
            1.0 / self.rho
        }
    }
}

// ---------------------------------------------------------------------------
// Unnormalized sub-maps. A base estimator with t sub-maps φ^1..φ^t of length m
// estimates SM as (1/m) Σ_j φ^j(x)·φ^j(y); a λ estimator with l sub-maps
// ρ^1..ρ^l of length n estimates λ - a as (1/n) Σ_i ρ^i(x)·ρ^i(y).
// ---------------------------------------------------------------------------

pub(crate) type SubMaps = Vec<Vec<Complex64>>;

/// `‖u‖²/2`, shared by every map that carries a length prefactor.
pub(crate) fn half_norm_sq(u: &[f64], ops: &mut OpCount) -> f64 {
    ops.mac(u.len());
    0.5 * dot(u, u)
}

pub(crate) fn projections(u: &[f64], ens: &ProjectionEnsemble, ops: &mut OpCount) -> Result<Vec<f64>> {
    let p = ens.project(u)?;
    ops.mac(ens.len() * ens.dim());
    Ok(p)
}

fn real(v: impl Iterator<Item = f64>) -> Vec<Complex64> {
    v.map(|x| Complex64::new(x, 0.0)).collect()
}

/// `exp(‖u‖²/2)·sin(ω·u)` and `exp(‖u‖²/2)·cos(ω·u)` from precomputed projections.
pub(crate) fn trig_sub_maps(half_norm: f64, proj: &[f64], ops: &mut OpCount) -> SubMaps {
    let scale = half_norm.exp();
    ops.tr(1 + 2 * proj.len());
    ops.mac(2 * proj.len());
    vec![real(proj.iter().map(|w| scale * w.sin())), real(proj.iter().map(|w| scale * w.cos()))]
}

pub(crate) fn pos_plus_sub_maps(half_norm: f64, proj: &[f64], ops: &mut OpCount) -> SubMaps {
    ops.tr(proj.len());
    vec![real(proj.iter().map(|w| (w - half_norm).exp()))]
}

pub(crate) fn pos_plusplus_sub_maps(half_norm: f64, proj: &[f64], ops: &mut OpCount) -> SubMaps {
    // the 1/√2 of each sub-map is folded into the exponent
    let h = half_norm + 0.5 * std::f64::consts::LN_2;
    ops.tr(2 * proj.len());
    vec![real(proj.iter().map(|w| (w - h).exp())), real(proj.iter().map(|w| (-w - h).exp()))]
}

/// `exp(ω·v/s − (v)²·k)` for `v = M u`; shared by the complex exponential
/// base map (`s = 1`, `k = 1/2`) and the cluster Gaussian λ map.
fn complex_exp_rows(
    v: &[Complex64],
    sign: f64,
    inv_scale: f64,
    sq_weight: f64,
    ens: &ProjectionEnsemble,
    ops: &mut OpCount,
) -> Vec<Complex64> {
    ops.mac(v.len());
    let sq: Complex64 = v.iter().map(|z| z * z).sum::<Complex64>() * sq_weight;
    ops.mac(ens.len() * ens.dim());
    ops.tr(ens.len());
    ens.rows()
        .map(|w| {
            let proj: Complex64 = w.iter().zip(v).map(|(wi, z)| z * wi).sum();
            (proj * (sign * inv_scale) - sq).exp()
        })
        .collect()
}

pub(crate) fn cexp_sub_maps(
    u: &[f64],
    a: &DiagMatrix,
    side: Side,
    ens: &ProjectionEnsemble,
    ops: &mut OpCount,
) -> Result<SubMaps> {
    check_dim(ens.dim(), u.len())?;
    let v = a.apply(u, side)?;
    ops.mac(v.len());
    Ok(vec![complex_exp_rows(&v, 1.0, 1.0, 0.5, ens, ops)])
}

/// λ-map of the cluster Gaussian coefficient
/// `exp(−(A x + A⁻¹ y)² / (2τ²))`: `exp(ω·Ax/τ − (Ax)²/τ²)` for queries and
/// `exp(−ω·A⁻¹y/τ − (A⁻¹y)²/τ²)` for keys.
pub(crate) fn cluster_gaussian_sub_maps(
    u: &[f64],
    a: &DiagMatrix,
    tau: f64,
    side: Side,
    ens: &ProjectionEnsemble,
    ops: &mut OpCount,
) -> Result<SubMaps> {
    check_dim(ens.dim(), u.len())?;
    let v = a.apply(u, side)?;
    ops.mac(v.len());
    let sign = match side {
        Side::Query => 1.0,
        Side::Key => -1.0,
    };
    Ok(vec![complex_exp_rows(&v, sign, 1.0 / tau, 1.0 / (tau * tau), ens, ops)])
}

/// `(i/√2)·sgn(τ·u)`, so that `(1/n) Σ ρ(x)ρ(y) = −(1/2n) Σ sgn·sgn`.
pub(crate) fn sign_sub_maps(proj: &[f64]) -> SubMaps {
    let c = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
    vec![proj.iter().map(|&w| if w >= 0.0 { c } else { -c }).collect()]
}

pub(crate) fn gaussian_lambda_sub_maps(
    u: &[f64],
    params: &GaussianLambdaParams,
    side: Side,
    ens: &ProjectionEnsemble,
    ops: &mut OpCount,
) -> Result<SubMaps> {
    check_dim(ens.dim(), u.len())?;
    match &params.general {
        None => {
            if !(params.rho > 0.0) {
                return Err(HrfError::InvalidArgument("rho must be positive".into()));
            }
            let scaled: Vec<f64> = u.iter().map(|x| params.sigma * x).collect();
            ops.mac(u.len());
            let p = projections(&scaled, ens, ops)?;
            let c = Complex64::new(0.0, 1.0 / params.rho.sqrt());
            ops.tr(2 * p.len() + 1);
            ops.mac(2 * p.len());
            Ok(vec![p.iter().map(|w| c * w.sin()).collect(), p.iter().map(|w| c * w.cos()).collect()])
        }
        Some(form) => {
            let d = u.len();
            check_dim(d * d, form.matrix.len())?;
            let arg: Vec<f64> = match side {
                Side::Query => u.iter().map(|x| x / form.c).collect(),
                Side::Key => {
                    ops.mac(d * d);
                    form.matrix.chunks_exact(d).map(|row| -dot(row, u) / form.c).collect()
                }
            };
            ops.mac(d);
            let p = projections(&arg, ens, ops)?;
            ops.tr(2 * p.len());
            Ok(vec![real(p.iter().map(|w| w.sin())), real(p.iter().map(|w| w.cos()))])
        }
    }
}

/// Concatenates sub-maps and applies the `1/√len` normalisation.
fn normalize(maps: SubMaps, len: usize, real_valued: bool) -> FeatureVector {
    let s = 1.0 / (len as f64).sqrt();
    let flat = maps.into_iter().flatten();
    if real_valued {
        FeatureVector::Real(flat.map(|z| z.re * s).collect())
    } else {
        FeatureVector::Complex(flat.map(|z| z * s).collect())
    }
}

/// Trigonometric features:
/// `(1/√m)·exp(‖u‖²/2)·(sin ω_1·u, …, sin ω_m·u, cos ω_1·u, …, cos ω_m·u)`.
pub fn trig_features(u: &[f64], ens: &ProjectionEnsemble) -> Result<FeatureVector> {
    let mut ops = OpCount::default();
    let proj = projections(u, ens, &mut ops)?;
    let maps = trig_sub_maps(half_norm_sq(u, &mut ops), &proj, &mut ops);
    Ok(normalize(maps, ens.len(), true))
}

/// Positive features `(1/√m)·exp(ω_i·u − ‖u‖²/2)`.
pub fn pos_plus_features(u: &[f64], ens: &ProjectionEnsemble) -> Result<FeatureVector> {
    let mut ops = OpCount::default();
    let proj = projections(u, ens, &mut ops)?;
    let maps = pos_plus_sub_maps(half_norm_sq(u, &mut ops), &proj, &mut ops);
    Ok(normalize(maps, ens.len(), true))
}

/// Two-sided positive features
/// `(1/√(2m))·(exp(ω_i·u − ‖u‖²/2))_i ⋆ (exp(−ω_i·u − ‖u‖²/2))_i`.
pub fn pos_plusplus_features(u: &[f64], ens: &ProjectionEnsemble) -> Result<FeatureVector> {
    let mut ops = OpCount::default();
    let proj = projections(u, ens, &mut ops)?;
    let maps = pos_plusplus_sub_maps(half_norm_sq(u, &mut ops), &proj, &mut ops);
    // sub-maps already carry the 1/√2
    Ok(normalize(maps, ens.len(), true))
}

/// Complex exponential features `(1/√m)·exp(ω_i·Mu − (Mu)²/2)` with `M = A`
/// on the query side and `M = A⁻¹` on the key side.
pub fn cexp_features(
    u: &[f64],
    a: &DiagMatrix,
    side: Side,
    ens: &ProjectionEnsemble,
) -> Result<FeatureVector> {
    let maps = cexp_sub_maps(u, a, side, ens, &mut OpCount::default())?;
    Ok(normalize(maps, ens.len(), false))
}

/// Sign features `(1/√(2n))·sgn(τ_i·u)` with `sgn(0) = +1`.
///
/// `1/2 − φ(x)·φ(y)` is an unbiased estimate of `θ_{x,y}/π`.
pub fn sign_features(u: &[f64], ens: &ProjectionEnsemble) -> Result<FeatureVector> {
    let p = ens.project(u)?;
    let s = 1.0 / (2.0 * ens.len() as f64).sqrt();
    Ok(FeatureVector::Real(p.iter().map(|&w| if w >= 0.0 { s } else { -s }).collect()))
}

/// Gaussian λ features.
///
/// Normalized form: `(i/√(nρ))·(sin στ_1·u, cos στ_1·u, …, sin στ_n·u, cos στ_n·u)`,
/// identical on both sides, so `1/ρ + φ(x)·φ(y)` estimates λ.
/// General form: `(1/√n)·(sin τ_j·v, cos τ_j·v)_j` with `v = x/c` on the
/// query side and `v = −M y/c` on the key side, so `φ(x)·φ(y)` estimates λ.
pub fn gaussian_lambda_features(
    u: &[f64],
    params: &GaussianLambdaParams,
    side: Side,
    ens: &ProjectionEnsemble,
) -> Result<FeatureVector> {
    let maps = gaussian_lambda_sub_maps(u, params, side, ens, &mut OpCount::default())?;
    let s = 1.0 / (ens.len() as f64).sqrt();
    let (sin, cos) = (&maps[0], &maps[1]);
    let interleaved = sin.iter().zip(cos).flat_map(|(a, b)| [a * s, b * s]);
    Ok(if params.general.is_some() {
        FeatureVector::Real(interleaved.map(|z| z.re).collect())
    } else {
        FeatureVector::Complex(interleaved.collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{sample_ensemble, EnsembleScheme, Seed};

    fn ens(d: usize, m: usize, seed: u64) -> ProjectionEnsemble {
        sample_ensemble(d, m, EnsembleScheme::Iid, Seed(seed)).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn trig_with_zero_rows() {
        let e = ProjectionEnsemble::from_rows(2, &[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let u = [0.3, -0.4];
        let FeatureVector::Real(f) = trig_features(&u, &e).unwrap() else { panic!() };
        let c = (0.25f64 / 2.0).exp() / 2f64.sqrt();
        assert_eq!(&f[..2], &[0.0, 0.0]);
        assert!(f[2..].iter().all(|&v| close(v, c, 1e-15)));
    }

    #[test]
    fn trig_at_origin() {
        let e = ens(3, 4, 1);
        let FeatureVector::Real(f) = trig_features(&[0.0; 3], &e).unwrap() else { panic!() };
        assert!(f[..4].iter().all(|&v| v == 0.0));
        assert!(f[4..].iter().all(|&v| close(v, 0.5, 1e-15)));
    }

    #[test]
    fn trig_single_zero_row_dot() {
        let e = ProjectionEnsemble::from_rows(2, &[vec![0.0, 0.0]]).unwrap();
        let (x, y) = ([0.5, 1.0], [-1.0, 0.2]);
        let v = trig_features(&x, &e).unwrap().dot(&trig_features(&y, &e).unwrap()).unwrap();
        let expect = ((dot(&x, &x) + dot(&y, &y)) / 2.0).exp();
        assert!(close(v.re, expect, 1e-14));
    }

    #[test]
    fn pos_plus_origin_and_zero_row() {
        let e = ens(3, 5, 2);
        let FeatureVector::Real(f) = pos_plus_features(&[0.0; 3], &e).unwrap() else { panic!() };
        assert!(f.iter().all(|&v| close(v, 1.0 / 5f64.sqrt(), 1e-15)));
        let z = ProjectionEnsemble::from_rows(2, &[vec![0.0, 0.0]]).unwrap();
        let (x, y) = ([0.5, 1.0], [-1.0, 0.2]);
        let v = pos_plus_features(&x, &z).unwrap().dot(&pos_plus_features(&y, &z).unwrap()).unwrap();
        assert!(close(v.re, (-(dot(&x, &x) + dot(&y, &y)) / 2.0).exp(), 1e-14));
    }

    #[test]
    fn positive_maps_are_positive() {
        let e = ens(4, 16, 3);
        let u = [2.0, -1.0, 0.5, 3.0];
        for f in [pos_plus_features(&u, &e).unwrap(), pos_plusplus_features(&u, &e).unwrap()] {
            let FeatureVector::Real(v) = f else { panic!() };
            assert!(v.iter().all(|&c| c > 0.0));
        }
    }

    #[test]
    fn plusplus_origin_and_antipodal() {
        let e = ens(3, 6, 4);
        let FeatureVector::Real(f) = pos_plusplus_features(&[0.0; 3], &e).unwrap() else { panic!() };
        assert_eq!(f.len(), 12);
        assert!(f.iter().all(|&v| close(v, 1.0 / 12f64.sqrt(), 1e-15)));
        let x = [0.7, -0.2, 0.4];
        let y = [-0.7, 0.2, -0.4];
        let v = pos_plusplus_features(&x, &e).unwrap().dot(&pos_plusplus_features(&y, &e).unwrap()).unwrap();
        assert!(close(v.re, (-dot(&x, &x)).exp(), 1e-13));
    }

    #[test]
    fn cexp_reduces_to_trig_and_pos_plus() {
        let e = ens(3, 8, 5);
        let (x, y) = ([0.3, -0.5, 0.9], [0.1, 0.4, -0.6]);
        let ii = DiagMatrix::imaginary_identity(3);
        let c = cexp_features(&x, &ii, Side::Query, &e).unwrap()
            .dot(&cexp_features(&y, &ii, Side::Key, &e).unwrap()).unwrap();
        let t = trig_features(&x, &e).unwrap().dot(&trig_features(&y, &e).unwrap()).unwrap();
        assert!(close(c.re, t.re, 1e-12), "{} vs {}", c.re, t.re);

        let id = DiagMatrix::identity(3);
        let c = cexp_features(&x, &id, Side::Query, &e).unwrap()
            .dot(&cexp_features(&y, &id, Side::Key, &e).unwrap()).unwrap();
        let p = pos_plus_features(&x, &e).unwrap().dot(&pos_plus_features(&y, &e).unwrap()).unwrap();
        assert!(close(c.re, p.re, 1e-12));
        assert!(c.im.abs() < 1e-15);
    }

    #[test]
    fn cexp_zero_variance_at_matched_centers() {
        // A = diag(2): A·1 + A⁻¹·(−4) = 0, so every sample equals exp(−4)
        let a = DiagMatrix::real(&[2.0]).unwrap();
        for seed in 0..5 {
            let e = ens(1, 3, seed);
            let v = cexp_features(&[1.0], &a, Side::Query, &e).unwrap()
                .dot(&cexp_features(&[-4.0], &a, Side::Key, &e).unwrap()).unwrap();
            assert!(close(v.re, (-4.0f64).exp(), 1e-14));
            assert!(close(v.re, 0.018_315_638_888_734_18, 1e-12));
        }
    }

    #[test]
    fn singular_diag_is_rejected() {
        let err = DiagMatrix::real(&[1.0, 0.0]).unwrap_err();
        assert!(matches!(err, HrfError::SingularMatrix { index: 1 }));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let e = ens(3, 2, 6);
        assert!(matches!(trig_features(&[1.0, 2.0], &e), Err(HrfError::DimensionMismatch { .. })));
        assert!(pos_plus_features(&[1.0], &e).is_err());
        assert!(pos_plusplus_features(&[1.0], &e).is_err());
        assert!(sign_features(&[1.0], &e).is_err());
        assert!(cexp_features(&[1.0, 2.0], &DiagMatrix::identity(2), Side::Query, &e).is_err());
    }

    #[test]
    fn sign_features_endpoints() {
        let e = ens(4, 9, 7);
        let x = [0.5, -1.0, 2.0, 0.1];
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        let fx = sign_features(&x, &e).unwrap();
        assert!(close(fx.dot(&fx).unwrap().re, 0.5, 1e-15));
        assert!(close(0.5 - fx.dot(&sign_features(&y, &e).unwrap()).unwrap().re, 1.0, 1e-15));
        // sgn(0) = +1
        let FeatureVector::Real(z) = sign_features(&[0.0; 4], &e).unwrap() else { panic!() };
        assert!(z.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn gaussian_lambda_vanishes_on_equal_inputs() {
        let params = GaussianLambdaParams::normalized(1.0, 1.0, 5).unwrap();
        let e = ens(3, 5, 8);
        let x = [0.6, 0.0, 0.8];
        let f = gaussian_lambda_features(&x, &params, Side::Query, &e).unwrap();
        let g = gaussian_lambda_features(&x, &params, Side::Key, &e).unwrap();
        assert_eq!(f.len(), 10);
        let lambda = params.offset() + f.dot(&g).unwrap().re;
        assert!(lambda.abs() < 1e-14);
    }

    #[test]
    fn gaussian_rho_value() {
        let p = GaussianLambdaParams::normalized(1.0, 1.0, 1).unwrap();
        assert!(close(p.rho, 1.0 - (-2.0f64).exp(), 1e-15));
        assert!(close(p.rho, 0.864_664_716_763_387_3, 1e-14));
        assert!(GaussianLambdaParams::normalized(0.0, 1.0, 1).is_err());
        assert!(GaussianLambdaParams::normalized(1.0, -1.0, 1).is_err());
    }

    #[test]
    fn general_gaussian_lambda_matches_kernel_with_zero_rows() {
        // zero projections make every cos term 1: λ̂ = 1 exactly
        let e = ProjectionEnsemble::from_rows(2, &[vec![0.0, 0.0]]).unwrap();
        let p = GaussianLambdaParams::general(vec![1.0, 0.0, 0.0, 1.0], 2.0, 1).unwrap();
        let f = gaussian_lambda_features(&[0.3, 0.2], &p, Side::Query, &e).unwrap();
        let g = gaussian_lambda_features(&[0.1, 0.9], &p, Side::Key, &e).unwrap();
        assert!(close(f.dot(&g).unwrap().re, 1.0, 1e-15));
    }

    #[test]
    fn overflow_safety_for_moderate_inputs() {
        for seed in 0..200u64 {
            let e = sample_ensemble(128, 4, EnsembleScheme::Iid, Seed(seed)).unwrap();
            let mut u = vec![0.0; 128];
            u[(seed % 128) as usize] = 3.0;
            for f in [
                trig_features(&u, &e).unwrap(),
                pos_plus_features(&u, &e).unwrap(),
                pos_plusplus_features(&u, &e).unwrap(),
                cexp_features(&u, &DiagMatrix::identity(128), Side::Query, &e).unwrap(),
            ] {
                assert!(f.is_finite());
            }
        }
    }
}
