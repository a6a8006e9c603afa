//! Hybrid random feature (HRF) estimators of the softmax kernel.
//!
//! A [`HybridSpec`] mixes `p + 1` base estimators with `p` estimated
//! λ-coefficients:
//!
//! ```text
//! SM̂(x, y) = Σ_k λ̂_k(x, y)·SM̂_k(x, y) + (1 − Σ_k λ̂_k(x, y))·SM̂_{p+1}(x, y)
//! λ̂_k(x, y) = a_k + (1/n_k) Σ_i ρ^{i,k}(x)·ρ^{i,k}(y)
//! ```
//!
//! The same quantity is available either directly ([`sm_hat_hybrid`]) or as
//! the dot product of one linearized feature vector per side
//! ([`hybrid_features`]).

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clustering::{build_a_complex, build_a_real, ClusterModel, DEFAULT_BIG, DEFAULT_SMALL};
use crate::error::{check_dim, HrfError, Result};
use crate::features::{
    cexp_features, cexp_sub_maps, cluster_gaussian_sub_maps, gaussian_lambda_sub_maps, half_norm_sq,
    pos_plus_features, pos_plus_sub_maps, pos_plusplus_features, pos_plusplus_sub_maps, projections,
    sign_sub_maps, trig_features, trig_sub_maps, DiagMatrix, FeatureVector, GaussianLambdaParams, OpCount,
    Side, SubMaps,
};
use crate::rng::{derive_seed, sample_ensemble, EnsembleScheme, ProjectionEnsemble, Seed};

/// Feature map family of a base estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseFamily {
    Trig,
    PosPlus,
    PosPlusPlus,
    ComplexExp(DiagMatrix),
}

impl BaseFamily {
    /// Number of sub-maps `t` the family concatenates.
    pub fn sub_map_count(&self) -> usize {
        match self {
            BaseFamily::Trig | BaseFamily::PosPlusPlus => 2,
            BaseFamily::PosPlus | BaseFamily::ComplexExp(_) => 1,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            BaseFamily::Trig => "trig",
            BaseFamily::PosPlus => "pos_plus",
            BaseFamily::PosPlusPlus => "pos_plusplus",
            BaseFamily::ComplexExp(_) => "cexp",
        }
    }
}

/// One base estimator: a family and the projections it consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseEstimatorSpec {
    pub family: BaseFamily,
    pub ensemble: Arc<ProjectionEnsemble>,
}

impl BaseEstimatorSpec {
    pub fn new(family: BaseFamily, ensemble: Arc<ProjectionEnsemble>) -> Result<Self> {
        if let BaseFamily::ComplexExp(a) = &family {
            check_dim(ensemble.dim(), a.dim())?;
        }
        Ok(Self { family, ensemble })
    }

    pub fn m(&self) -> usize {
        self.ensemble.len()
    }

    pub fn dim(&self) -> usize {
        self.ensemble.dim()
    }

    /// Normalized feature vector of this base map.
    pub fn features(&self, u: &[f64], side: Side) -> Result<FeatureVector> {
        match &self.family {
            BaseFamily::Trig => trig_features(u, &self.ensemble),
            BaseFamily::PosPlus => pos_plus_features(u, &self.ensemble),
            BaseFamily::PosPlusPlus => pos_plusplus_features(u, &self.ensemble),
            BaseFamily::ComplexExp(a) => cexp_features(u, a, side, &self.ensemble),
        }
    }
}

/// Cluster pair selected by a zero-one λ-coefficient. A point belongs to the
/// cluster of its nearest center (lowest index on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroOnePair {
    pub centers_q: Arc<Vec<Vec<f64>>>,
    pub centers_k: Arc<Vec<Vec<f64>>>,
    pub pair: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaKind {
    /// `θ/π` from sign projections.
    Angular,
    Gaussian(GaussianLambdaParams),
    ZeroOne(ZeroOnePair),
    /// `exp(−(A x + A⁻¹ y)² / (2τ²))`.
    ClusterGaussian { a: DiagMatrix, tau: f64 },
    /// No random part: `λ̂ = a`.
    Constant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSpec {
    pub offset: f64,
    pub kind: LambdaKind,
    pub ensemble: Option<Arc<ProjectionEnsemble>>,
}

impl LambdaSpec {
    pub fn angular(ensemble: Arc<ProjectionEnsemble>) -> Self {
        Self { offset: 0.5, kind: LambdaKind::Angular, ensemble: Some(ensemble) }
    }

    pub fn gaussian(params: GaussianLambdaParams, ensemble: Arc<ProjectionEnsemble>) -> Result<Self> {
        check_dim(params.n, ensemble.len())?;
        Ok(Self { offset: params.offset(), kind: LambdaKind::Gaussian(params), ensemble: Some(ensemble) })
    }

    pub fn zero_one(pair: ZeroOnePair) -> Result<Self> {
        let (i, j) = pair.pair;
        if i >= pair.centers_q.len() || j >= pair.centers_k.len() {
            return Err(HrfError::InvalidArgument(format!("cluster pair ({i}, {j}) out of range")));
        }
        Ok(Self { offset: 0.0, kind: LambdaKind::ZeroOne(pair), ensemble: None })
    }

    pub fn cluster_gaussian(a: DiagMatrix, tau: f64, ensemble: Arc<ProjectionEnsemble>) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(HrfError::InvalidArgument(format!("tau must be positive, got {tau}")));
        }
        check_dim(ensemble.dim(), a.dim())?;
        Ok(Self { offset: 0.0, kind: LambdaKind::ClusterGaussian { a, tau }, ensemble: Some(ensemble) })
    }

    pub fn constant(a: f64) -> Self {
        Self { offset: a, kind: LambdaKind::Constant, ensemble: None }
    }

    /// Number of λ sub-maps `l`.
    pub fn sub_map_count(&self) -> usize {
        match self.kind {
            LambdaKind::Constant => 0,
            LambdaKind::Gaussian(_) => 2,
            _ => 1,
        }
    }

    /// Features per sub-map `n`.
    pub fn n(&self) -> usize {
        match (&self.kind, &self.ensemble) {
            (LambdaKind::Constant, _) => 0,
            (LambdaKind::ZeroOne(_), _) => 1,
            (_, Some(e)) => e.len(),
            (_, None) => 0,
        }
    }
}

/// Whether two bases draw on one projection ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sharing {
    #[default]
    Independent,
    Shared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridSpec {
    bases: Vec<BaseEstimatorSpec>,
    lambdas: Vec<LambdaSpec>,
    sharing: Sharing,
}

/// Result of one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    /// Real part of the estimate.
    pub value: f64,
    /// `|Im|` of the estimate; zero in expectation.
    pub imag_residual: f64,
    pub feature_dim: usize,
    /// Real parts of λ̂ that fell outside `[0, 1]`. They are never clipped.
    pub lambda_out_of_range: u32,
}

/// Per-side evaluation of every sub-map of a [`HybridSpec`].
#[derive(Debug, Clone)]
pub struct PreparedSide {
    side: Side,
    bases: Vec<SubMaps>,
    lambdas: Vec<SubMaps>,
}

struct Ctx<'a> {
    u: &'a [f64],
    side: Side,
    half: Option<f64>,
    cache: Vec<(*const ProjectionEnsemble, Vec<f64>)>,
    ops: OpCount,
}

impl<'a> Ctx<'a> {
    fn new(u: &'a [f64], side: Side) -> Self {
        Self { u, side, half: None, cache: Vec::new(), ops: OpCount::default() }
    }

    fn half(&mut self) -> f64 {
        match self.half {
            Some(h) => h,
            None => {
                let h = half_norm_sq(self.u, &mut self.ops);
                self.half = Some(h);
                h
            }
        }
    }

    /// Index of the cached projections of `u` onto `ens`.
    fn proj(&mut self, ens: &Arc<ProjectionEnsemble>) -> Result<usize> {
        let key = Arc::as_ptr(ens);
        if let Some(i) = self.cache.iter().position(|(p, _)| *p == key) {
            return Ok(i);
        }
        let p = projections(self.u, ens, &mut self.ops)?;
        self.cache.push((key, p));
        Ok(self.cache.len() - 1)
    }

    fn base(&mut self, b: &BaseEstimatorSpec) -> Result<SubMaps> {
        if let BaseFamily::ComplexExp(a) = &b.family {
            return cexp_sub_maps(self.u, a, self.side, &b.ensemble, &mut self.ops);
        }
        let h = self.half();
        let i = self.proj(&b.ensemble)?;
        let p = &self.cache[i].1;
        Ok(match b.family {
            BaseFamily::Trig => trig_sub_maps(h, p, &mut self.ops),
            BaseFamily::PosPlus => pos_plus_sub_maps(h, p, &mut self.ops),
            BaseFamily::PosPlusPlus => pos_plusplus_sub_maps(h, p, &mut self.ops),
            BaseFamily::ComplexExp(_) => unreachable!(),
        })
    }

    fn lambda(&mut self, l: &LambdaSpec) -> Result<SubMaps> {
        let ens = || l.ensemble.as_ref().ok_or_else(|| HrfError::InvalidArgument("lambda needs an ensemble".into()));
        match &l.kind {
            LambdaKind::Constant => Ok(Vec::new()),
            LambdaKind::Angular => {
                let i = self.proj(ens()?)?;
                Ok(sign_sub_maps(&self.cache[i].1))
            }
            LambdaKind::Gaussian(params) => gaussian_lambda_sub_maps(self.u, params, self.side, ens()?, &mut self.ops),
            LambdaKind::ClusterGaussian { a, tau } => {
                cluster_gaussian_sub_maps(self.u, a, *tau, self.side, ens()?, &mut self.ops)
            }
            LambdaKind::ZeroOne(z) => {
                let (centers, target) = match self.side {
                    Side::Query => (&z.centers_q, z.pair.0),
                    Side::Key => (&z.centers_k, z.pair.1),
                };
                let c = nearest_center(self.u, centers)?;
                self.ops.mac(centers.len() * self.u.len());
                Ok(vec![vec![Complex64::new(if c == target { 1.0 } else { 0.0 }, 0.0)]])
            }
        }
    }
}

/// Index of the nearest center (squared Euclidean distance, lowest index on
/// ties).
pub fn nearest_center(u: &[f64], centers: &[Vec<f64>]) -> Result<usize> {
    let mut best = (f64::INFINITY, usize::MAX);
    for (i, c) in centers.iter().enumerate() {
        check_dim(c.len(), u.len())?;
        let d: f64 = c.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.0 {
            best = (d, i);
        }
    }
    if best.1 == usize::MAX {
        return Err(HrfError::InvalidArgument("no finite center distance".into()));
    }
    Ok(best.1)
}

fn pair_sum(a: &SubMaps, b: &SubMaps) -> Complex64 {
    a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q)).sum()
}

fn csqrt(w: f64) -> Complex64 {
    if w >= 0.0 {
        Complex64::new(w.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-w).sqrt())
    }
}

impl HybridSpec {
    /// Validates a full spec: `p + 1` bases, `p` λ-coefficients.
    ///
    /// `Shared` requires exactly two bases on one ensemble with identical
    /// rows; `Independent` forbids bases sharing an ensemble. λ ensembles must
    /// always be disjoint from base ensembles.
    pub fn new(bases: Vec<BaseEstimatorSpec>, lambdas: Vec<LambdaSpec>, sharing: Sharing) -> Result<Self> {
        if bases.len() != lambdas.len() + 1 {
            return Err(HrfError::InvalidArgument(format!(
                "{} bases need {} lambdas, got {}",
                bases.len(),
                bases.len().saturating_sub(1),
                lambdas.len()
            )));
        }
        let d = bases[0].dim();
        for b in &bases {
            check_dim(d, b.dim())?;
        }
        for l in &lambdas {
            if let Some(e) = &l.ensemble {
                check_dim(d, e.dim())?;
                if bases.iter().any(|b| Arc::ptr_eq(&b.ensemble, e)) {
                    return Err(HrfError::InvalidArgument("lambda ensemble reused by a base estimator".into()));
                }
            }
            if let LambdaKind::ZeroOne(z) = &l.kind {
                for c in z.centers_q.iter().chain(z.centers_k.iter()) {
                    check_dim(d, c.len())?;
                }
            }
            if l.sub_map_count() > 0 && l.n() == 0 {
                return Err(HrfError::InvalidArgument("lambda needs an ensemble".into()));
            }
        }
        let shares = |i: usize, j: usize| Arc::ptr_eq(&bases[i].ensemble, &bases[j].ensemble);
        match sharing {
            Sharing::Shared => {
                if bases.len() != 2 || bases[0].m() != bases[1].m() {
                    return Err(HrfError::InvalidArgument(
                        "shared projections need exactly two bases of equal m".into(),
                    ));
                }
                if !shares(0, 1) && bases[0].ensemble != bases[1].ensemble {
                    return Err(HrfError::InvalidArgument("shared bases must use one ensemble".into()));
                }
            }
            Sharing::Independent => {
                for i in 0..bases.len() {
                    for j in (i + 1)..bases.len() {
                        if shares(i, j) {
                            return Err(HrfError::InvalidArgument(format!(
                                "bases {i} and {j} share an ensemble; use Sharing::Shared"
                            )));
                        }
                    }
                }
            }
        }
        Ok(Self { bases, lambdas, sharing })
    }

    /// Degenerate spec with a single base and no λ.
    pub fn single(base: BaseEstimatorSpec) -> Self {
        Self { bases: vec![base], lambdas: Vec::new(), sharing: Sharing::Independent }
    }

    pub fn bases(&self) -> &[BaseEstimatorSpec] {
        &self.bases
    }

    pub fn lambdas(&self) -> &[LambdaSpec] {
        &self.lambdas
    }

    pub fn sharing(&self) -> Sharing {
        self.sharing
    }

    pub fn p(&self) -> usize {
        self.lambdas.len()
    }

    pub fn dim(&self) -> usize {
        self.bases[0].dim()
    }

    /// Length of the linearized feature vector.
    pub fn feature_dim(&self) -> usize {
        let last = self.bases.last().expect("at least one base");
        let tm_last = last.family.sub_map_count() * last.m();
        let mut total = tm_last;
        for (b, l) in self.bases.iter().zip(&self.lambdas) {
            let tm = b.family.sub_map_count() * b.m();
            let ln = l.sub_map_count() * l.n();
            total += tm + ln * tm + ln * tm_last;
        }
        total
    }

    /// Residual weight `1 − Σ a_k` of the last base in the linearization.
    pub fn residual_offset(&self) -> f64 {
        1.0 - self.lambdas.iter().map(|l| l.offset).sum::<f64>()
    }

    pub fn prepare(&self, u: &[f64], side: Side) -> Result<PreparedSide> {
        self.prepare_counted(u, side).map(|(p, _)| p)
    }

    /// Evaluates every sub-map at `u`, also returning the scalar work done.
    pub fn prepare_counted(&self, u: &[f64], side: Side) -> Result<(PreparedSide, OpCount)> {
        check_dim(self.dim(), u.len())?;
        let mut ctx = Ctx::new(u, side);
        let bases = self.bases.iter().map(|b| ctx.base(b)).collect::<Result<Vec<_>>>()?;
        let lambdas = self.lambdas.iter().map(|l| ctx.lambda(l)).collect::<Result<Vec<_>>>()?;
        Ok((PreparedSide { side, bases, lambdas }, ctx.ops))
    }

    fn check_pair(&self, q: &PreparedSide, k: &PreparedSide) -> Result<()> {
        if q.side != Side::Query || k.side != Side::Key {
            return Err(HrfError::InvalidArgument("expected a query side and a key side".into()));
        }
        check_dim(self.bases.len(), q.bases.len())?;
        check_dim(self.bases.len(), k.bases.len())
    }

    /// `λ̂_1, …, λ̂_p` followed by the residual weight `1 − Σ λ̂_k`.
    pub fn weights(&self, q: &PreparedSide, k: &PreparedSide) -> Result<Vec<Complex64>> {
        self.check_pair(q, k)?;
        let mut w: Vec<Complex64> = self
            .lambdas
            .iter()
            .zip(q.lambdas.iter().zip(&k.lambdas))
            .map(|(l, (a, b))| {
                let n = l.n().max(1) as f64;
                pair_sum(a, b) / n + l.offset
            })
            .collect();
        let rest = Complex64::new(1.0, 0.0) - w.iter().sum::<Complex64>();
        w.push(rest);
        Ok(w)
    }

    /// Direct evaluation from prepared sides. Bases with an exactly zero
    /// weight are skipped.
    pub fn combine(&self, q: &PreparedSide, k: &PreparedSide) -> Result<EstimateRecord> {
        let w = self.weights(q, k)?;
        let mut total = Complex64::new(0.0, 0.0);
        for (i, (b, wi)) in self.bases.iter().zip(&w).enumerate() {
            if wi.re == 0.0 && wi.im == 0.0 {
                continue;
            }
            let sm = pair_sum(&q.bases[i], &k.bases[i]) / b.m() as f64;
            total += wi * sm;
        }
        let out = w[..self.p()].iter().filter(|z| !(0.0..=1.0).contains(&z.re)).count() as u32;
        Ok(EstimateRecord {
            value: total.re,
            imag_residual: total.im.abs(),
            feature_dim: self.feature_dim(),
            lambda_out_of_range: out,
        })
    }

    pub fn estimate(&self, x: &[f64], y: &[f64]) -> Result<EstimateRecord> {
        self.combine(&self.prepare(x, Side::Query)?, &self.prepare(y, Side::Key)?)
    }

    /// Linearized feature vector `Ψ¹ ⋆ Ψ^{ρ,1} ⋆ Ψ² ⋆ Ψ^{ρ,2}`.
    pub fn features(&self, u: &[f64], side: Side) -> Result<FeatureVector> {
        self.features_counted(u, side).map(|(f, _)| f)
    }

    /// [`HybridSpec::features`] together with the scalar work performed,
    /// sub-map evaluation included.
    ///
    /// ```text
    /// Ψ¹      = ⋆_k √(a_k/m_k)·(φ^{1,k} ⋆ … ⋆ φ^{t_k,k})
    /// Ψ^{ρ,1} = ⋆_k ⋆_{i,j} (1/√(m_k n_k))·ρ^{i,k} ⊗ φ^{j,k}
    /// Ψ²      = √((1 − Σa_k)/m_{p+1})·(φ^{1,p+1} ⋆ …)
    /// Ψ^{ρ,2} = ⋆_k ⋆_{i,j} (i/√(m_{p+1} n_k))·ρ^{i,k} ⊗ φ^{j,p+1}
    /// ```
    ///
    /// Square roots of negative weights are taken on the imaginary axis, so
    /// both sides carry the same factor and the product restores the sign.
    pub fn features_counted(&self, u: &[f64], side: Side) -> Result<(FeatureVector, OpCount)> {
        let (prep, mut ops) = self.prepare_counted(u, side)?;
        let mut out: Vec<Complex64> = Vec::with_capacity(self.feature_dim());
        let p = self.p();
        let last = &self.bases[p];
        let m_last = last.m() as f64;

        let push_scaled = |out: &mut Vec<Complex64>, maps: &SubMaps, s: Complex64, ops: &mut OpCount| {
            for map in maps {
                ops.mac(map.len());
                out.extend(map.iter().map(|z| z * s));
            }
        };
        let outer = |out: &mut Vec<Complex64>, rho: &SubMaps, s: Complex64, phi: &SubMaps, ops: &mut OpCount| {
            for r in rho {
                ops.mac(r.len());
                let scaled: Vec<Complex64> = r.iter().map(|z| z * s).collect();
                for f in phi {
                    for a in &scaled {
                        ops.mac(f.len());
                        out.extend(f.iter().map(|b| a * b));
                    }
                }
            }
        };

        for (k, l) in self.lambdas.iter().enumerate() {
            let s = csqrt(l.offset / self.bases[k].m() as f64);
            push_scaled(&mut out, &prep.bases[k], s, &mut ops);
        }
        for (k, l) in self.lambdas.iter().enumerate() {
            if l.sub_map_count() == 0 {
                continue;
            }
            let s = Complex64::new(1.0 / ((self.bases[k].m() * l.n()) as f64).sqrt(), 0.0);
            outer(&mut out, &prep.lambdas[k], s, &prep.bases[k], &mut ops);
        }
        push_scaled(&mut out, &prep.bases[p], csqrt(self.residual_offset() / m_last), &mut ops);
        for (k, l) in self.lambdas.iter().enumerate() {
            if l.sub_map_count() == 0 {
                continue;
            }
            let s = Complex64::new(0.0, 1.0 / (m_last * l.n() as f64).sqrt());
            outer(&mut out, &prep.lambdas[k], s, &prep.bases[p], &mut ops);
        }
        debug_assert_eq!(out.len(), self.feature_dim());
        Ok((FeatureVector::Complex(out), ops))
    }
}

/// `φ(x)·φ(y)` for one base estimator.
pub fn sm_hat_base(x: &[f64], y: &[f64], spec: &BaseEstimatorSpec) -> Result<EstimateRecord> {
    let fx = spec.features(x, Side::Query)?;
    let fy = spec.features(y, Side::Key)?;
    let v = fx.dot(&fy)?;
    Ok(EstimateRecord { value: v.re, imag_residual: v.im.abs(), feature_dim: fx.len(), lambda_out_of_range: 0 })
}

/// Real part of `λ̂(x, y) = a + (1/n) Σ_i ρ^i(x)·ρ^i(y)`.
pub fn lambda_hat(x: &[f64], y: &[f64], spec: &LambdaSpec) -> Result<f64> {
    lambda_hat_complex(x, y, spec).map(|z| z.re)
}

pub fn lambda_hat_complex(x: &[f64], y: &[f64], spec: &LambdaSpec) -> Result<Complex64> {
    check_dim(x.len(), y.len())?;
    let a = Ctx::new(x, Side::Query).lambda(spec)?;
    let b = Ctx::new(y, Side::Key).lambda(spec)?;
    Ok(pair_sum(&a, &b) / spec.n().max(1) as f64 + spec.offset)
}

pub fn sm_hat_hybrid(x: &[f64], y: &[f64], spec: &HybridSpec) -> Result<EstimateRecord> {
    spec.estimate(x, y)
}

pub fn hybrid_features(u: &[f64], side: Side, spec: &HybridSpec) -> Result<FeatureVector> {
    spec.features(u, side)
}

fn ensemble(d: usize, m: usize, scheme: EnsembleScheme, seed: Seed, label: &str) -> Result<Arc<ProjectionEnsemble>> {
    Ok(Arc::new(sample_ensemble(d, m, scheme, derive_seed(seed, label))?))
}

fn bipolar_bases(
    d: usize,
    m: usize,
    sharing: Sharing,
    scheme: EnsembleScheme,
    seed: Seed,
) -> Result<Vec<BaseEstimatorSpec>> {
    let (pp, tr) = match sharing {
        Sharing::Shared => {
            let e = ensemble(d, m, scheme, seed, "base-shared")?;
            (e.clone(), e)
        }
        Sharing::Independent => {
            (ensemble(d, m, scheme, seed, "base-plusplus")?, ensemble(d, m, scheme, seed, "base-trig")?)
        }
    };
    Ok(vec![
        BaseEstimatorSpec::new(BaseFamily::PosPlusPlus, pp)?,
        BaseEstimatorSpec::new(BaseFamily::Trig, tr)?,
    ])
}

/// Angular hybrid: `λ̂ = θ̂/π` from `n` sign projections mixes `SM̂⁺⁺_m`
/// (weight λ̂) and `SM̂^trig_m` (weight 1 − λ̂).
pub fn make_angular_hybrid(d: usize, m: usize, n: usize, sharing: Sharing, seed: Seed) -> Result<HybridSpec> {
    make_angular_hybrid_with(d, m, n, sharing, EnsembleScheme::Iid, seed)
}

pub fn make_angular_hybrid_with(
    d: usize,
    m: usize,
    n: usize,
    sharing: Sharing,
    scheme: EnsembleScheme,
    seed: Seed,
) -> Result<HybridSpec> {
    let bases = bipolar_bases(d, m, sharing, scheme, seed)?;
    let lambda = LambdaSpec::angular(ensemble(d, n, scheme, seed, "lambda-0")?);
    HybridSpec::new(bases, vec![lambda], sharing)
}

/// Normalized bipolar Gaussian hybrid with `ρ = 1 − exp(−2σ²r²)`.
pub fn make_gaussian_hybrid(
    d: usize,
    m: usize,
    n: usize,
    sigma: f64,
    r: f64,
    sharing: Sharing,
    seed: Seed,
) -> Result<HybridSpec> {
    let params = GaussianLambdaParams::normalized(sigma, r, n)?;
    let bases = bipolar_bases(d, m, sharing, EnsembleScheme::Iid, seed)?;
    let lambda = LambdaSpec::gaussian(params, ensemble(d, n, EnsembleScheme::Iid, seed, "lambda-0")?)?;
    HybridSpec::new(bases, vec![lambda], sharing)
}

/// λ-coefficients of a clustered hybrid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClusterCoefficient {
    /// Cluster-membership indicators; they sum to one on every input pair.
    ZeroOne,
    /// Cluster Gaussian λs with `n` features each, plus a `SM̂⁺⁺_m` residual.
    Gaussian { tau: f64, n: usize },
}

/// One complex exponential base per center pair `(i, j)`, ordered with `j`
/// fastest. With [`ClusterCoefficient::ZeroOne`] the last pair is the
/// residual base and the first `n_q·n_k − 1` pairs carry indicator λs.
pub fn make_clustered_hybrid(
    model: &ClusterModel,
    coeff: ClusterCoefficient,
    m: usize,
    a_real_only: bool,
    seed: Seed,
) -> Result<HybridSpec> {
    let (nq, nk) = (model.centers_q.len(), model.centers_k.len());
    if nq == 0 || nk == 0 {
        return Err(HrfError::InvalidArgument("cluster model has no centers".into()));
    }
    for (side, assign, count) in [("query", &model.assign_q, nq), ("key", &model.assign_k, nk)] {
        if !assign.is_empty() {
            if let Some(c) = (0..count).find(|c| !assign.contains(c)) {
                return Err(HrfError::InvalidArgument(format!("{side} cluster {c} is empty")));
            }
        }
    }
    let d = model.centers_q[0].len();
    let mut bases = Vec::with_capacity(nq * nk + 1);
    let mut mats = Vec::with_capacity(nq * nk);
    for i in 0..nq {
        for j in 0..nk {
            let (ci, cj) = (&model.centers_q[i], &model.centers_k[j]);
            let a = if a_real_only {
                build_a_real(ci, cj, DEFAULT_BIG)?
            } else {
                build_a_complex(ci, cj, DEFAULT_BIG, DEFAULT_SMALL)?
            };
            let e = ensemble(d, m, EnsembleScheme::Iid, seed, &format!("base-{i}-{j}"))?;
            bases.push(BaseEstimatorSpec::new(BaseFamily::ComplexExp(a.clone()), e)?);
            mats.push(a);
        }
    }
    let lambdas = match coeff {
        ClusterCoefficient::ZeroOne => {
            let cq = Arc::new(model.centers_q.clone());
            let ck = Arc::new(model.centers_k.clone());
            (0..nq * nk - 1)
                .map(|idx| {
                    LambdaSpec::zero_one(ZeroOnePair {
                        centers_q: cq.clone(),
                        centers_k: ck.clone(),
                        pair: (idx / nk, idx % nk),
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        ClusterCoefficient::Gaussian { tau, n } => {
            let residual = ensemble(d, m, EnsembleScheme::Iid, seed, "base-residual")?;
            bases.push(BaseEstimatorSpec::new(BaseFamily::PosPlusPlus, residual)?);
            mats.into_iter()
                .enumerate()
                .map(|(idx, a)| {
                    let e = ensemble(d, n, EnsembleScheme::Iid, seed, &format!("lambda-{}-{}", idx / nk, idx % nk))?;
                    LambdaSpec::cluster_gaussian(a, tau, e)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    HybridSpec::new(bases, lambdas, Sharing::Independent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::sm_exact;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    fn at_angle(theta: f64, r: f64) -> (Vec<f64>, Vec<f64>) {
        (vec![r, 0.0, 0.0], vec![r * theta.cos(), r * theta.sin(), 0.0])
    }

    fn base(family: BaseFamily, d: usize, m: usize, seed: u64) -> BaseEstimatorSpec {
        let e = sample_ensemble(d, m, EnsembleScheme::Iid, Seed(seed)).unwrap();
        BaseEstimatorSpec::new(family, Arc::new(e)).unwrap()
    }

    #[test]
    fn trig_exact_on_equal_inputs() {
        let x = [0.4, -0.3, 0.8];
        let b = base(BaseFamily::Trig, 3, 5, 1);
        assert!(close(sm_hat_base(&x, &x, &b).unwrap().value, sm_exact(&x, &x), 1e-13));
    }

    #[test]
    fn plusplus_exact_on_antipodal_inputs() {
        let x = [0.4, -0.3, 0.8];
        let y = [-0.4, 0.3, -0.8];
        let b = base(BaseFamily::PosPlusPlus, 3, 5, 2);
        assert!(close(sm_hat_base(&x, &y, &b).unwrap().value, sm_exact(&x, &y), 1e-13));
    }

    #[test]
    fn angular_lambda_endpoints() {
        let e = Arc::new(sample_ensemble(3, 16, EnsembleScheme::Iid, Seed(3)).unwrap());
        let l = LambdaSpec::angular(e);
        let x = [0.2, 0.5, -1.0];
        let y = [-0.2, -0.5, 1.0];
        assert!(lambda_hat(&x, &x, &l).unwrap().abs() < 1e-15);
        assert!((lambda_hat(&x, &y, &l).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(lambda_hat(&x, &y, &LambdaSpec::constant(0.3)).unwrap(), 0.3);
    }

    #[test]
    fn angular_hybrid_endpoints_are_exact() {
        for sharing in [Sharing::Independent, Sharing::Shared] {
            let spec = make_angular_hybrid(3, 4, 4, sharing, Seed(5)).unwrap();
            for theta in [0.0, std::f64::consts::PI] {
                let (x, y) = at_angle(theta, 1.3);
                let v = sm_hat_hybrid(&x, &y, &spec).unwrap();
                assert!(close(v.value, sm_exact(&x, &y), 1e-12), "θ={theta}: {}", v.value);
            }
        }
    }

    #[test]
    fn single_base_matches_base_estimator() {
        let b = base(BaseFamily::Trig, 3, 6, 7);
        let spec = HybridSpec::single(b.clone());
        let (x, y) = ([0.1, 0.2, 0.3], [0.5, -0.1, 0.0]);
        let h = sm_hat_hybrid(&x, &y, &spec).unwrap();
        assert!(close(h.value, sm_hat_base(&x, &y, &b).unwrap().value, 1e-14));
        let f = hybrid_features(&x, Side::Query, &spec).unwrap();
        let g = b.features(&x, Side::Query).unwrap();
        assert_eq!(f.len(), g.len());
        for i in 0..f.len() {
            assert!((f.get(i) - g.get(i)).norm() < 1e-15);
        }
    }

    #[test]
    fn linearization_matches_direct_value() {
        let (x, y) = ([0.3, -0.7, 0.2], [0.6, 0.1, -0.4]);
        let specs = [
            make_angular_hybrid(3, 3, 5, Sharing::Independent, Seed(1)).unwrap(),
            make_angular_hybrid(3, 4, 2, Sharing::Shared, Seed(2)).unwrap(),
            make_gaussian_hybrid(3, 2, 3, 1.0, 1.0, Sharing::Independent, Seed(3)).unwrap(),
        ];
        for spec in &specs {
            let direct = spec.estimate(&x, &y).unwrap().value;
            let lin = spec.features(&x, Side::Query).unwrap().dot(&spec.features(&y, Side::Key).unwrap()).unwrap();
            assert!(close(lin.re, direct, 1e-10), "{} vs {direct}", lin.re);
        }
    }

    #[test]
    fn angular_feature_dim() {
        let spec = make_angular_hybrid(5, 8, 8, Sharing::Independent, Seed(1)).unwrap();
        assert_eq!(spec.feature_dim(), 4 * 8 + 4 * 8 * 8);
        assert_eq!(spec.features(&[0.0; 5], Side::Query).unwrap().len(), spec.feature_dim());
    }

    #[test]
    fn spec_validation() {
        let b1 = base(BaseFamily::Trig, 3, 4, 1);
        let b2 = base(BaseFamily::PosPlusPlus, 3, 4, 2);
        assert!(HybridSpec::new(vec![b1.clone(), b2.clone()], vec![], Sharing::Independent).is_err());
        let lam = LambdaSpec::angular(b1.ensemble.clone());
        assert!(HybridSpec::new(vec![b1.clone(), b2.clone()], vec![lam], Sharing::Independent).is_err());
        let same = BaseEstimatorSpec::new(BaseFamily::PosPlusPlus, b1.ensemble.clone()).unwrap();
        let lam = LambdaSpec::constant(0.5);
        assert!(HybridSpec::new(vec![b1.clone(), same.clone()], vec![lam.clone()], Sharing::Independent).is_err());
        assert!(HybridSpec::new(vec![b1.clone(), same], vec![lam.clone()], Sharing::Shared).is_ok());
        assert!(HybridSpec::new(vec![b1, b2], vec![lam], Sharing::Shared).is_err());
    }

    #[test]
    fn shared_mode_uses_one_ensemble() {
        let s = make_angular_hybrid(4, 8, 8, Sharing::Shared, Seed(9)).unwrap();
        assert!(Arc::ptr_eq(&s.bases()[0].ensemble, &s.bases()[1].ensemble));
        let i = make_angular_hybrid(4, 8, 8, Sharing::Independent, Seed(9)).unwrap();
        assert!(!Arc::ptr_eq(&i.bases()[0].ensemble, &i.bases()[1].ensemble));
        let lam = i.lambdas()[0].ensemble.as_ref().unwrap();
        assert!(i.bases().iter().all(|b| !Arc::ptr_eq(&b.ensemble, lam)));
    }

    #[test]
    fn gaussian_hybrid_zero_lambda_on_equal_inputs() {
        let spec = make_gaussian_hybrid(3, 4, 6, 1.0, 1.0, Sharing::Independent, Seed(4)).unwrap();
        let x = [0.6, 0.0, 0.8];
        let q = spec.prepare(&x, Side::Query).unwrap();
        let k = spec.prepare(&x, Side::Key).unwrap();
        let w = spec.weights(&q, &k).unwrap();
        assert!(w[0].norm() < 1e-14);
        assert!(close(spec.combine(&q, &k).unwrap().value, sm_exact(&x, &x), 1e-12));
    }

    #[test]
    fn degenerate_zero_input() {
        let spec = make_angular_hybrid(3, 4, 4, Sharing::Independent, Seed(6)).unwrap();
        let z = [0.0; 3];
        let v = spec.estimate(&z, &[0.5, 0.5, 0.5]).unwrap();
        assert!(v.value.is_finite());
        let v = spec.estimate(&z, &z).unwrap();
        assert!(close(v.value, 1.0, 1e-12));
    }

    fn two_by_two() -> ClusterModel {
        ClusterModel {
            centers_q: vec![vec![1.0, 0.5], vec![-0.5, 1.0]],
            centers_k: vec![vec![0.8, -0.3], vec![-1.0, -0.6]],
            assign_q: vec![],
            assign_k: vec![],
            s_values: vec![],
        }
    }

    #[test]
    fn zero_one_weights_partition() {
        let spec = make_clustered_hybrid(&two_by_two(), ClusterCoefficient::ZeroOne, 4, true, Seed(1)).unwrap();
        assert_eq!(spec.bases().len(), 4);
        for (x, y) in [([0.9, 0.4], [0.7, -0.2]), ([-0.4, 1.1], [-0.9, -0.5]), ([1.0, 0.6], [-1.1, -0.7])] {
            let q = spec.prepare(&x, Side::Query).unwrap();
            let k = spec.prepare(&y, Side::Key).unwrap();
            let w = spec.weights(&q, &k).unwrap();
            assert_eq!(w.iter().filter(|z| z.re == 1.0).count(), 1);
            assert_eq!(w.iter().filter(|z| z.re == 0.0).count(), 3);
        }
    }

    #[test]
    fn complex_clustered_exact_at_centers() {
        let model = two_by_two();
        let spec = make_clustered_hybrid(&model, ClusterCoefficient::ZeroOne, 3, false, Seed(2)).unwrap();
        for x in &model.centers_q {
            for y in &model.centers_k {
                let v = spec.estimate(x, y).unwrap();
                assert!(close(v.value, sm_exact(x, y), 1e-10), "{} vs {}", v.value, sm_exact(x, y));
            }
        }
    }

    #[test]
    fn clustered_gaussian_linearizes() {
        let spec = make_clustered_hybrid(
            &two_by_two(),
            ClusterCoefficient::Gaussian { tau: 2.0, n: 3 },
            2,
            false,
            Seed(3),
        )
        .unwrap();
        assert_eq!(spec.bases().len(), 5);
        let (x, y) = ([0.5, 0.2], [0.1, -0.4]);
        let direct = spec.estimate(&x, &y).unwrap();
        let lin = spec.features(&x, Side::Query).unwrap().dot(&spec.features(&y, Side::Key).unwrap()).unwrap();
        assert!(close(lin.re, direct.value, 1e-10));
    }

    #[test]
    fn empty_cluster_is_rejected() {
        let mut m = two_by_two();
        m.assign_q = vec![0, 0, 0];
        assert!(make_clustered_hybrid(&m, ClusterCoefficient::ZeroOne, 2, true, Seed(1)).is_err());
    }
}
