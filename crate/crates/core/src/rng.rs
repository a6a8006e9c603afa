//! Deterministic randomness: seed derivation and Gaussian projection ensembles.
//!
//! Every stochastic component draws from a ChaCha8 stream keyed by a 64-bit
//! [`Seed`]. The 256-bit ChaCha key is the little-endian concatenation of four
//! successive SplitMix64 outputs started at the seed value, so a seed maps to
//! the same stream on every platform. Independent streams are obtained with
//! [`derive_seed`] (string labels) or [`Seed::child`] (integer indices), never
//! by sharing one generator between workers.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, HrfError, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// SplitMix64 output function (Steele, Lea, Flood 2014).
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Root of a reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    /// Seed of the `index`-th child stream: `mix64(seed ^ mix64(index + γ))`
    /// with γ the 64-bit golden-ratio increment.
    pub fn child(self, index: u64) -> Seed {
        Seed(mix64(self.0 ^ mix64(index.wrapping_add(GOLDEN_GAMMA))))
    }

    /// Labelled child stream; see [`derive_seed`].
    pub fn derive(self, label: &str) -> Seed {
        derive_seed(self, label)
    }

    /// ChaCha8 generator for this seed.
    pub fn rng(self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = self.0;
        for chunk in key.chunks_exact_mut(8) {
            state = state.wrapping_add(GOLDEN_GAMMA);
            chunk.copy_from_slice(&mix64(state).to_le_bytes());
        }
        rand::SeedableRng::from_seed(key)
    }
}

/// Mixes a root seed with a stream label.
///
/// The label is hashed with 64-bit FNV-1a, and the result is
/// `mix64(root ^ mix64(fnv1a(label) ^ γ))`. Both steps are bijective in their
/// varying argument, so distinct labels under one root (and distinct roots
/// under one label) collide only through FNV collisions.
pub fn derive_seed(root: Seed, stream: &str) -> Seed {
    Seed(mix64(root.0 ^ mix64(fnv1a(stream.as_bytes()) ^ GOLDEN_GAMMA)))
}

/// How the rows of a [`ProjectionEnsemble`] are coupled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleScheme {
    /// Independent `N(0, I_d)` rows.
    #[default]
    Iid,
    /// Exactly orthogonal directions within consecutive blocks of `d` rows,
    /// each row rescaled to an independent chi(d) length.
    BlockOrthogonal,
}

/// `m` projection directions in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionEnsemble {
    rows: Vec<f64>,
    d: usize,
    m: usize,
    scheme: EnsembleScheme,
    /// `None` for ensembles assembled from explicit rows.
    seed: Option<Seed>,
}

impl ProjectionEnsemble {
    /// Wraps explicit rows (all of dimension `d`).
    pub fn from_rows(d: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if d == 0 || rows.is_empty() {
            return Err(HrfError::InvalidArgument(
                "ensemble needs d >= 1 and at least one row".into(),
            ));
        }
        let mut flat = Vec::with_capacity(d * rows.len());
        for row in rows {
            check_dim(d, row.len())?;
            if row.iter().any(|v| !v.is_finite()) {
                return Err(HrfError::InvalidArgument("non-finite ensemble entry".into()));
            }
            flat.extend_from_slice(row);
        }
        Ok(Self { rows: flat, d, m: rows.len(), scheme: EnsembleScheme::Iid, seed: None })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn scheme(&self) -> EnsembleScheme {
        self.scheme
    }

    pub fn seed(&self) -> Option<Seed> {
        self.seed
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks_exact(self.d)
    }

    /// `(ω_1·u, …, ω_m·u)`.
    pub fn project(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.d, u.len())?;
        Ok(self.rows().map(|w| dot(w, u)).collect())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Draws `m` Gaussian directions in `R^d`.
///
/// Block-orthogonal ensembles are built block by block: `b = min(d, remaining)`
/// Gaussian rows are orthonormalised with modified Gram-Schmidt, then each row
/// is scaled by the norm of a fresh `N(0, I_d)` vector, which restores the
/// `N(0, I_d)` marginal of every row. Blocks are independent of each other.
pub fn sample_ensemble(
    d: usize,
    m: usize,
    scheme: EnsembleScheme,
    seed: Seed,
) -> Result<ProjectionEnsemble> {
    if d == 0 || m == 0 {
        return Err(HrfError::InvalidArgument(format!(
            "ensemble dimensions must be positive (d={d}, m={m})"
        )));
    }
    let mut rng = seed.rng();
    let rows = match scheme {
        EnsembleScheme::Iid => (0..d * m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
        EnsembleScheme::BlockOrthogonal => block_orthogonal_rows(d, m, &mut rng),
    };
    Ok(ProjectionEnsemble { rows, d, m, scheme, seed: Some(seed) })
}

fn block_orthogonal_rows<R: Rng>(d: usize, m: usize, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(d * m);
    let mut remaining = m;
    while remaining > 0 {
        let b = remaining.min(d);
        let block = orthonormal_rows(d, b, rng);
        for row in block.chunks_exact(d) {
            let len = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).sum::<f64>().sqrt();
            out.extend(row.iter().map(|v| v * len));
        }
        remaining -= b;
    }
    out
}

/// `b <= d` orthonormal rows of length `d` (row-major), from Gaussian draws
/// passed through modified Gram-Schmidt.
pub(crate) fn orthonormal_rows<R: Rng>(d: usize, b: usize, rng: &mut R) -> Vec<f64> {
    debug_assert!(b <= d);
    let mut q: Vec<f64> = Vec::with_capacity(b * d);
    let mut i = 0;
    while i < b {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for prev in q.chunks_exact(d) {
            let c = dot(prev, &v);
            v.iter_mut().zip(prev).for_each(|(x, p)| *x -= c * p);
        }
        // second pass keeps the block orthogonal to working precision
        for prev in q.chunks_exact(d) {
            let c = dot(prev, &v);
            v.iter_mut().zip(prev).for_each(|(x, p)| *x -= c * p);
        }
        let norm = dot(&v, &v).sqrt();
        if norm < 1e-8 {
            continue;
        }
        q.extend(v.iter().map(|x| x / norm));
        i += 1;
    }
    q
}
