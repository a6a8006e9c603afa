//! Approximate softmax distributions and their distance to the exact one.
use std::sync::Arc;

use hrf::bench::{approx_softmax_distribution, ks_distance, wasserstein1, KernelEstimator};
use hrf::estimators::{BaseEstimatorSpec, BaseFamily, HybridSpec};
use hrf::rng::{sample_ensemble, EnsembleScheme, Seed};

fn main() -> hrf::Result<()> {
    let q = [1.0, 0.5, -0.5];
    let keys: Vec<Vec<f64>> = (0..12).map(|i| {
        let t = i as f64 * 0.5;
        vec![t.cos() * 1.2, t.sin() * 1.2, -0.3]
    }).collect();
    let support: Vec<f64> = (0..keys.len()).map(|i| i as f64).collect();
    let exact = approx_softmax_distribution(&q, &keys, &KernelEstimator::Exact)?;

    for family in [BaseFamily::Trig, BaseFamily::PosPlusPlus] {
        let e = sample_ensemble(3, 4, EnsembleScheme::Iid, Seed(11))?;
        let spec = HybridSpec::single(BaseEstimatorSpec::new(family.clone(), Arc::new(e))?);
        match approx_softmax_distribution(&q, &keys, &KernelEstimator::Hybrid(spec)) {
            Ok(a) => println!(
                "{:<13} W1 {:.4}  KS {:.4}  negative {:.2}",
                family.id(),
                wasserstein1(&support, &a.clipped, &exact.raw)?,
                ks_distance(&a.clipped, &exact.raw)?,
                a.negative_fraction
            ),
            Err(e) => println!("{:<13} {e}", family.id()),
        }
    }
    Ok(())
}
