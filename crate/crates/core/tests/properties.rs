use std::f64::consts::PI;
use std::sync::Arc;

use hrf::closed_form::{
    mse_angular_hybrid, mse_angular_hybrid_same_length, mse_pos_plus, mse_pos_plusplus, mse_trig, rel_err,
    GeometryPoint, RelErrFamily,
};
use hrf::estimators::{BaseEstimatorSpec, BaseFamily, HybridSpec, LambdaSpec, Sharing};
use hrf::features::Side;
use hrf::rng::{sample_ensemble, EnsembleScheme, Seed};
use proptest::prelude::*;

fn family(k: u8) -> BaseFamily {
    match k % 3 {
        0 => BaseFamily::Trig,
        1 => BaseFamily::PosPlus,
        _ => BaseFamily::PosPlusPlus,
    }
}

fn unit_pair(d: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    let v = prop::collection::vec(-1.0f64..1.0, d);
    (v.clone(), v).prop_filter("nonzero", |(x, y)| x.iter().any(|a| a.abs() > 1e-3) && y.iter().any(|a| a.abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn feature_dot_matches_direct_estimate(
        seed in any::<u64>(),
        p in 1usize..=2,
        m in 1usize..6,
        n in 1usize..6,
        kinds in prop::collection::vec(any::<u8>(), 3),
        (x, y) in unit_pair(5),
        shared in any::<bool>(),
    ) {
        let s = Seed(seed);
        let base_e = Arc::new(sample_ensemble(5, m, EnsembleScheme::Iid, s.derive("b")).unwrap());
        let bases: Vec<_> = (0..=p)
            .map(|k| {
                let e = if shared && p == 1 { base_e.clone() } else {
                    Arc::new(sample_ensemble(5, m, EnsembleScheme::Iid, s.derive(&format!("b{k}"))).unwrap())
                };
                BaseEstimatorSpec::new(family(kinds[k]), e).unwrap()
            })
            .collect();
        let lambdas: Vec<_> = (0..p)
            .map(|k| LambdaSpec::angular(Arc::new(sample_ensemble(5, n, EnsembleScheme::Iid, s.derive(&format!("l{k}"))).unwrap())))
            .collect();
        let sharing = if shared && p == 1 { Sharing::Shared } else { Sharing::Independent };
        let spec = HybridSpec::new(bases, lambdas, sharing).unwrap();
        let direct = spec.estimate(&x, &y).unwrap().value;
        let dot = spec.features(&x, Side::Query).unwrap().dot(&spec.features(&y, Side::Key).unwrap()).unwrap().re;
        prop_assert!((dot - direct).abs() <= 1e-10 * direct.abs().max(dot.abs()).max(1e-300));
    }

    #[test]
    fn closed_form_mses_are_nonnegative((x, y) in unit_pair(4), scale in 0.1f64..2.0, m in 1usize..32, n in 1usize..32) {
        let y: Vec<f64> = y.iter().map(|v| v * scale).collect();
        prop_assert!(mse_trig(&x, &y, m).unwrap() >= 0.0);
        prop_assert!(mse_pos_plus(&x, &y, m).unwrap() >= 0.0);
        prop_assert!(mse_pos_plusplus(&x, &y, m).unwrap() >= 0.0);
        prop_assert!(mse_angular_hybrid(&x, &y, m, n, false).unwrap() >= 0.0);
        prop_assert!(mse_angular_hybrid(&x, &y, m, n, true).unwrap() >= 0.0);
    }

    #[test]
    fn same_length_form_agrees_with_general(theta in 0.0f64..PI, r in 0.1f64..2.0, m in 1usize..32, n in 1usize..32) {
        let (x, y) = GeometryPoint::new(theta, r).unwrap().vectors(3).unwrap();
        // Angle actually spanned by the rounded vectors.
        let norm = |f: fn(f64, f64) -> f64| x.iter().zip(&y).map(|(a, b)| f(*a, *b).powi(2)).sum::<f64>().sqrt();
        let theta = 2.0 * norm(|a, b| a - b).atan2(norm(|a, b| a + b));
        let general = mse_angular_hybrid(&x, &y, m, n, false).unwrap();
        let special = mse_angular_hybrid_same_length(theta, r, m, n).unwrap();
        prop_assert!((general - special).abs() <= 1e-12 * general.max(special).max(1e-300) + 1e-300,
            "{general} vs {special}");
    }

    #[test]
    fn rel_err_reflection_is_exact(theta in 0.0f64..PI, r in 0.0f64..3.0, m in 1usize..256) {
        let a = rel_err(theta, r, m, RelErrFamily::Trig).unwrap();
        let b = rel_err(PI - theta, r, m, RelErrFamily::PosPlusPlus).unwrap();
        prop_assert_eq!(a, b);
    }
}
