//! Angular hybrid estimator: direct form, linearized features, sharing modes.
use hrf::bench::empirical_mse;
use hrf::closed_form::{mse_angular_hybrid, mse_pos_plusplus, mse_trig, sm_exact, GeometryPoint};
use hrf::estimators::{make_angular_hybrid, Sharing};
use hrf::features::Side;
use hrf::rng::Seed;

fn main() -> hrf::Result<()> {
    let d = 16;
    let (x, y) = GeometryPoint::new(2.0, 1.2)?.vectors(d)?;
    let spec = make_angular_hybrid(d, 16, 8, Sharing::Independent, Seed(1))?;

    let direct = spec.estimate(&x, &y)?;
    let linear = spec.features(&x, Side::Query)?.dot(&spec.features(&y, Side::Key)?)?;
    println!("exact {:.6}  direct {:.6}  linearized {:.6}", sm_exact(&x, &y), direct.value, linear.re);
    println!("feature dim {}", spec.feature_dim());

    let (m, n) = (4, 4);
    println!("closed-form MSE  trig {:.4e}  ++ {:.4e}", mse_trig(&x, &y, m)?, mse_pos_plusplus(&x, &y, m)?);
    for sharing in [Sharing::Independent, Sharing::Shared] {
        let cf = mse_angular_hybrid(&x, &y, m, n, sharing == Sharing::Shared)?;
        let emp = empirical_mse(&x, &y, |s| make_angular_hybrid(d, m, n, sharing, s), 20_000, Seed(2))?;
        println!("hybrid {sharing:?}: closed form {cf:.4e}, empirical {:.4e}", emp.mse);
    }
    Ok(())
}
