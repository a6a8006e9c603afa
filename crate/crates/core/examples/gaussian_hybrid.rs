//! Normalized bipolar Gaussian hybrid and its lambda moments.
use hrf::bench::empirical_mse;
use hrf::closed_form::{lambda_moments_gaussian, mse_gaussian_hybrid, GeometryPoint};
use hrf::estimators::{make_gaussian_hybrid, Sharing};
use hrf::features::GaussianLambdaParams;
use hrf::rng::Seed;

fn main() -> hrf::Result<()> {
    let (d, m, n, sigma, r) = (8, 4, 8, 1.0, 1.0);
    let g = GeometryPoint::new(1.0, r)?;
    let (x, y) = g.vectors(d)?;
    let rho = GaussianLambdaParams::normalized(sigma, r, n)?.rho;

    let mom = lambda_moments_gaussian(g.delta_norm(), sigma, rho, n)?;
    println!("rho {rho:.4}  E[l^2] {:.4}  E[(1-l)^2] {:.4}", mom.e_l2, mom.e_1ml2);
    println!("closed-form MSE {:.4e}", mse_gaussian_hybrid(&x, &y, m, n, sigma, rho)?);
    for sharing in [Sharing::Independent, Sharing::Shared] {
        let e = empirical_mse(&x, &y, |s| make_gaussian_hybrid(d, m, n, sigma, r, sharing, s), 50_000, Seed(3))?;
        println!("{sharing:?}: empirical {:.4e} +- {:.1e}", e.mse, e.mse_variance.sqrt());
    }
    Ok(())
}
