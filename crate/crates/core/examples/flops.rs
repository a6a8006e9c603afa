//! Modelled and measured multiply-add counts of hybrid feature construction.
use hrf::bench::{flops_report, match_flops, FlopsConfig};
use hrf::estimators::Sharing;
use hrf::rng::Seed;

fn main() -> hrf::Result<()> {
    for r in flops_report(&FlopsConfig::default(), Seed(1))? {
        println!(
            "{:<22} model {:>6} measured {:>6} regular {:>6} ratio {:.3}",
            r.estimator_id, r.model_mul_add, r.measured_mul_add, r.regular_cost, r.ratio
        );
    }
    let (m, n) = match_flops(64, 128, Sharing::Shared)?;
    println!("shared hybrid matched to 128 regular features: m={m}, n={n}");
    Ok(())
}
