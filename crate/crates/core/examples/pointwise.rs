//! A reduced pointwise sweep written as CSV to stdout.
use hrf::bench::{pointwise_sweep, write_records, EstimatorConfig, Format, PointwiseConfig};
use hrf::estimators::Sharing;
use hrf::rng::Seed;

fn main() -> hrf::Result<()> {
    let cfg = PointwiseConfig {
        thetas: vec![0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI],
        r_list: vec![1.0],
        samples: 2000,
        estimators: vec![
            EstimatorConfig::Trig { m: 128 },
            EstimatorConfig::PosPlusPlus { m: 128 },
            EstimatorConfig::MatchedAngularHybrid { target_m: 128, sharing: Sharing::Independent },
        ],
        ..Default::default()
    };
    let rec = pointwise_sweep(&cfg, Seed(1))?;
    write_records(&rec, std::io::stdout().lock(), Format::Csv)
}
