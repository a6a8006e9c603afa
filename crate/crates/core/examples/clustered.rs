//! Cluster-adapted hybrid on synthetic two-by-two cluster data.
use hrf::closed_form::sm_exact;
use hrf::clustering::{build_a_complex, cluster_loss, generate_synthetic_clusters, ClusterModel, SyntheticClusterConfig};
use hrf::clustering::{DEFAULT_BIG, DEFAULT_SMALL};
use hrf::estimators::{make_clustered_hybrid, ClusterCoefficient};
use hrf::rng::Seed;

fn main() -> hrf::Result<()> {
    let data = generate_synthetic_clusters(&SyntheticClusterConfig { points_per_cluster: 200, seed: Seed(5), ..Default::default() })?;
    let model = ClusterModel::fit(&data.queries, &data.keys, 2, 2, Seed(6), 100)?;
    println!("real-diagonal losses per center pair {:?}", model.s_values);

    let (ci, cj) = (&model.centers_q[0], &model.centers_k[1]);
    let a = build_a_complex(ci, cj, DEFAULT_BIG, DEFAULT_SMALL)?;
    println!("complex A loss {:.2e}", cluster_loss(&a, ci, cj)?);

    let spec = make_clustered_hybrid(&model, ClusterCoefficient::ZeroOne, 64, true, Seed(8))?;
    for (x, y) in data.queries.iter().zip(&data.keys).step_by(97).take(5) {
        println!("exact {:.6}  hybrid {:.6}", sm_exact(x, y), spec.estimate(x, y)?.value);
    }
    Ok(())
}
