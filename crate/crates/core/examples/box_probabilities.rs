//! Box probabilities, marginals and conditional tail probabilities on a
//! fitted model.
//!
//! cargo run --release --example box_probabilities

use lrcdf::cli::{self, TrainConfig};
use lrcdf::datasets::GaussianMixture;
use lrcdf::inference::{self, BoxQuery, ZeroLikelihoodPolicy};
use lrcdf::Dataset;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lrcdf::Result<()> {
    let gm = GaussianMixture::reference_3d();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let samples = gm.sample(4000, &mut rng);
    let data = Dataset::continuous(samples.clone())?;
    let cfg = TrainConfig { ranks: vec![2, 4], levels: vec![20, 30], ..TrainConfig::default() };
    let (model, report) = cli::train(&data, &cfg)?;
    println!("selected rank {} with {} levels", report.best_rank, report.best_levels);

    let q = BoxQuery::unbounded(3).with(0, -2.0, 0.0)?.with(2, -3.0, -2.0)?;
    let p = inference::box_probability(&model, &q);
    let empirical = samples
        .iter()
        .filter(|x| x[0] > -2.0 && x[0] <= 0.0 && x[2] > -3.0 && x[2] <= -2.0)
        .count() as f64
        / samples.len() as f64;
    println!("P(-2 < x0 <= 0, -3 < x2 <= -2) = {p:.4} (sample frequency {empirical:.4})");

    // the same box on the marginal over dimensions 0 and 2
    let marginal = inference::marginalize(&model, &[0, 2])?;
    let q2 = BoxQuery::unbounded(2).with(0, -2.0, 0.0)?.with(1, -3.0, -2.0)?;
    println!("same box on the 2-D marginal      = {:.4}", inference::box_probability(&marginal, &q2));

    // tail probability of x1 > 2 given x0 = 2
    let tail = BoxQuery::unbounded(3).with(1, 2.0, f64::INFINITY)?;
    let given = inference::posterior_box_probability(&model, &[(0, 2.0)], &tail, ZeroLikelihoodPolicy::Error)?;
    let prior = inference::box_probability(&model, &tail);
    println!("P(x1 > 2) = {prior:.4}, P(x1 > 2 | x0 = 2) = {given:.4}");
    let post = inference::posterior(&model, &[(0, 2.0)], ZeroLikelihoodPolicy::Error)?;
    println!("posterior over hidden states given x0 = 2: {:?}", post.weights);
    Ok(())
}
