//! Predict a discrete column from continuous features.
//!
//! cargo run --release --example classification

use lrcdf::cli::{self, TrainConfig};
use lrcdf::datasets::GaussianMixture;
use lrcdf::{Dataset, VariableKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lrcdf::Result<()> {
    let gm = GaussianMixture {
        weights: vec![0.4, 0.35, 0.25],
        means: vec![vec![0.0, 0.0], vec![2.5, 1.0], vec![-1.0, 3.0]],
        stds: vec![vec![0.8, 0.8], vec![0.7, 1.0], vec![1.0, 0.6]],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rows = |n: usize, rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        gm.sample_labeled(n, rng)
            .into_iter()
            .map(|(h, mut x)| {
                x.push(h as f64);
                x
            })
            .collect()
    };
    let kinds = vec![VariableKind::Continuous, VariableKind::Continuous, VariableKind::Discrete];
    let names: Vec<String> = ["x", "y", "class"].iter().map(|s| s.to_string()).collect();
    let train = Dataset::new(rows(4000, &mut rng), kinds.clone())?.with_names(names.clone())?;
    let test = Dataset::new(rows(1000, &mut rng), kinds)?.with_names(names)?;

    let cfg = TrainConfig { ranks: vec![3, 5, 8], levels: vec![20, 30], ..TrainConfig::default() };
    let (model, report) = cli::train(&train, &cfg)?;
    println!("selected rank {} with {} levels", report.best_rank, report.best_levels);

    let preds = cli::classify_rows(&model, &test, "class")?;
    let errors = preds.iter().zip(test.rows()).filter(|(p, r)| p.label != r[2]).count();
    println!("misclassification {:.3}", errors as f64 / test.nrows() as f64);
    let bayes_errors = test
        .rows()
        .filter(|r| {
            let post: Vec<f64> = (0..3)
                .map(|h| {
                    gm.weights[h]
                        * (0..2)
                            .map(|d| {
                                let z = (r[d] - gm.means[h][d]) / gm.stds[h][d];
                                (-0.5 * z * z).exp() / gm.stds[h][d]
                            })
                            .product::<f64>()
                })
                .collect();
            let best = (0..3).max_by(|&a, &b| post[a].total_cmp(&post[b])).unwrap();
            best as f64 != r[2]
        })
        .count();
    println!("Bayes-optimal misclassification {:.3}", bayes_errors as f64 / test.nrows() as f64);
    println!("first prediction: {:?}", preds[0]);
    Ok(())
}
