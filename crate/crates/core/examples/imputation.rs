//! Fill missing entries with conditional expectations, in CDF and copula
//! mode, and compare with column-mean imputation.
//!
//! cargo run --release --example imputation

use lrcdf::cli::{self, Mode, TrainConfig};
use lrcdf::datasets::GaussianMixture;
use lrcdf::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> lrcdf::Result<()> {
    let gm = GaussianMixture::reference_3d();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let clean = gm.sample(4000, &mut rng);
    let mut dirty = clean.clone();
    for (r, row) in dirty.iter_mut().enumerate() {
        for v in row.iter_mut() {
            if rng.random::<f64>() < 0.3 {
                *v = f64::NAN;
            }
        }
        if row.iter().all(|v| v.is_nan()) {
            row[0] = clean[r][0];
        }
    }
    let data = Dataset::continuous(dirty.clone())?;

    let sd: Vec<f64> = (0..3)
        .map(|d| {
            let m = clean.iter().map(|r| r[d]).sum::<f64>() / clean.len() as f64;
            (clean.iter().map(|r| (r[d] - m).powi(2)).sum::<f64>() / clean.len() as f64).sqrt()
        })
        .collect();
    let col_mean: Vec<f64> = (0..3)
        .map(|d| {
            let seen: Vec<f64> = dirty.iter().map(|r| r[d]).filter(|v| !v.is_nan()).collect();
            seen.iter().sum::<f64>() / seen.len() as f64
        })
        .collect();
    let score = |fill: &dyn Fn(usize, usize) -> f64| {
        let (mut s, mut n) = (0.0, 0);
        for (r, row) in dirty.iter().enumerate() {
            for d in 0..3 {
                if row[d].is_nan() {
                    s += ((fill(r, d) - clean[r][d]) / sd[d]).powi(2);
                    n += 1;
                }
            }
        }
        s / n as f64
    };
    println!("mean imputation  standardized MSE {:.3}", score(&|_, d| col_mean[d]));
    for mode in [Mode::Cdf, Mode::Copula] {
        let cfg = TrainConfig { mode, ranks: vec![2, 5, 10], levels: vec![10, 20], ..TrainConfig::default() };
        let (model, report) = cli::train(&data, &cfg)?;
        let filled = cli::impute_rows(&model, &data)?;
        println!(
            "{mode:?} model (rank {}, {} levels) standardized MSE {:.3}",
            report.best_rank,
            report.best_levels,
            score(&|r, d| filled[r].0[d])
        );
    }
    Ok(())
}
