//! Fit a model by projected Adam without materializing the CDF tensor, on a
//! 5-D problem whose 30^5 lattice is too large to store comfortably.
//!
//! cargo run --release --example fit_sgd

use lrcdf::datasets::GaussianMixture;
use lrcdf::{build_grid, fit_sgd, Dataset, GridReduction, SgdConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lrcdf::Result<()> {
    let gm = GaussianMixture {
        weights: vec![0.3, 0.7],
        means: vec![vec![-1.0, 0.0, 2.0, 1.0, -2.0], vec![1.5, 1.0, -1.0, 0.0, 0.5]],
        stds: vec![vec![0.6; 5], vec![0.9; 5]],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let data = Dataset::continuous(gm.sample(5000, &mut rng))?;
    let grid = build_grid(&data, &[30; 5], GridReduction::Full)?;
    println!("lattice size {}", grid.lattice_size());

    let cfg = SgdConfig { seed: 1, ..SgdConfig::with_rank(2) };
    let mut report = |step: usize, mse: f64| {
        if step % 500 == 0 {
            println!("step {step:5}  validation MSE {mse:.3e}");
        }
    };
    let fit = fit_sgd(&data, &grid, &cfg, Some(&mut report))?;
    println!(
        "stopped after {} steps; validation MSE {:.3e} -> {:.3e}",
        fit.steps, fit.initial_val_mse, fit.best_val_mse
    );
    // components come back in arbitrary order
    let mut w = fit.model.weights().to_vec();
    w.sort_by(f64::total_cmp);
    println!("sorted weights {w:?} (true {:?})", gm.weights);
    Ok(())
}
