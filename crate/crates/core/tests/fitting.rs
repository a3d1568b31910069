//! End-to-end behaviour of the two fitters.

mod common;

use common::*;
use lrcdf::datasets::GaussianMixture;
use lrcdf::sgd::{fit_sgd, SgdConfig, TargetSampling};
use lrcdf::{
    build_grid, fit_admm, materialize_empirical, AdmmConfig, CpdModel, Dataset, EmpiricalCdf,
    Error, Grid, GridReduction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

fn uniform_data(m: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Dataset::continuous((0..m).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect()).unwrap()
}

fn decile_grid() -> Grid {
    Grid::new(vec![(1..=10).map(|k| k as f64 / 10.0).collect(); 2]).unwrap()
}

fn uniform_grid_error(model: &CpdModel) -> f64 {
    let mut err: f64 = 0.0;
    for i in 0..10 {
        for j in 0..10 {
            let truth = (i + 1) as f64 * (j + 1) as f64 / 100.0;
            err = err.max((model.eval_grid_point(&[i, j]).unwrap() - truth).abs());
        }
    }
    err
}

fn mixture_component_error(model: &CpdModel, gm: &GaussianMixture) -> f64 {
    let truth: Vec<Vec<Vec<f64>>> = (0..3)
        .map(|d| {
            (0..2)
                .map(|h| {
                    let n = Normal::new(gm.means[h][d], gm.stds[h][d]).unwrap();
                    model.grid().cutoffs(d).iter().map(|&c| n.cdf(c)).collect()
                })
                .collect()
        })
        .collect();
    let fitted: Vec<Vec<Vec<f64>>> = model.factors().iter().map(|f| f.columns()).collect();
    best_permutation_error(&fitted, &truth).0
}

#[test]
fn sgd_recovers_independent_uniforms() {
    let data = uniform_data(5000, 0);
    let fit = fit_sgd(&data, &decile_grid(), &SgdConfig::with_rank(1), None).unwrap();
    assert!(uniform_grid_error(&fit.model) < 0.05);
    assert!(fit.best_val_mse < fit.initial_val_mse);
}

#[test]
fn sgd_recovers_the_gaussian_mixture_components() {
    let gm = GaussianMixture::reference_3d();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let data = Dataset::continuous(gm.sample(4000, &mut rng)).unwrap();
    let grid = build_grid(&data, &[20; 3], GridReduction::Full).unwrap();
    let fit = fit_sgd(&data, &grid, &SgdConfig { seed: 1, ..SgdConfig::with_rank(2) }, None).unwrap();
    let err = mixture_component_error(&fit.model, &gm);
    assert!(err < 0.08, "component error {err}");
    assert!(fit.best_val_mse < fit.initial_val_mse);
}

#[test]
fn sgd_is_deterministic_under_a_seed() {
    let data = uniform_data(800, 3);
    let cfg = SgdConfig { seed: 9, max_iter: 500, ..SgdConfig::with_rank(3) };
    let a = fit_sgd(&data, &decile_grid(), &cfg, None).unwrap();
    let b = fit_sgd(&data, &decile_grid(), &cfg, None).unwrap();
    assert_eq!(a.model.to_json().unwrap(), b.model.to_json().unwrap());
    assert_eq!(a.val_history, b.val_history);
}

#[test]
fn sgd_minibatch_targets_also_fit() {
    let data = uniform_data(5000, 4);
    let cfg = SgdConfig { targets: TargetSampling::DataMinibatch(500), seed: 4, ..SgdConfig::with_rank(1) };
    let fit = fit_sgd(&data, &decile_grid(), &cfg, None).unwrap();
    assert!(uniform_grid_error(&fit.model) < 0.08);
}

#[test]
fn sgd_reports_progress_at_each_evaluation() {
    let data = uniform_data(500, 5);
    let mut seen = Vec::new();
    let mut cb = |step: usize, mse: f64| seen.push((step, mse));
    let cfg = SgdConfig { max_iter: 300, patience: 100, ..SgdConfig::with_rank(1) };
    let fit = fit_sgd(&data, &decile_grid(), &cfg, Some(&mut cb)).unwrap();
    assert_eq!(seen.len(), 6);
    assert_eq!(&fit.val_history[1..], seen.as_slice());
}

#[test]
fn sgd_rejects_bad_configurations() {
    let data = uniform_data(100, 6);
    for cfg in [
        SgdConfig { batch_size: 0, ..SgdConfig::default() },
        SgdConfig { learning_rate: 0.0, ..SgdConfig::default() },
        SgdConfig { val_fraction: 1.0, ..SgdConfig::default() },
        SgdConfig { patience: 0, ..SgdConfig::default() },
    ] {
        assert!(matches!(fit_sgd(&data, &decile_grid(), &cfg, None), Err(Error::InvalidArgument(_))));
    }
}

#[test]
fn admm_iterates_stay_feasible_and_objective_decreases() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let truth = random_model(&[6, 5, 4], 3, &mut rng);
    let grid = truth.grid().clone();
    let emp = EmpiricalCdf::from_dense(grid, truth.materialize_tensor(1 << 16).unwrap()).unwrap();
    let mut previous = f64::INFINITY;
    for iters in [1, 2, 5, 20, 100] {
        let fit = fit_admm(&emp, &AdmmConfig { outer_iters: iters, seed: 7, ..AdmmConfig::with_rank(3) }, None).unwrap();
        for f in fit.model.factors() {
            f.check_valid_cdf().unwrap();
        }
        let w = fit.model.weights();
        assert!(w.iter().all(|&x| x >= 0.0) && (w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(fit.objective() <= previous + 1e-12);
        previous = fit.objective();
        for pair in fit.objectives.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12 * pair[0].max(1.0));
        }
    }
}

#[test]
fn admm_recovers_independent_uniforms() {
    let data = uniform_data(5000, 8);
    let emp = materialize_empirical(&data, &decile_grid(), 1 << 10).unwrap();
    let fit = fit_admm(&emp, &AdmmConfig::with_rank(1), None).unwrap();
    assert!(uniform_grid_error(&fit.model) < 0.05);
}

#[test]
fn sample_then_refit_recovers_the_grid_cdf() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let truth = random_model(&[6, 6], 2, &mut rng);
    let samples = lrcdf::inference::sample(&truth, 20_000, &mut rng);
    let data = Dataset::continuous(samples).unwrap();
    let emp = materialize_empirical(&data, truth.grid(), 1 << 10).unwrap();
    let fit = fit_admm(&emp, &AdmmConfig::with_rank(2), None).unwrap();
    let mut err: f64 = 0.0;
    lrcdf::empirical::for_each_lattice_index(truth.grid(), |idx| {
        let a = fit.model.eval_grid_point(idx).unwrap();
        let b = truth.eval_grid_point(idx).unwrap();
        err = err.max((a - b).abs());
    });
    // sampling noise at 20k draws is about 0.01 in sup norm
    assert!(err < 0.02, "grid CDF error {err}");
}
