//! Property tests for projections, the model and the empirical CDF.

mod common;

use common::*;
use lrcdf::empirical::CellIndex;
use lrcdf::projections::{isotonic_project, simplex_project, valid_cdf_project};
use lrcdf::{empirical_at, materialize_empirical, CpdModel, Dataset, Grid, VariableKind};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vec_in(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn isotonic_is_monotone_and_idempotent(v in vec_in(1..=30)) {
        let p = isotonic_project(&v);
        prop_assert!(p.windows(2).all(|w| w[0] <= w[1]));
        let pp = isotonic_project(&p);
        for (a, b) in p.iter().zip(&pp) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        // projection onto a cone through the origin preserves the total
        let (s, t): (f64, f64) = (v.iter().sum(), p.iter().sum());
        prop_assert!((s - t).abs() <= 1e-9);
    }

    #[test]
    fn isotonic_commutes_with_shifts(v in vec_in(1..=20), c in -5.0f64..5.0) {
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let a = isotonic_project(&shifted);
        let b = isotonic_project(&v);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - (y + c)).abs() <= 1e-9);
        }
    }

    #[test]
    fn valid_cdf_output_is_feasible(v in vec_in(1..=30)) {
        let p = valid_cdf_project(&v);
        prop_assert!(p.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
        prop_assert_eq!(*p.last().unwrap(), 1.0);
        prop_assert_eq!(valid_cdf_project(&p), p);
    }

    #[test]
    fn simplex_output_is_on_the_simplex(v in vec_in(1..=12)) {
        let p = simplex_project(&v);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        // order is preserved
        for i in 0..v.len() {
            for j in 0..v.len() {
                if v[i] > v[j] {
                    prop_assert!(p[i] >= p[j]);
                }
            }
        }
    }

    #[test]
    fn simplex_is_permutation_equivariant(v in vec_in(2..=8), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..v.len()).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let permuted: Vec<f64> = perm.iter().map(|&i| v[i]).collect();
        let a = simplex_project(&permuted);
        let b = simplex_project(&v);
        for (k, &i) in perm.iter().enumerate() {
            prop_assert!((a[k] - b[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn model_cdf_is_monotone_and_bounded(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&[4, 5, 3], 3, &mut rng);
        let lo: Vec<f64> = (0..3).map(|d| model.grid().left_edge(d) - 0.5).collect();
        let hi: Vec<f64> = (0..3).map(|d| model.grid().cutoffs(d).last().unwrap() + 0.5).collect();
        let x: Vec<f64> = (0..3).map(|d| rng.random_range(lo[d]..hi[d])).collect();
        let f = model.eval_cdf(&x);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
        for d in 0..3 {
            let mut y = x.clone();
            y[d] += rng.random_range(0.0..2.0);
            prop_assert!(model.eval_cdf(&y) >= f - 1e-12);
        }
        prop_assert!((model.eval_cdf(&hi) - 1.0).abs() <= 1e-12);
        prop_assert_eq!(model.eval_cdf(&lo), 0.0);
    }

    #[test]
    fn model_interpolates_its_grid_values(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&[3, 6], 2, &mut rng);
        for i in 0..3 {
            for j in 0..6 {
                let x = [model.grid().cutoffs(0)[i], model.grid().cutoffs(1)[j]];
                let a = model.eval_cdf(&x);
                let b = model.eval_grid_point(&[i, j]).unwrap();
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn model_json_round_trip_is_exact(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&[5, 2, 4], 3, &mut rng);
        let back = CpdModel::from_json(&model.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, model);
    }

    #[test]
    fn dense_and_direct_empirical_cdfs_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..3).map(|_| (rng.random_range(0.0..5.0f64) * 2.0).round() / 2.0).collect())
            .collect();
        let data = Dataset::continuous(rows).unwrap();
        let grid = Grid::new(vec![
            vec![0.5, 1.0, 2.5, 4.0],
            vec![1.0, 3.0],
            vec![0.0, 1.5, 2.0, 3.0, 5.0],
        ])
        .unwrap();
        let emp = materialize_empirical(&data, &grid, 1 << 16).unwrap();
        let cells = CellIndex::new(&data, &grid).unwrap();
        lrcdf::empirical::for_each_lattice_index(&grid, |idx| {
            let direct = empirical_at(&data, &grid, idx).unwrap();
            assert_eq!(emp.value(idx), direct);
            assert_eq!(cells.value(idx), direct);
        });
    }
}

#[test]
fn empirical_cdf_is_unbiased() {
    // Monte Carlo mean over repeated datasets matches the true CDF of
    // independent uniforms at every lattice point
    let grid = Grid::new(vec![vec![0.2, 0.5, 0.9], vec![0.1, 0.6, 1.0]]).unwrap();
    let reps = 400;
    let m = 50;
    let mut mean = vec![0.0; 9];
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..reps {
        let rows: Vec<Vec<f64>> = (0..m).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let data = Dataset::continuous(rows).unwrap();
        let emp = materialize_empirical(&data, &grid, 64).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                mean[i * 3 + j] += emp.value(&[i, j]) / reps as f64;
            }
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            let truth = grid.cutoffs(0)[i] * grid.cutoffs(1)[j];
            // standard error of the mean is at most 0.5 / sqrt(reps * m)
            let se = 0.5 / ((reps * m) as f64).sqrt();
            assert!((mean[i * 3 + j] - truth).abs() < 5.0 * se, "{i},{j}: {} vs {truth}", mean[i * 3 + j]);
        }
    }
}

#[test]
fn missing_rows_are_ignored_by_the_empirical_cdf() {
    let rows = vec![vec![0.0, 0.0], vec![f64::NAN, 0.0], vec![1.0, 1.0]];
    let data = Dataset::new(rows, all_continuous(2)).unwrap();
    let grid = Grid::new(vec![vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
    assert_eq!(empirical_at(&data, &grid, &[0, 0]).unwrap(), 0.5);
    let emp = materialize_empirical(&data, &grid, 16).unwrap();
    assert_eq!(emp.value(&[0, 0]), 0.5);
    assert_eq!(emp.value(&[1, 1]), 1.0);
}

#[test]
fn discrete_columns_keep_their_full_support() {
    let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![(i % 7) as f64, i as f64]).collect();
    let data = Dataset::new(rows, vec![VariableKind::Discrete, VariableKind::Continuous]).unwrap();
    let grid = lrcdf::build_grid(&data, &[3, 10], lrcdf::GridReduction::Full).unwrap();
    assert_eq!(grid.cutoffs(0), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    assert_eq!(grid.cutoffs(1).len(), 10);
    assert_eq!(grid.cutoffs(1)[0], 0.0);
    assert_eq!(*grid.cutoffs(1).last().unwrap(), 199.0);
}
