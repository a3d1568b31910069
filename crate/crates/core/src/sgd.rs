//! Stochastic fitting with projected Adam, without materializing the tensor.
//!
//! Each step samples lattice points, computes their empirical CDF values from
//! the training rows, and takes an Adam step on the squared error of the CP
//! prediction. Only the factor rows selected by the batch receive updates;
//! afterwards every factor column is mapped back to a valid CDF and the
//! weights back onto the simplex.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::admm::random_factor;
use crate::empirical::{CellIndex, Dataset};
use crate::error::{Error, Result};
use crate::model::{CpdModel, FactorMatrix, Grid, MixtureWeights};
use crate::projections::{simplex_project, valid_cdf_project_in_place};

/// Where each batch's empirical targets come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetSampling {
    /// Evaluate targets against every training row (unbiased, `O(M)` per point).
    #[default]
    FullData,
    /// Evaluate targets against a random subset of this many training rows per
    /// step. Cheaper and noisier.
    DataMinibatch(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdConfig {
    pub rank: usize,
    /// Lattice points per step.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    /// Number of validation evaluations without improvement before stopping.
    pub patience: usize,
    /// Steps between validation evaluations.
    pub eval_every: usize,
    /// Size of the fixed validation point set (capped by the lattice size).
    pub val_points: usize,
    pub val_fraction: f64,
    pub targets: TargetSampling,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            rank: 2,
            batch_size: 128,
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_iter: 20_000,
            patience: 20,
            eval_every: 50,
            val_points: 2048,
            val_fraction: 0.2,
            targets: TargetSampling::FullData,
            seed: 0,
        }
    }
}

impl SgdConfig {
    pub fn with_rank(rank: usize) -> Self {
        SgdConfig {
            rank,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rank == 0 || self.batch_size == 0 || self.patience == 0 || self.eval_every == 0 {
            return Err(Error::InvalidArgument(
                "rank, batch size, patience and evaluation interval must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::InvalidArgument("validation fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Unconstrained view of the CP parameters used by the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct CpParams {
    pub factors: Vec<FactorMatrix>,
    pub lambda: Vec<f64>,
}

/// Gradient of a single-point loss. Only the rows named by the point are nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGradient {
    pub lambda: Vec<f64>,
    /// `rows[n][h]` is `∂L/∂A_n(i_n, h)`.
    pub rows: Vec<Vec<f64>>,
}

impl CpParams {
    pub fn from_model(model: &CpdModel) -> Self {
        CpParams {
            factors: model.factors().to_vec(),
            lambda: model.weights().to_vec(),
        }
    }

    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    pub fn predict(&self, idx: &[usize]) -> f64 {
        (0..self.rank())
            .map(|h| {
                self.lambda[h]
                    * self
                        .factors
                        .iter()
                        .zip(idx)
                        .map(|(f, &i)| f.get(i, h))
                        .product::<f64>()
            })
            .sum()
    }

    /// `(target − prediction)²`.
    pub fn point_loss(&self, idx: &[usize], target: f64) -> f64 {
        (target - self.predict(idx)).powi(2)
    }

    pub fn point_gradient(&self, idx: &[usize], target: f64) -> PointGradient {
        let mut g = PointGradient {
            lambda: vec![0.0; self.rank()],
            rows: vec![vec![0.0; self.rank()]; self.factors.len()],
        };
        self.accumulate_gradient(idx, target, 1.0, &mut g);
        g
    }

    fn accumulate_gradient(&self, idx: &[usize], target: f64, scale: f64, g: &mut PointGradient) -> f64 {
        let n = self.factors.len();
        let rank = self.rank();
        let mut prefix = vec![1.0; n + 1];
        let mut suffix = vec![1.0; n + 1];
        let mut full = vec![0.0; rank];
        let mut pred = 0.0;
        // leave-one-out products per component via prefix/suffix sweeps
        let mut loo = vec![vec![0.0; rank]; n];
        for h in 0..rank {
            for k in 0..n {
                prefix[k + 1] = prefix[k] * self.factors[k].get(idx[k], h);
            }
            for k in (0..n).rev() {
                suffix[k] = suffix[k + 1] * self.factors[k].get(idx[k], h);
            }
            full[h] = prefix[n];
            for k in 0..n {
                loo[k][h] = prefix[k] * suffix[k + 1];
            }
            pred += self.lambda[h] * full[h];
        }
        let resid = pred - target;
        let c = 2.0 * resid * scale;
        for h in 0..rank {
            g.lambda[h] += c * full[h];
            for k in 0..n {
                g.rows[k][h] += c * self.lambda[h] * loo[k][h];
            }
        }
        resid * resid
    }

    pub fn into_model(self, grid: Grid) -> Result<CpdModel> {
        CpdModel::new(grid, self.factors, MixtureWeights::new(self.lambda)?)
    }
}

/// Adam with projection onto the feasible set after every step.
#[derive(Debug, Clone)]
pub struct ProjectedAdam {
    params: CpParams,
    m_factors: Vec<Vec<f64>>,
    v_factors: Vec<Vec<f64>>,
    m_lambda: Vec<f64>,
    v_lambda: Vec<f64>,
    step: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl ProjectedAdam {
    pub fn new(params: CpParams, cfg: &SgdConfig) -> Self {
        let m_factors: Vec<Vec<f64>> = params
            .factors
            .iter()
            .map(|f| vec![0.0; f.as_slice().len()])
            .collect();
        let rank = params.rank();
        ProjectedAdam {
            v_factors: m_factors.clone(),
            m_factors,
            m_lambda: vec![0.0; rank],
            v_lambda: vec![0.0; rank],
            params,
            step: 0,
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.epsilon,
        }
    }

    pub fn params(&self) -> &CpParams {
        &self.params
    }

    /// One projected Adam step on the mean squared error of a batch of
    /// `(lattice index, target)` pairs. Returns the batch loss before the step.
    pub fn step(&mut self, batch: &[(Vec<usize>, f64)]) -> f64 {
        let ndim = self.params.factors.len();
        let rank = self.params.rank();
        let scale = 1.0 / batch.len() as f64;
        let mut lambda_grad = vec![0.0; rank];
        // per-dimension sparse row gradients keyed by row index
        let mut row_grads: Vec<HashMap<usize, Vec<f64>>> = vec![HashMap::new(); ndim];
        let mut loss = 0.0;
        let mut g = PointGradient {
            lambda: vec![0.0; rank],
            rows: vec![vec![0.0; rank]; ndim],
        };
        for (idx, target) in batch {
            g.lambda.iter_mut().for_each(|v| *v = 0.0);
            g.rows.iter_mut().for_each(|r| r.iter_mut().for_each(|v| *v = 0.0));
            loss += scale * self.params.accumulate_gradient(idx, *target, scale, &mut g);
            for (acc, v) in lambda_grad.iter_mut().zip(&g.lambda) {
                *acc += v;
            }
            for (k, &i) in idx.iter().enumerate() {
                let e = row_grads[k].entry(i).or_insert_with(|| vec![0.0; rank]);
                for (acc, v) in e.iter_mut().zip(&g.rows[k]) {
                    *acc += v;
                }
            }
        }

        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, grad: f64| {
            *m = b1 * *m + (1.0 - b1) * grad;
            *v = b2 * *v + (1.0 - b2) * grad * grad;
            *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
        };
        for h in 0..rank {
            update(
                &mut self.params.lambda[h],
                &mut self.m_lambda[h],
                &mut self.v_lambda[h],
                lambda_grad[h],
            );
        }
        for (k, rows) in row_grads.iter().enumerate() {
            let vals = self.params.factors[k].as_mut_slice();
            for (&i, grad) in rows {
                for h in 0..rank {
                    let j = i * rank + h;
                    update(
                        &mut vals[j],
                        &mut self.m_factors[k][j],
                        &mut self.v_factors[k][j],
                        grad[h],
                    );
                }
            }
        }

        for (k, rows) in row_grads.iter().enumerate() {
            if rows.is_empty() {
                continue;
            }
            let f = &mut self.params.factors[k];
            for h in 0..rank {
                let mut col = f.column(h);
                valid_cdf_project_in_place(&mut col);
                f.set_column(h, &col);
            }
        }
        self.params.lambda = simplex_project(&self.params.lambda);
        loss
    }
}

/// Result of a projected-Adam run.
#[derive(Debug, Clone)]
pub struct SgdFit {
    pub model: CpdModel,
    /// Validation MSE at initialization.
    pub initial_val_mse: f64,
    /// Validation MSE of the returned parameters.
    pub best_val_mse: f64,
    /// `(step, validation MSE)` at every evaluation.
    pub val_history: Vec<(usize, f64)>,
    pub steps: usize,
}

/// Fits a model by projected Adam on sampled lattice points.
///
/// `data` is split into training and validation rows by `cfg.val_fraction`.
/// The returned parameters are those with the best validation MSE, measured on
/// a fixed set of lattice points against the validation rows' empirical CDF.
pub fn fit_sgd(
    data: &Dataset,
    grid: &Grid,
    cfg: &SgdConfig,
    mut progress: Option<crate::Progress<'_>>,
) -> Result<SgdFit> {
    cfg.validate()?;
    if data.ncols() != grid.ndim() {
        return Err(Error::Schema("dataset and grid dimensions differ".into()));
    }
    let data = data.complete_only()?;
    let (train, val) = data.split(cfg.val_fraction, cfg.seed ^ 0x5eed)?;
    let train_cells = CellIndex::new(&train, grid)?;
    let val_cells = CellIndex::new(&val, grid)
        .map_err(|_| Error::InvalidArgument("empty validation set".into()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let shape = grid.shape();
    let val_idx = validation_points(grid, cfg.val_points, &mut rng);
    let val_targets: Vec<f64> = val_idx.iter().map(|i| val_cells.value(i)).collect();

    let params = CpParams {
        factors: shape
            .iter()
            .map(|&rows| random_factor(rows, cfg.rank, &mut rng))
            .collect(),
        lambda: vec![1.0 / cfg.rank as f64; cfg.rank],
    };
    let val_mse = |p: &CpParams| -> f64 {
        val_idx
            .iter()
            .zip(&val_targets)
            .map(|(i, &t)| p.point_loss(i, t))
            .sum::<f64>()
            / val_idx.len() as f64
    };
    let initial_val_mse = val_mse(&params);
    let mut best = (initial_val_mse, params.clone());
    let mut history = vec![(0, initial_val_mse)];
    let mut opt = ProjectedAdam::new(params, cfg);
    let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut stale = 0;
    let mut steps = 0;

    for step in 1..=cfg.max_iter {
        let batch: Vec<(Vec<usize>, f64)> = match cfg.targets {
            TargetSampling::FullData => (0..cfg.batch_size)
                .map(|_| {
                    let idx: Vec<usize> = shape.iter().map(|&s| rng.random_range(0..s)).collect();
                    let t = *cache
                        .entry(idx.clone())
                        .or_insert_with(|| train_cells.value(&idx));
                    (idx, t)
                })
                .collect(),
            TargetSampling::DataMinibatch(rows) => {
                let picks: Vec<usize> = (0..rows.max(1))
                    .map(|_| rng.random_range(0..train.nrows()))
                    .collect();
                let sub = CellIndex::new(&train.select_rows(&picks)?, grid)?;
                (0..cfg.batch_size)
                    .map(|_| {
                        let idx: Vec<usize> =
                            shape.iter().map(|&s| rng.random_range(0..s)).collect();
                        let t = sub.value(&idx);
                        (idx, t)
                    })
                    .collect()
            }
        };
        let loss = opt.step(&batch);
        steps = step;
        if !loss.is_finite() {
            return Err(Error::Divergence {
                iteration: step,
                objective: loss,
            });
        }
        if step % cfg.eval_every == 0 {
            let mse = val_mse(opt.params());
            if !mse.is_finite() {
                return Err(Error::Divergence {
                    iteration: step,
                    objective: mse,
                });
            }
            history.push((step, mse));
            if let Some(p) = progress.as_mut() {
                p(step, mse);
            }
            if mse < best.0 {
                best = (mse, opt.params().clone());
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience {
                    break;
                }
            }
        }
    }

    let (best_val_mse, params) = best;
    Ok(SgdFit {
        model: params.into_model(grid.clone())?,
        initial_val_mse,
        best_val_mse,
        val_history: history,
        steps,
    })
}

/// The full lattice when it has at most `count` points, else `count` uniform draws.
pub(crate) fn validation_points(grid: &Grid, count: usize, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let shape = grid.shape();
    if grid.lattice_size() <= count {
        let mut out = Vec::with_capacity(grid.lattice_size());
        crate::empirical::for_each_lattice_index(grid, |i| out.push(i.to_vec()));
        out
    } else {
        (0..count)
            .map(|_| shape.iter().map(|&s| rng.random_range(0..s)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_params(seed: u64, shape: &[usize], rank: usize) -> CpParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CpParams {
            factors: shape.iter().map(|&r| random_factor(r, rank, &mut rng)).collect(),
            lambda: simplex_project(&(0..rank).map(|_| rng.random::<f64>()).collect::<Vec<_>>()),
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = random_params(11, &[5, 4, 6], 3);
        let idx = [2, 1, 4];
        let target = 0.37;
        let g = p.point_gradient(&idx, target);
        let h = 1e-5;
        for r in 0..3 {
            let mut a = p.clone();
            let mut b = p.clone();
            a.lambda[r] += h;
            b.lambda[r] -= h;
            let fd = (a.point_loss(&idx, target) - b.point_loss(&idx, target)) / (2.0 * h);
            assert!((fd - g.lambda[r]).abs() <= 1e-6 * (1.0 + fd.abs()));
        }
        for n in 0..3 {
            for r in 0..3 {
                let mut a = p.clone();
                let mut b = p.clone();
                let v = a.factors[n].get(idx[n], r);
                a.factors[n].set(idx[n], r, v + h);
                b.factors[n].set(idx[n], r, v - h);
                let fd = (a.point_loss(&idx, target) - b.point_loss(&idx, target)) / (2.0 * h);
                assert!((fd - g.rows[n][r]).abs() <= 1e-6 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn tiny_step_moves_parameters_by_order_lr() {
        let p = random_params(5, &[6, 6], 2);
        let lr = 1e-7;
        let cfg = SgdConfig {
            learning_rate: lr,
            ..SgdConfig::with_rank(2)
        };
        let mut opt = ProjectedAdam::new(p.clone(), &cfg);
        opt.step(&[(vec![2, 3], 0.9), (vec![1, 5], 0.1)]);
        let moved = opt
            .params()
            .factors
            .iter()
            .zip(&p.factors)
            .flat_map(|(a, b)| a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()))
            .chain(opt.params().lambda.iter().zip(&p.lambda).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        assert!(moved > 0.0 && moved <= 3.0 * lr, "moved {moved}");
    }

    #[test]
    fn step_keeps_feasibility() {
        let p = random_params(8, &[5, 7], 3);
        let mut opt = ProjectedAdam::new(p, &SgdConfig { learning_rate: 0.5, ..SgdConfig::with_rank(3) });
        for s in 0..20 {
            opt.step(&[(vec![s % 5, s % 7], (s as f64 / 20.0)), (vec![4, 6], 1.0)]);
            let model = opt.params().clone().into_model(
                Grid::new(vec![(0..5).map(f64::from).collect(), (0..7).map(f64::from).collect()]).unwrap(),
            );
            assert!(model.is_ok());
        }
    }

    #[test]
    fn config_errors() {
        let data = Dataset::continuous((0..20).map(|i| vec![i as f64, (i * 3 % 7) as f64]).collect()).unwrap();
        let grid = crate::build_grid(&data, &[4, 4], Default::default()).unwrap();
        let bad = SgdConfig { val_fraction: 1.0, ..SgdConfig::with_rank(1) };
        assert!(fit_sgd(&data, &grid, &bad, None).is_err());
        let bad = SgdConfig { learning_rate: 0.0, ..SgdConfig::with_rank(1) };
        assert!(fit_sgd(&data, &grid, &bad, None).is_err());
    }
}
