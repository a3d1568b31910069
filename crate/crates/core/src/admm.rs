//! Alternating optimization with ADMM inner solves (AO-ADMM) on a
//! materialized empirical CDF tensor.
//!
//! Each outer iteration updates the factors one mode at a time and then the
//! mixture weights. Every block is a constrained least-squares problem whose
//! normal matrix is the Hadamard product of small `R × R` Gram matrices, so
//! the Cholesky factor is computed once per block and reused by all inner
//! ADMM iterations. Duals are kept between outer iterations (warm start).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::empirical::EmpiricalCdf;
use crate::error::{Error, Result};
use crate::model::{CpdModel, FactorMatrix, MixtureWeights};
use crate::projections::{simplex_project, valid_cdf_project, valid_cdf_project_in_place};
use crate::tensor::{mttkrp, DenseTensor};

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    pub rank: usize,
    pub outer_iters: usize,
    pub inner_iters: usize,
    /// ADMM penalty; `None` uses `trace(G) / R` of each block's Gram matrix `G`.
    pub rho: Option<f64>,
    /// Stop when the relative objective change falls below this.
    pub tol_outer: f64,
    /// Relative primal and dual residual threshold of the inner loop.
    pub tol_inner: f64,
    pub seed: u64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        AdmmConfig {
            rank: 2,
            outer_iters: 1000,
            inner_iters: 50,
            rho: None,
            tol_outer: 1e-10,
            tol_inner: 1e-4,
            seed: 0,
        }
    }
}

impl AdmmConfig {
    pub fn with_rank(rank: usize) -> Self {
        AdmmConfig {
            rank,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidArgument("rank must be at least 1".into()));
        }
        if let Some(r) = self.rho {
            if !(r > 0.0) {
                return Err(Error::InvalidArgument("rho must be positive".into()));
            }
        }
        if !(self.tol_outer > 0.0 && self.tol_inner > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.outer_iters == 0 || self.inner_iters == 0 {
            return Err(Error::InvalidArgument("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// Result of an AO-ADMM run.
#[derive(Debug, Clone)]
pub struct AdmmFit {
    pub model: CpdModel,
    /// Squared Frobenius residual at initialization and after each outer iteration.
    pub objectives: Vec<f64>,
    /// `‖F̂‖_F²`, for relative errors.
    pub target_norm_sq: f64,
}

impl AdmmFit {
    pub fn objective(&self) -> f64 {
        *self.objectives.last().unwrap_or(&f64::NAN)
    }

    /// `‖F̂ − F‖_F / ‖F̂‖_F` of the returned model.
    pub fn relative_error(&self) -> f64 {
        (self.objective().max(0.0) / self.target_norm_sq).sqrt()
    }
}

/// Random non-negative columns, sorted ascending and projected to valid CDFs.
pub(crate) fn random_factor(rows: usize, rank: usize, rng: &mut impl Rng) -> FactorMatrix {
    let mut f = FactorMatrix::from_row_major(rows, rank, vec![0.0; rows * rank])
        .expect("non-empty factor");
    for h in 0..rank {
        let mut col: Vec<f64> = (0..rows).map(|_| rng.random::<f64>()).collect();
        col.sort_by(f64::total_cmp);
        f.set_column(h, &valid_cdf_project(&col));
    }
    f
}

/// Fits a rank-`cfg.rank` model to a dense empirical CDF tensor.
pub fn fit_admm(
    emp: &EmpiricalCdf,
    cfg: &AdmmConfig,
    mut progress: Option<crate::Progress<'_>>,
) -> Result<AdmmFit> {
    cfg.validate()?;
    let tensor = emp.dense().ok_or_else(|| {
        Error::InvalidArgument("AO-ADMM needs a materialized empirical CDF".into())
    })?;
    let grid = emp.grid().clone();
    let rank = cfg.rank;
    let ndim = grid.ndim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut factors: Vec<FactorMatrix> = grid
        .shape()
        .iter()
        .map(|&rows| random_factor(rows, rank, &mut rng))
        .collect();
    let mut lambda = vec![1.0 / rank as f64; rank];
    let mut duals: Vec<Vec<f64>> = factors.iter().map(|f| vec![0.0; f.as_slice().len()]).collect();
    let mut lambda_dual = vec![0.0; rank];

    let norm_sq = tensor.frobenius_sq();
    let mut grams: Vec<Vec<f64>> = factors.iter().map(FactorMatrix::gram).collect();
    let b = weight_rhs(tensor, &factors);
    let mut objectives = vec![objective(norm_sq, &b, &hadamard_all(&grams, None, rank), &lambda)];

    for iter in 1..=cfg.outer_iters {
        for n in 0..ndim {
            let mut g = hadamard_all(&grams, Some(n), rank);
            for a in 0..rank {
                for c in 0..rank {
                    g[a * rank + c] *= lambda[a] * lambda[c];
                }
            }
            let mut xh = mttkrp(tensor, &factors, n);
            for row in xh.chunks_exact_mut(rank) {
                for (v, l) in row.iter_mut().zip(&lambda) {
                    *v *= l;
                }
            }
            let current = factors[n].as_slice().to_vec();
            let z = admm_block(
                &xh,
                &g,
                rank,
                &current,
                &mut duals[n],
                cfg,
                |m: &mut [f64]| project_columns(m, rank),
            );
            if block_objective(&xh, &g, rank, &z) <= block_objective(&xh, &g, rank, &current) {
                factors[n].as_mut_slice().copy_from_slice(&z);
                grams[n] = factors[n].gram();
            }
        }

        let k = hadamard_all(&grams, None, rank);
        let b = weight_rhs(tensor, &factors);
        let z = admm_block(&b, &k, rank, &lambda, &mut lambda_dual, cfg, |v: &mut [f64]| {
            let p = simplex_project(v);
            v.copy_from_slice(&p);
        });
        if block_objective(&b, &k, rank, &z) <= block_objective(&b, &k, rank, &lambda) {
            lambda = z;
        }

        let obj = objective(norm_sq, &b, &k, &lambda);
        if !obj.is_finite() {
            return Err(Error::Divergence {
                iteration: iter,
                objective: obj,
            });
        }
        if let Some(p) = progress.as_mut() {
            p(iter, obj);
        }
        let prev = *objectives.last().expect("initial objective");
        objectives.push(obj);
        if (prev - obj).abs() <= cfg.tol_outer * prev.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }

    let model = CpdModel::new(grid, factors, MixtureWeights::new(simplex_project(&lambda))?)?;
    Ok(AdmmFit {
        model,
        objectives,
        target_norm_sq: norm_sq,
    })
}

/// Projects each column of a row-major `rows × rank` matrix to a valid CDF.
fn project_columns(m: &mut [f64], rank: usize) {
    let rows = m.len() / rank;
    let mut col = vec![0.0; rows];
    for h in 0..rank {
        for i in 0..rows {
            col[i] = m[i * rank + h];
        }
        valid_cdf_project_in_place(&mut col);
        for i in 0..rows {
            m[i * rank + h] = col[i];
        }
    }
}

/// Solves `min ‖X − A Hᵀ‖²` over the constraint set for a row-major `A`,
/// given `XH` (rows × R) and `G = HᵀH` (R × R). Returns the feasible iterate.
fn admm_block(
    xh: &[f64],
    g: &[f64],
    rank: usize,
    warm: &[f64],
    dual: &mut [f64],
    cfg: &AdmmConfig,
    project: impl Fn(&mut [f64]),
) -> Vec<f64> {
    let trace: f64 = (0..rank).map(|a| g[a * rank + a]).sum();
    let rho = cfg
        .rho
        .unwrap_or(trace / rank as f64)
        .max(1e-12);
    let mut system = DMatrix::from_row_slice(rank, rank, g);
    for a in 0..rank {
        system[(a, a)] += rho;
    }
    let chol = system
        .cholesky()
        .expect("G + rho I is positive definite for rho > 0");

    let rows = xh.len() / rank;
    let mut z = warm.to_vec();
    let mut a = vec![0.0; z.len()];
    let mut rhs = DVector::zeros(rank);
    for _ in 0..cfg.inner_iters {
        for i in 0..rows {
            for c in 0..rank {
                let k = i * rank + c;
                rhs[c] = xh[k] + rho * (z[k] - dual[k]);
            }
            let sol = chol.solve(&rhs);
            a[i * rank..(i + 1) * rank].copy_from_slice(sol.as_slice());
        }
        let z_old = z.clone();
        for ((zk, ak), uk) in z.iter_mut().zip(&a).zip(dual.iter()) {
            *zk = ak + uk;
        }
        project(&mut z);
        let mut primal = 0.0;
        let mut change = 0.0;
        for k in 0..z.len() {
            let r = a[k] - z[k];
            dual[k] += r;
            primal += r * r;
            change += (z[k] - z_old[k]).powi(2);
        }
        let z_norm: f64 = z.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
        let u_norm: f64 = dual.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
        if (primal / z_norm).sqrt() < cfg.tol_inner
            && rho * (change / u_norm).sqrt() < cfg.tol_inner
        {
            break;
        }
    }
    z
}

/// `−2 tr(Aᵀ XH) + tr(A G Aᵀ)`: the block objective up to a constant.
fn block_objective(xh: &[f64], g: &[f64], rank: usize, a: &[f64]) -> f64 {
    let mut total = 0.0;
    for (row, xrow) in a.chunks_exact(rank).zip(xh.chunks_exact(rank)) {
        for p in 0..rank {
            let mut gp = 0.0;
            for q in 0..rank {
                gp += g[p * rank + q] * row[q];
            }
            total += row[p] * gp - 2.0 * row[p] * xrow[p];
        }
    }
    total
}

/// Hadamard product of the Gram matrices, optionally skipping one mode.
fn hadamard_all(grams: &[Vec<f64>], skip: Option<usize>, rank: usize) -> Vec<f64> {
    let mut out = vec![1.0; rank * rank];
    for (k, g) in grams.iter().enumerate() {
        if Some(k) != skip {
            for (o, v) in out.iter_mut().zip(g) {
                *o *= v;
            }
        }
    }
    out
}

/// `b_h = Σ_i F̂(i) Π_n A_n(i_n, h)`, the right-hand side of the weight update.
fn weight_rhs(tensor: &DenseTensor, factors: &[FactorMatrix]) -> Vec<f64> {
    let rank = factors[0].cols();
    let m = mttkrp(tensor, factors, 0);
    let mut b = vec![0.0; rank];
    for (i, row) in m.chunks_exact(rank).enumerate() {
        for h in 0..rank {
            b[h] += row[h] * factors[0].get(i, h);
        }
    }
    b
}

fn objective(norm_sq: f64, b: &[f64], k: &[f64], lambda: &[f64]) -> f64 {
    let rank = lambda.len();
    let mut quad = 0.0;
    for p in 0..rank {
        for q in 0..rank {
            quad += lambda[p] * k[p * rank + q] * lambda[q];
        }
    }
    let lin: f64 = b.iter().zip(lambda).map(|(x, y)| x * y).sum();
    norm_sq - 2.0 * lin + quad
}
