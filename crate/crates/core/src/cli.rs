//! Batch workflows behind the `lrcdf` binary: training with validation-based
//! model selection, evaluation, sampling, imputation, classification and
//! plot-data export. Each function is deterministic given its seed.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{fit_admm, AdmmConfig};
use crate::copula::fit_marginals;
use crate::empirical::{build_grid, materialize_empirical, CellIndex, Dataset, GridReduction};
use crate::error::{Error, Result};
use crate::inference::{self, ZeroLikelihoodPolicy};
use crate::io::{format_f64, write_csv};
use crate::model::{Affine, CpdModel, Meta, VariableKind};
use crate::sgd::{fit_sgd, validation_points, SgdConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Fit the CDF of z-scored data directly.
    #[default]
    Cdf,
    /// Fit the copula of probability-integral-transformed data.
    Copula,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Fitter {
    Admm,
    Sgd,
    /// AO-ADMM when the lattice fits under the dense cap, projected Adam otherwise.
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub fitter: Fitter,
    pub ranks: Vec<usize>,
    pub levels: Vec<usize>,
    pub val_fraction: f64,
    pub seed: u64,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Outer iterations for AO-ADMM, steps for projected Adam; `None` keeps
    /// each fitter's default.
    pub max_iter: Option<usize>,
    pub patience: usize,
    pub dense_cap: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::Cdf,
            fitter: Fitter::Auto,
            ranks: vec![10, 20, 30, 50, 80, 100],
            levels: vec![10, 20, 30, 50],
            val_fraction: 0.2,
            seed: 0,
            batch_size: SgdConfig::default().batch_size,
            learning_rate: 0.01,
            max_iter: None,
            patience: SgdConfig::default().patience,
            dense_cap: 1 << 22,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub rank: usize,
    pub levels: usize,
    pub fitter: Fitter,
    pub val_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub mode: Mode,
    pub train_rows: usize,
    pub val_rows: usize,
    pub candidates: Vec<Candidate>,
    pub best_rank: usize,
    pub best_levels: usize,
}

/// Held-out validation MSE of a model's grid values against the empirical CDF
/// of `val` (latent coordinates) on a fixed random set of lattice points.
pub fn validation_mse(model: &CpdModel, val: &Dataset, seed: u64) -> Result<f64> {
    let cells = CellIndex::new(val, model.grid())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = validation_points(model.grid(), 2048, &mut rng);
    let sse: f64 = points
        .iter()
        .map(|i| (cells.value(i) - model.eval_grid_point(i).unwrap_or(f64::NAN)).powi(2))
        .sum();
    Ok(sse / points.len() as f64)
}

/// Fits one model per `(rank, levels)` candidate on a training split and keeps
/// the one with the lowest validation MSE.
pub fn train(data: &Dataset, cfg: &TrainConfig) -> Result<(CpdModel, TrainReport)> {
    if cfg.ranks.is_empty() || cfg.levels.is_empty() {
        return Err(Error::InvalidArgument("candidate sets must be non-empty".into()));
    }
    let complete = data.complete_only()?;
    let (train_raw, val_raw) = complete.split(cfg.val_fraction, cfg.seed)?;
    let ndim = data.ncols();

    let (standardization, copula) = match cfg.mode {
        Mode::Cdf => (Some(standardize(&train_raw)?), None),
        Mode::Copula => (None, Some(fit_marginals(train_raw.as_flat(), ndim)?)),
    };
    let to_latent = |d: &Dataset| -> Dataset {
        match (&standardization, &copula) {
            (Some(s), _) => d.map_columns(|c, x| (x - s[c].shift) / s[c].scale),
            (_, Some(t)) => d.map_columns(|c, x| t[c].forward(x)),
            _ => d.clone(),
        }
    };
    let train_lat = to_latent(&train_raw);
    let val_lat = to_latent(&val_raw);

    let pairs: Vec<(usize, usize)> = cfg
        .ranks
        .iter()
        .flat_map(|&r| cfg.levels.iter().map(move |&i| (r, i)))
        .collect();
    let fitted: Vec<Result<(CpdModel, Candidate)>> = pairs
        .par_iter()
        .map(|&(rank, levels)| fit_candidate(&train_lat, &val_lat, rank, levels, cfg))
        .collect();
    let mut best: Option<(CpdModel, f64, usize, usize)> = None;
    let mut candidates = Vec::with_capacity(fitted.len());
    for r in fitted {
        let (model, cand) = r?;
        if best.as_ref().is_none_or(|b| cand.val_mse < b.1) {
            best = Some((model, cand.val_mse, cand.rank, cand.levels));
        }
        candidates.push(cand);
    }
    let (model, _, best_rank, best_levels) = best.expect("at least one candidate");

    let meta = Meta {
        names: data.names().to_vec(),
        kinds: data.kinds().to_vec(),
        standardization,
    };
    let model = CpdModel::with_parts(
        model.grid().clone(),
        model.factors().to_vec(),
        crate::model::MixtureWeights::new(model.weights().to_vec())?,
        copula,
        meta,
    )?;
    let report = TrainReport {
        mode: cfg.mode,
        train_rows: train_raw.nrows(),
        val_rows: val_raw.nrows(),
        candidates,
        best_rank,
        best_levels,
    };
    Ok((model, report))
}

fn fit_candidate(
    train: &Dataset,
    val: &Dataset,
    rank: usize,
    levels: usize,
    cfg: &TrainConfig,
) -> Result<(CpdModel, Candidate)> {
    let grid = build_grid(train, &vec![levels; train.ncols()], GridReduction::Full)?;
    let seed = cfg.seed ^ ((rank as u64) << 32) ^ levels as u64;
    let use_admm = match cfg.fitter {
        Fitter::Admm => true,
        Fitter::Sgd => false,
        Fitter::Auto => grid.lattice_size() <= cfg.dense_cap,
    };
    // discrete kinds matter for interpolation during inference, not fitting
    let model = if use_admm {
        let emp = materialize_empirical(train, &grid, cfg.dense_cap)?;
        let mut acfg = AdmmConfig {
            seed,
            ..AdmmConfig::with_rank(rank)
        };
        if let Some(m) = cfg.max_iter {
            acfg.outer_iters = m;
        }
        fit_admm(&emp, &acfg, None)?.model
    } else {
        let mut scfg = SgdConfig {
            batch_size: cfg.batch_size,
            learning_rate: cfg.learning_rate,
            patience: cfg.patience,
            val_fraction: cfg.val_fraction,
            seed,
            ..SgdConfig::with_rank(rank)
        };
        if let Some(m) = cfg.max_iter {
            scfg.max_iter = m;
        }
        fit_sgd(train, &grid, &scfg, None)?.model
    };
    let model = CpdModel::with_parts(
        model.grid().clone(),
        model.factors().to_vec(),
        crate::model::MixtureWeights::new(model.weights().to_vec())?,
        None,
        Meta {
            names: train.names().to_vec(),
            kinds: train.kinds().to_vec(),
            standardization: None,
        },
    )?;
    let val_mse = validation_mse(&model, val, cfg.seed)?;
    Ok((
        model,
        Candidate {
            rank,
            levels,
            fitter: if use_admm { Fitter::Admm } else { Fitter::Sgd },
            val_mse,
        },
    ))
}

/// Per-column z-scoring for continuous columns; discrete columns are left as is.
fn standardize(data: &Dataset) -> Result<Vec<Affine>> {
    (0..data.ncols())
        .map(|d| {
            if data.kinds()[d] == VariableKind::Discrete {
                return Ok(Affine::IDENTITY);
            }
            let col = data.column(d);
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            if !(var > 0.0) {
                return Err(Error::DegenerateDimension { dim: d });
            }
            Ok(Affine {
                shift: mean,
                scale: var.sqrt(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimStats {
    pub name: String,
    /// Largest gap between the model's marginal CDF and the data's ECDF.
    pub ks_distance: f64,
    /// Model marginal mean minus data mean.
    pub mean_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: usize,
    pub mean_log_likelihood: f64,
    pub dimensions: Vec<DimStats>,
}

fn check_schema(model: &CpdModel, data: &Dataset) -> Result<()> {
    if data.ncols() != model.ndim() {
        return Err(Error::Schema(format!(
            "data has {} columns, model has {} dimensions",
            data.ncols(),
            model.ndim()
        )));
    }
    if data.names() != model.meta().names.as_slice() {
        return Err(Error::Schema(format!(
            "column names {:?} differ from model variables {:?}",
            data.names(),
            model.meta().names
        )));
    }
    Ok(())
}

pub fn evaluate(model: &CpdModel, data: &Dataset) -> Result<EvalReport> {
    check_schema(model, data)?;
    let complete = data.complete_only()?;
    let mean_log_likelihood = inference::log_likelihood(model, &complete)?;
    let dimensions = (0..model.ndim())
        .map(|d| {
            let marginal = inference::marginalize(model, &[d])?;
            let mut col = complete.column(d);
            col.sort_by(f64::total_cmp);
            let n = col.len() as f64;
            let mut ks: f64 = 0.0;
            for (i, &x) in col.iter().enumerate() {
                if i + 1 < col.len() && col[i + 1] == x {
                    continue;
                }
                let below = col.partition_point(|&v| v < x) as f64 / n;
                let upto = (i + 1) as f64 / n;
                let f = marginal.eval_cdf(&[x]);
                ks = ks.max((f - upto).abs()).max((f - below).abs());
            }
            let data_mean = col.iter().sum::<f64>() / n;
            let model_mean = model_mean(&marginal);
            Ok(DimStats {
                name: model.meta().names[d].clone(),
                ks_distance: ks,
                mean_error: model_mean - data_mean,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        rows: complete.nrows(),
        mean_log_likelihood,
        dimensions,
    })
}

fn model_mean(marginal: &CpdModel) -> f64 {
    if marginal.is_copula() {
        // midpoint rule over the inverse CDF
        let k = 2000;
        let mut total = 0.0;
        for j in 0..k {
            let p = (j as f64 + 0.5) / k as f64;
            let mut acc = 0.0;
            for (h, &w) in marginal.weights().iter().enumerate() {
                acc += w * marginal.from_latent(0, inference::sample_component(marginal, 0, h, p));
            }
            total += acc;
        }
        return total / k as f64;
    }
    let (mean, _) = inference::conditional_moments(marginal, 0, marginal.weights());
    marginal.from_latent(0, mean)
}

pub fn sample_rows(model: &CpdModel, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(inference::sample(model, count, &mut rng))
}

/// Completed rows and, per row, which cells were imputed.
pub fn impute_rows(model: &CpdModel, data: &Dataset) -> Result<Vec<(Vec<f64>, Vec<bool>)>> {
    check_schema(model, data)?;
    data.rows()
        .map(|row| {
            let mask: Vec<bool> = row.iter().map(|v| v.is_nan()).collect();
            if mask.iter().all(|&m| m) {
                return Err(Error::InsufficientData("row with every value missing".into()));
            }
            let filled = inference::impute(model, row, ZeroLikelihoodPolicy::Uniform)?;
            Ok((filled, mask))
        })
        .collect()
}

pub fn classify_rows(
    model: &CpdModel,
    data: &Dataset,
    label: &str,
) -> Result<Vec<inference::Classification>> {
    check_schema(model, data)?;
    let dim = model
        .meta()
        .names
        .iter()
        .position(|n| n == label)
        .ok_or_else(|| Error::Schema(format!("no column named {label:?}")))?;
    data.rows()
        .map(|row| {
            let mut x = row.to_vec();
            x[dim] = f64::NAN;
            inference::classify(model, &x, dim, ZeroLikelihoodPolicy::Uniform)
        })
        .collect()
}

/// Density and CDF of the 2-D marginal over `dims` at the centres of a
/// `resolution × resolution` lattice spanning the outer cut-offs.
pub fn plot_data(model: &CpdModel, dims: (usize, usize), resolution: usize) -> Result<Vec<[f64; 4]>> {
    if dims.0 == dims.1 || resolution == 0 {
        return Err(Error::InvalidArgument("need two distinct dimensions and resolution >= 1".into()));
    }
    let marginal = inference::marginalize(model, &[dims.0, dims.1])?;
    let axis = |d: usize| -> Vec<f64> {
        let c = marginal.grid().cutoffs(d);
        let lo = marginal.from_latent(d, c[0]);
        let hi = marginal.from_latent(d, c[c.len() - 1]);
        (0..resolution)
            .map(|k| lo + (hi - lo) * (k as f64 + 0.5) / resolution as f64)
            .collect()
    };
    let (xs, ys) = (axis(0), axis(1));
    let mut out = Vec::with_capacity(resolution * resolution);
    for &x in &xs {
        for &y in &ys {
            out.push([x, y, inference::density(&marginal, &[x, y]), marginal.eval_cdf(&[x, y])]);
        }
    }
    Ok(out)
}

pub fn write_samples(out: impl Write, model: &CpdModel, rows: Vec<Vec<f64>>) -> Result<()> {
    write_csv(out, &model.meta().names, rows)
}

pub fn write_imputed(out: impl Write, model: &CpdModel, rows: Vec<(Vec<f64>, Vec<bool>)>) -> Result<()> {
    let mut header = model.meta().names.clone();
    header.extend(model.meta().names.iter().map(|n| format!("{n}_imputed")));
    write_csv(
        out,
        &header,
        rows.into_iter().map(|(mut v, m)| {
            v.extend(m.iter().map(|&b| f64::from(u8::from(b))));
            v
        }),
    )
}

pub fn write_classified(out: impl Write, label: &str, rows: &[inference::Classification]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let classes = rows.first().map(|r| r.classes.clone()).unwrap_or_default();
    let mut header = vec![format!("{label}_predicted")];
    header.extend(classes.iter().map(|c| format!("p_{}", format_f64(*c))));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![format_f64(r.label)];
        rec.extend(r.probabilities.iter().map(|p| format_f64(*p)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_plot_data(out: impl Write, model: &CpdModel, dims: (usize, usize), cells: &[[f64; 4]]) -> Result<()> {
    let names = &model.meta().names;
    let header = vec![names[dims.0].clone(), names[dims.1].clone(), "density".into(), "cdf".into()];
    write_csv(out, &header, cells.iter().map(|c| c.to_vec()))
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}
