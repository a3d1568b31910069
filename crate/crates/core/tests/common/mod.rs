#![allow(dead_code)]

use lrcdf::{CpdModel, FactorMatrix, Grid, MixtureWeights, VariableKind};
use rand::Rng;

/// A random valid-CDF column of length `rows` built from positive increments.
pub fn random_cdf_column(rows: usize, rng: &mut impl Rng) -> Vec<f64> {
    let inc: Vec<f64> = (0..rows).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = inc.iter().sum();
    let mut acc = 0.0;
    let mut col: Vec<f64> = inc
        .iter()
        .map(|v| {
            acc += v;
            acc / total
        })
        .collect();
    col[rows - 1] = 1.0;
    col
}

pub fn random_weights(rank: usize, rng: &mut impl Rng) -> MixtureWeights {
    let raw: Vec<f64> = (0..rank).map(|_| rng.random::<f64>() + 0.05).collect();
    let s: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|v| v / s).collect();
    let head: f64 = w[..rank - 1].iter().sum();
    w[rank - 1] = (1.0 - head).max(0.0);
    MixtureWeights::new(w).unwrap()
}

/// Strictly increasing cut-offs with random spacing.
pub fn random_cutoffs(levels: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut x = rng.random_range(-3.0..3.0);
    (0..levels)
        .map(|_| {
            x += rng.random_range(0.1..1.5);
            x
        })
        .collect()
}

pub fn random_model(shape: &[usize], rank: usize, rng: &mut impl Rng) -> CpdModel {
    let grid = Grid::new(shape.iter().map(|&l| random_cutoffs(l, rng)).collect()).unwrap();
    let factors = shape
        .iter()
        .map(|&l| {
            let cols: Vec<Vec<f64>> = (0..rank).map(|_| random_cdf_column(l, rng)).collect();
            FactorMatrix::from_columns(&cols).unwrap()
        })
        .collect();
    CpdModel::new(grid, factors, random_weights(rank, rng)).unwrap()
}

pub fn all_continuous(n: usize) -> Vec<VariableKind> {
    vec![VariableKind::Continuous; n]
}

/// Average ranks, ties sharing the mean rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[order[k]] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman correlation as the Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Normalized `bins × bins` histogram over a bounding box; points outside
/// are counted in the nearest edge bin.
pub fn histogram_2d(points: &[Vec<f64>], lo: [f64; 2], hi: [f64; 2], bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins * bins];
    let bin = |x: f64, d: usize| -> usize {
        let t = ((x - lo[d]) / (hi[d] - lo[d]) * bins as f64).floor();
        t.clamp(0.0, (bins - 1) as f64) as usize
    };
    for p in points {
        h[bin(p[0], 0) * bins + bin(p[1], 1)] += 1.0 / points.len() as f64;
    }
    h
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn bounding_box(points: &[Vec<f64>]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    (lo, hi)
}

/// Cell probabilities of a model over its extended grid, first mode fastest.
pub fn cell_pmf(model: &CpdModel) -> Vec<f64> {
    let shape = model.grid().shape();
    let masses: Vec<Vec<Vec<f64>>> = (0..model.ndim())
        .map(|d| (0..model.rank()).map(|h| lrcdf::inference::cell_masses(model, d, h)).collect())
        .collect();
    let total: usize = shape.iter().product();
    let mut idx = vec![0usize; shape.len()];
    let mut out = Vec::with_capacity(total);
    for _ in 0..total {
        let p: f64 = (0..model.rank())
            .map(|h| {
                model.weights()[h]
                    * idx.iter().enumerate().map(|(d, &i)| masses[d][h][i]).product::<f64>()
            })
            .sum();
        out.push(p);
        for d in 0..shape.len() {
            idx[d] += 1;
            if idx[d] < shape[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}

/// Component CDF columns of `fit` compared with `truth` under the best
/// matching of components; returns the max-abs gap and the permutation.
pub fn best_permutation_error(
    fit: &[Vec<Vec<f64>>],
    truth: &[Vec<Vec<f64>>],
) -> (f64, Vec<usize>) {
    let rank = truth[0].len();
    let mut perm: Vec<usize> = (0..rank).collect();
    let mut best = (f64::INFINITY, perm.clone());
    permute(&mut perm, 0, &mut |p| {
        let mut err: f64 = 0.0;
        for d in 0..truth.len() {
            for h in 0..rank {
                for (a, b) in fit[d][p[h]].iter().zip(&truth[d][h]) {
                    err = err.max((a - b).abs());
                }
            }
        }
        if err < best.0 {
            best = (err, p.to_vec());
        }
    });
    best
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

pub fn report(criterion: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion:>2} [{}] {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}
