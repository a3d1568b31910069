//! Datasets, evaluation grids and the grid-sampled empirical CDF.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Grid, VariableKind};
use crate::tensor::{advance, DenseTensor};

/// An `M × N` sample matrix with per-column kinds. Missing cells are `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<f64>,
    nrows: usize,
    ncols: usize,
    kinds: Vec<VariableKind>,
    names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from rows; `NaN` marks a missing cell.
    pub fn new(rows: Vec<Vec<f64>>, kinds: Vec<VariableKind>) -> Result<Self> {
        let ncols = kinds.len();
        if rows.is_empty() || ncols == 0 {
            return Err(Error::InsufficientData("dataset needs M >= 1 and N >= 1".into()));
        }
        let nrows = rows.len();
        let mut samples = Vec::with_capacity(nrows * ncols);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != ncols {
                return Err(Error::Schema(format!(
                    "row {i} has {} values, expected {ncols}",
                    r.len()
                )));
            }
            samples.extend(r);
        }
        Self::from_flat(samples, ncols, kinds)
    }

    /// Builds a dataset from a row-major buffer.
    pub fn from_flat(samples: Vec<f64>, ncols: usize, kinds: Vec<VariableKind>) -> Result<Self> {
        if ncols == 0 || samples.is_empty() || samples.len() % ncols != 0 {
            return Err(Error::InsufficientData("dataset needs M >= 1 and N >= 1".into()));
        }
        if kinds.len() != ncols {
            return Err(Error::Schema("kind count does not match column count".into()));
        }
        if samples.iter().any(|v| v.is_infinite()) {
            return Err(Error::InvalidArgument("infinite sample value".into()));
        }
        Ok(Dataset {
            nrows: samples.len() / ncols,
            ncols,
            samples,
            kinds,
            names: (0..ncols).map(|d| format!("x{d}")).collect(),
        })
    }

    pub fn continuous(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        Self::new(rows, vec![VariableKind::Continuous; n])
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.ncols {
            return Err(Error::Schema("name count does not match column count".into()));
        }
        self.names = names;
        Ok(self)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn kinds(&self) -> &[VariableKind] {
        &self.kinds
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.samples[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.chunks_exact(self.ncols)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.samples
    }

    pub fn is_missing(&self, i: usize, d: usize) -> bool {
        self.samples[i * self.ncols + d].is_nan()
    }

    pub fn has_missing(&self) -> bool {
        self.samples.iter().any(|v| v.is_nan())
    }

    /// Missingness mask, `true` where a cell is missing.
    pub fn mask(&self) -> Vec<bool> {
        self.samples.iter().map(|v| v.is_nan()).collect()
    }

    /// Observed values of one column.
    pub fn column(&self, d: usize) -> Vec<f64> {
        self.rows().map(|r| r[d]).filter(|v| !v.is_nan()).collect()
    }

    pub fn complete_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows().filter(|r| r.iter().all(|v| !v.is_nan()))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        let mut samples = Vec::with_capacity(rows.len() * self.ncols);
        for &i in rows {
            samples.extend_from_slice(self.row(i));
        }
        let mut d = Dataset::from_flat(samples, self.ncols, self.kinds.clone())?;
        d.names = self.names.clone();
        Ok(d)
    }

    pub fn complete_only(&self) -> Result<Dataset> {
        let keep: Vec<usize> = (0..self.nrows)
            .filter(|&i| self.row(i).iter().all(|v| !v.is_nan()))
            .collect();
        if keep.is_empty() {
            return Err(Error::InsufficientData("no complete rows".into()));
        }
        self.select_rows(&keep)
    }

    /// Random train/validation split of rows; the validation part holds
    /// `round(val_fraction · M)` rows (at least one).
    pub fn split(&self, val_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(val_fraction > 0.0 && val_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "validation fraction {val_fraction} outside (0, 1)"
            )));
        }
        let n_val = ((self.nrows as f64 * val_fraction).round() as usize).max(1);
        if n_val >= self.nrows {
            return Err(Error::InsufficientData("too few rows to split".into()));
        }
        let mut perm: Vec<usize> = (0..self.nrows).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..perm.len()).rev() {
            let j = rng.random_range(0..=i);
            perm.swap(i, j);
        }
        let (val, train) = perm.split_at(n_val);
        let mut train = train.to_vec();
        let mut val = val.to_vec();
        train.sort_unstable();
        val.sort_unstable();
        Ok((self.select_rows(&train)?, self.select_rows(&val)?))
    }

    /// Applies a per-column map to every observed cell.
    pub fn map_columns(&self, f: impl Fn(usize, f64) -> f64) -> Dataset {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(k, &v)| if v.is_nan() { v } else { f(k % self.ncols, v) })
            .collect();
        Dataset {
            samples,
            ..self.clone()
        }
    }
}

/// How continuous columns are reduced to cut-offs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridReduction {
    /// Sorted distinct values, subsampled at equally spaced order statistics
    /// (min and max included) when there are more than requested.
    #[default]
    Full,
    /// Sorted centroids of a scalar k-means per column.
    KMeans { seed: u64, restarts: usize },
}

/// Builds the evaluation grid. Discrete columns always use their full support.
pub fn build_grid(data: &Dataset, levels: &[usize], reduction: GridReduction) -> Result<Grid> {
    if levels.len() != data.ncols() {
        return Err(Error::InvalidArgument(format!(
            "{} level counts for {} columns",
            levels.len(),
            data.ncols()
        )));
    }
    let mut cutoffs = Vec::with_capacity(levels.len());
    for (d, &target) in levels.iter().enumerate() {
        if target < 2 {
            return Err(Error::InvalidArgument(format!("dimension {d} needs at least 2 levels")));
        }
        let mut col = data.column(d);
        col.sort_by(f64::total_cmp);
        let mut distinct = col.clone();
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(Error::DegenerateDimension { dim: d });
        }
        let c = if data.kinds()[d] == VariableKind::Discrete || distinct.len() <= target {
            distinct
        } else {
            match reduction {
                GridReduction::Full => quantile_cutoffs(&col, target),
                GridReduction::KMeans { seed, restarts } => {
                    kmeans_1d(&col, target, restarts, seed.wrapping_add(d as u64))
                }
            }
        };
        cutoffs.push(c);
    }
    Grid::new(cutoffs)
}

/// `count` equally spaced order statistics of sorted data, deduplicated.
pub fn quantile_cutoffs(sorted: &[f64], count: usize) -> Vec<f64> {
    let m = sorted.len();
    let mut out: Vec<f64> = (0..count)
        .map(|k| {
            let pos = (k as f64 * (m - 1) as f64 / (count - 1) as f64).round() as usize;
            sorted[pos.min(m - 1)]
        })
        .collect();
    out.dedup();
    out
}

/// Scalar k-means with k-means++ seeding; returns sorted, distinct centroids.
///
/// Points exactly between two centroids go to the lower one. The best of
/// `restarts` runs (at most 50) by within-cluster sum of squares is kept.
pub fn kmeans_1d(values: &[f64], k: usize, restarts: usize, seed: u64) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() <= k {
        return distinct;
    }
    let mut prefix = vec![0.0; sorted.len() + 1];
    let mut prefix_sq = vec![0.0; sorted.len() + 1];
    for (i, &x) in sorted.iter().enumerate() {
        prefix[i + 1] = prefix[i] + x;
        prefix_sq[i + 1] = prefix_sq[i] + x * x;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..restarts.clamp(1, 50) {
        let mut centroids = kmeans_pp_seed(&sorted, k, &mut rng);
        let mut bounds = Vec::new();
        for _ in 0..200 {
            centroids.sort_by(f64::total_cmp);
            let new_bounds = cluster_bounds(&sorted, &centroids);
            if new_bounds == bounds {
                break;
            }
            for (c, w) in centroids.iter_mut().zip(new_bounds.windows(2)) {
                if w[1] > w[0] {
                    *c = (prefix[w[1]] - prefix[w[0]]) / (w[1] - w[0]) as f64;
                }
            }
            bounds = new_bounds;
        }
        centroids.sort_by(f64::total_cmp);
        let b = cluster_bounds(&sorted, &centroids);
        let inertia: f64 = b
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                let n = (w[1] - w[0]) as f64;
                let s = prefix[w[1]] - prefix[w[0]];
                (prefix_sq[w[1]] - prefix_sq[w[0]]) - s * s / n
            })
            .sum();
        if best.as_ref().is_none_or(|(bi, _)| inertia < *bi) {
            best = Some((inertia, centroids));
        }
    }
    let mut c = best.map(|(_, c)| c).unwrap_or_default();
    c.dedup();
    c
}

fn kmeans_pp_seed(sorted: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut centroids = vec![sorted[rng.random_range(0..sorted.len())]];
    let mut d2: Vec<f64> = sorted.iter().map(|x| (x - centroids[0]).powi(2)).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = sorted.len() - 1;
        for (i, &w) in d2.iter().enumerate() {
            if target < w {
                pick = i;
                break;
            }
            target -= w;
        }
        let c = sorted[pick];
        centroids.push(c);
        for (d, x) in d2.iter_mut().zip(sorted) {
            *d = d.min((x - c).powi(2));
        }
    }
    centroids
}

/// Boundaries `[0, b_1, …, M]` of contiguous clusters in sorted data.
fn cluster_bounds(sorted: &[f64], centroids: &[f64]) -> Vec<usize> {
    let mut b = vec![0];
    for w in centroids.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        b.push(sorted.partition_point(|&x| x <= mid));
    }
    b.push(sorted.len());
    b
}

/// Direct evaluation of the empirical CDF at one lattice point over complete rows.
pub fn empirical_at(data: &Dataset, grid: &Grid, idx: &[usize]) -> Result<f64> {
    check_index(grid, idx)?;
    let point: Vec<f64> = idx
        .iter()
        .enumerate()
        .map(|(d, &i)| grid.cutoffs(d)[i])
        .collect();
    let mut total = 0usize;
    let mut hits = 0usize;
    for row in data.complete_rows() {
        total += 1;
        if row.iter().zip(&point).all(|(x, c)| x <= c) {
            hits += 1;
        }
    }
    if total == 0 {
        return Err(Error::InsufficientData("no complete rows".into()));
    }
    Ok(hits as f64 / total as f64)
}

fn check_index(grid: &Grid, idx: &[usize]) -> Result<()> {
    if idx.len() != grid.ndim() {
        return Err(Error::InvalidArgument("index arity mismatch".into()));
    }
    for (d, &i) in idx.iter().enumerate() {
        let size = grid.cutoffs(d).len();
        if i >= size {
            return Err(Error::Bounds { dim: d, index: i, size });
        }
    }
    Ok(())
}

/// Per-row cell indices of the complete rows, used for fast on-demand counting.
///
/// Row `m` is counted at lattice index `i` iff `cell[m][n] ≤ i_n` for all `n`,
/// where `cell[m][n]` is the first cut-off index with `x_m(n) ≤ cutoff`.
#[derive(Debug, Clone)]
pub struct CellIndex {
    cells: Vec<u32>,
    ndim: usize,
    nrows: usize,
}

impl CellIndex {
    pub fn new(data: &Dataset, grid: &Grid) -> Result<Self> {
        if data.ncols() != grid.ndim() {
            return Err(Error::Schema("dataset and grid dimensions differ".into()));
        }
        let mut cells = Vec::new();
        let mut nrows = 0;
        for row in data.complete_rows() {
            nrows += 1;
            cells.extend(row.iter().enumerate().map(|(d, &x)| grid.cell_of(d, x) as u32));
        }
        if nrows == 0 {
            return Err(Error::InsufficientData("no complete rows".into()));
        }
        Ok(CellIndex {
            cells,
            ndim: grid.ndim(),
            nrows,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn value(&self, idx: &[usize]) -> f64 {
        let hits = self
            .cells
            .chunks_exact(self.ndim)
            .filter(|c| c.iter().zip(idx).all(|(&c, &i)| c as usize <= i))
            .count();
        hits as f64 / self.nrows as f64
    }
}

#[derive(Debug, Clone)]
enum Source {
    Dense(DenseTensor),
    OnDemand(CellIndex),
}

/// Grid-sampled empirical CDF, either materialized or evaluated on demand.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    grid: Grid,
    source: Source,
}

impl EmpiricalCdf {
    pub fn on_demand(data: &Dataset, grid: &Grid) -> Result<Self> {
        Ok(EmpiricalCdf {
            grid: grid.clone(),
            source: Source::OnDemand(CellIndex::new(data, grid)?),
        })
    }

    pub fn from_dense(grid: Grid, tensor: DenseTensor) -> Result<Self> {
        if tensor.shape() != grid.shape().as_slice() {
            return Err(Error::InvalidArgument("tensor shape differs from grid".into()));
        }
        Ok(EmpiricalCdf {
            grid,
            source: Source::Dense(tensor),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dense(&self) -> Option<&DenseTensor> {
        match &self.source {
            Source::Dense(t) => Some(t),
            Source::OnDemand(_) => None,
        }
    }

    pub fn value(&self, idx: &[usize]) -> f64 {
        match &self.source {
            Source::Dense(t) => t.get(idx),
            Source::OnDemand(c) => c.value(idx),
        }
    }
}

/// Materializes the empirical CDF over the whole lattice with a histogram and
/// one cumulative-sum sweep per mode.
pub fn materialize_empirical(data: &Dataset, grid: &Grid, cap: usize) -> Result<EmpiricalCdf> {
    let shape = grid.shape();
    let mut counts = DenseTensor::zeros(&shape, cap)?;
    let index = CellIndex::new(data, grid)?;
    for c in index.cells.chunks_exact(index.ndim) {
        if c.iter().zip(&shape).all(|(&ci, &s)| (ci as usize) < s) {
            let lin = counts.linear_index(&c.iter().map(|&v| v as usize).collect::<Vec<_>>());
            counts.as_mut_slice()[lin] += 1.0;
        }
    }
    let mut stride = 1;
    for &s in &shape {
        let block = stride * s;
        let buf = counts.as_mut_slice();
        for start in (0..buf.len()).step_by(block) {
            for off in 0..stride {
                for i in 1..s {
                    buf[start + off + i * stride] += buf[start + off + (i - 1) * stride];
                }
            }
        }
        stride = block;
    }
    let m = index.nrows as f64;
    counts.as_mut_slice().iter_mut().for_each(|v| *v /= m);
    EmpiricalCdf::from_dense(grid.clone(), counts)
}

/// Visits every lattice index of a grid in storage order.
pub fn for_each_lattice_index(grid: &Grid, mut f: impl FnMut(&[usize])) {
    let shape = grid.shape();
    let total: usize = shape.iter().product();
    let mut idx = vec![0usize; shape.len()];
    for _ in 0..total {
        f(&idx);
        advance(&mut idx, &shape);
    }
}
