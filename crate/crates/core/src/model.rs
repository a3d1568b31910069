//! The rank-R CP model of a grid-sampled CDF.
//!
//! A model stores per-dimension cut-offs, one factor matrix per dimension whose
//! columns are discretized conditional CDFs, and the mixture weights of the
//! latent state. Grid values are `Σ_h λ(h) Π_n A_n(i_n, h)`.
//!
//! Queries taking real-valued points work in *data* coordinates. When the model
//! was trained on standardized or PIT-transformed data, the stored per-dimension
//! transform maps data into the model's *latent* coordinates first.

use serde::{Deserialize, Serialize};

use crate::copula::MarginalTransform;
use crate::error::{Error, Result};
use crate::tensor::{advance, DenseTensor};

/// Per-column variable kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    #[default]
    Continuous,
    Discrete,
}

/// Per-dimension sorted cut-offs defining the evaluation lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    cutoffs: Vec<Vec<f64>>,
}

impl Grid {
    pub fn new(cutoffs: Vec<Vec<f64>>) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(Error::InvalidArgument("grid needs at least one dimension".into()));
        }
        for (n, c) in cutoffs.iter().enumerate() {
            if c.len() < 2 {
                return Err(Error::DegenerateDimension { dim: n });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("non-finite cut-off in dimension {n}")));
            }
            if c.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "cut-offs of dimension {n} are not strictly increasing"
                )));
            }
        }
        Ok(Grid { cutoffs })
    }

    pub fn ndim(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self, dim: usize) -> &[f64] {
        &self.cutoffs[dim]
    }

    pub fn all_cutoffs(&self) -> &[Vec<f64>] {
        &self.cutoffs
    }

    pub fn shape(&self) -> Vec<usize> {
        self.cutoffs.iter().map(Vec::len).collect()
    }

    pub fn lattice_size(&self) -> usize {
        self.cutoffs.iter().map(Vec::len).product()
    }

    /// Virtual cut-off one spacing below the first, where every CDF is 0.
    pub fn left_edge(&self, dim: usize) -> f64 {
        let c = &self.cutoffs[dim];
        c[0] - (c[1] - c[0])
    }

    /// Index of the first cut-off `≥ x`, or `I_n` when `x` exceeds them all.
    pub fn cell_of(&self, dim: usize, x: f64) -> usize {
        self.cutoffs[dim].partition_point(|&c| c < x)
    }

    pub(crate) fn select(&self, dims: &[usize]) -> Grid {
        Grid {
            cutoffs: dims.iter().map(|&d| self.cutoffs[d].clone()).collect(),
        }
    }
}

/// `I_n × R` matrix whose columns are valid discretized CDFs.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl FactorMatrix {
    /// Builds a matrix from row-major values without checking CDF validity.
    pub fn from_row_major(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "{} values cannot form a {rows}x{cols} matrix",
                values.len()
            )));
        }
        Ok(FactorMatrix { rows, cols, values })
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::InvalidArgument("ragged factor columns".into()));
        }
        let mut values = vec![0.0; rows * cols];
        for (h, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                values[i * cols + h] = v;
            }
        }
        Self::from_row_major(rows, cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, h: usize) -> f64 {
        self.values[i * self.cols + h]
    }

    #[inline]
    pub fn set(&mut self, i: usize, h: usize, v: f64) {
        self.values[i * self.cols + h] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, h: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, h)).collect()
    }

    pub fn set_column(&mut self, h: usize, col: &[f64]) {
        for (i, &v) in col.iter().enumerate() {
            self.set(i, h, v);
        }
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|h| self.column(h)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `A^T A` as a row-major `R × R` matrix.
    pub fn gram(&self) -> Vec<f64> {
        let r = self.cols;
        let mut g = vec![0.0; r * r];
        for i in 0..self.rows {
            let row = self.row(i);
            for a in 0..r {
                for b in 0..r {
                    g[a * r + b] += row[a] * row[b];
                }
            }
        }
        g
    }

    /// Checks that every column is in `[0,1]`, non-decreasing and ends at exactly 1.
    pub fn check_valid_cdf(&self) -> Result<()> {
        for h in 0..self.cols {
            let col = self.column(h);
            if col.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidModel(format!("column {h} leaves [0,1]")));
            }
            if col.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::InvalidModel(format!("column {h} is not monotone")));
            }
            if col[self.rows - 1] != 1.0 {
                return Err(Error::InvalidModel(format!("column {h} does not end at 1")));
            }
        }
        Ok(())
    }
}

/// Prior of the latent state, a point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureWeights(Vec<f64>);

impl MixtureWeights {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::InvalidArgument("empty mixture weights".into()));
        }
        if lambda.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidModel("negative mixture weight".into()));
        }
        let sum: f64 = lambda.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidModel(format!("mixture weights sum to {sum}")));
        }
        Ok(MixtureWeights(lambda))
    }

    pub fn uniform(rank: usize) -> Self {
        MixtureWeights(vec![1.0 / rank as f64; rank])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Affine map `z = (x - shift) / scale` applied before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub shift: f64,
    pub scale: f64,
}

impl Affine {
    pub const IDENTITY: Affine = Affine {
        shift: 0.0,
        scale: 1.0,
    };
}

/// Descriptive metadata carried alongside the parameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Meta {
    #[serde(default)]
    pub names: Vec<String>,
    #[serde(default)]
    pub kinds: Vec<VariableKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardization: Option<Vec<Affine>>,
}

/// A fitted low-rank CDF model.
#[derive(Debug, Clone, PartialEq)]
pub struct CpdModel {
    grid: Grid,
    factors: Vec<FactorMatrix>,
    weights: MixtureWeights,
    copula: Option<Vec<MarginalTransform>>,
    meta: Meta,
}

impl CpdModel {
    pub fn new(grid: Grid, factors: Vec<FactorMatrix>, weights: MixtureWeights) -> Result<Self> {
        let n = grid.ndim();
        let meta = Meta {
            names: (0..n).map(|d| format!("x{d}")).collect(),
            kinds: vec![VariableKind::Continuous; n],
            standardization: None,
        };
        Self::with_parts(grid, factors, weights, None, meta)
    }

    pub fn with_parts(
        grid: Grid,
        factors: Vec<FactorMatrix>,
        weights: MixtureWeights,
        copula: Option<Vec<MarginalTransform>>,
        mut meta: Meta,
    ) -> Result<Self> {
        let n = grid.ndim();
        if factors.len() != n {
            return Err(Error::InvalidModel(format!(
                "{} factors for a {n}-dimensional grid",
                factors.len()
            )));
        }
        let rank = weights.len();
        for (d, f) in factors.iter().enumerate() {
            if f.rows() != grid.cutoffs(d).len() {
                return Err(Error::InvalidModel(format!(
                    "factor {d} has {} rows, grid has {} cut-offs",
                    f.rows(),
                    grid.cutoffs(d).len()
                )));
            }
            if f.cols() != rank {
                return Err(Error::InvalidModel(format!(
                    "factor {d} has {} columns, rank is {rank}",
                    f.cols()
                )));
            }
            f.check_valid_cdf()
                .map_err(|e| Error::InvalidModel(format!("factor {d}: {e}")))?;
        }
        if let Some(c) = &copula {
            if c.len() != n {
                return Err(Error::InvalidModel("copula transform count mismatch".into()));
            }
        }
        if meta.names.is_empty() {
            meta.names = (0..n).map(|d| format!("x{d}")).collect();
        }
        if meta.kinds.is_empty() {
            meta.kinds = vec![VariableKind::Continuous; n];
        }
        if meta.names.len() != n || meta.kinds.len() != n {
            return Err(Error::InvalidModel("metadata length mismatch".into()));
        }
        if let Some(s) = &meta.standardization {
            if s.len() != n || s.iter().any(|a| !(a.scale > 0.0) || !a.shift.is_finite()) {
                return Err(Error::InvalidModel("invalid standardization".into()));
            }
        }
        Ok(CpdModel {
            grid,
            factors,
            weights,
            copula,
            meta,
        })
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn ndim(&self) -> usize {
        self.grid.ndim()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn factors(&self) -> &[FactorMatrix] {
        &self.factors
    }

    pub fn factor(&self, dim: usize) -> &FactorMatrix {
        &self.factors[dim]
    }

    pub fn weights(&self) -> &[f64] {
        self.weights.as_slice()
    }

    pub fn copula(&self) -> Option<&[MarginalTransform]> {
        self.copula.as_deref()
    }

    pub fn is_copula(&self) -> bool {
        self.copula.is_some()
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    pub fn kind(&self, dim: usize) -> VariableKind {
        self.meta.kinds[dim]
    }

    pub fn set_names(&mut self, names: Vec<String>) -> Result<()> {
        if names.len() != self.ndim() {
            return Err(Error::InvalidArgument("name count mismatch".into()));
        }
        self.meta.names = names;
        Ok(())
    }

    /// Same factors with a different latent prior (e.g. a posterior).
    pub fn with_weights(&self, weights: MixtureWeights) -> Result<Self> {
        if weights.len() != self.rank() {
            return Err(Error::InvalidArgument("weight length differs from rank".into()));
        }
        let mut m = self.clone();
        m.weights = weights;
        Ok(m)
    }

    pub(crate) fn from_parts_unchecked(
        grid: Grid,
        factors: Vec<FactorMatrix>,
        weights: MixtureWeights,
        copula: Option<Vec<MarginalTransform>>,
        meta: Meta,
    ) -> Self {
        CpdModel {
            grid,
            factors,
            weights,
            copula,
            meta,
        }
    }

    pub fn eval_grid_point(&self, idx: &[usize]) -> Result<f64> {
        if idx.len() != self.ndim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} indices, got {}",
                self.ndim(),
                idx.len()
            )));
        }
        for (d, &i) in idx.iter().enumerate() {
            let size = self.grid.cutoffs(d).len();
            if i >= size {
                return Err(Error::Bounds { dim: d, index: i, size });
            }
        }
        Ok(self.grid_value(idx))
    }

    pub(crate) fn grid_value(&self, idx: &[usize]) -> f64 {
        self.weights
            .as_slice()
            .iter()
            .enumerate()
            .map(|(h, &l)| {
                l * self
                    .factors
                    .iter()
                    .zip(idx)
                    .map(|(f, &i)| f.get(i, h))
                    .product::<f64>()
            })
            .sum()
    }

    /// Full CDF at a data-space point.
    pub fn eval_cdf(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.ndim(), "point dimension mismatch");
        let latent: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(d, &v)| self.to_latent(d, v))
            .collect();
        self.eval_cdf_latent(&latent)
    }

    pub(crate) fn eval_cdf_latent(&self, u: &[f64]) -> f64 {
        (0..self.rank())
            .map(|h| {
                self.weights()[h]
                    * u.iter()
                        .enumerate()
                        .map(|(d, &v)| self.component_cdf(d, h, v))
                        .product::<f64>()
            })
            .sum()
    }

    /// Interpolated conditional CDF `F_d(u | h)` at a latent coordinate.
    ///
    /// Continuous dimensions interpolate linearly between cut-offs, starting
    /// from 0 at [`Grid::left_edge`]; discrete dimensions are right-continuous
    /// step functions over the category values.
    pub fn component_cdf(&self, dim: usize, h: usize, u: f64) -> f64 {
        let c = self.grid.cutoffs(dim);
        let f = &self.factors[dim];
        let last = c.len() - 1;
        if u >= c[last] {
            return 1.0;
        }
        if self.kind(dim) == VariableKind::Discrete {
            let k = c.partition_point(|&v| v <= u);
            return if k == 0 { 0.0 } else { f.get(k - 1, h) };
        }
        if u < c[0] {
            let edge = self.grid.left_edge(dim);
            if u <= edge {
                return 0.0;
            }
            return f.get(0, h) * (u - edge) / (c[0] - edge);
        }
        if u.is_nan() {
            return f64::NAN;
        }
        // c[k] <= u < c[k+1]
        let k = c.partition_point(|&v| v <= u) - 1;
        let (a0, a1) = (f.get(k, h), f.get(k + 1, h));
        a0 + (a1 - a0) * (u - c[k]) / (c[k + 1] - c[k])
    }

    pub fn materialize_tensor(&self, cap: usize) -> Result<DenseTensor> {
        let shape = self.grid.shape();
        let mut t = DenseTensor::zeros(&shape, cap)?;
        let mut idx = vec![0usize; shape.len()];
        for v in t.as_mut_slice() {
            *v = self.grid_value(&idx);
            advance(&mut idx, &shape);
        }
        Ok(t)
    }

    /// Maps a data-space value of `dim` into model coordinates.
    pub fn to_latent(&self, dim: usize, x: f64) -> f64 {
        if let Some(c) = &self.copula {
            return c[dim].forward(x);
        }
        match &self.meta.standardization {
            Some(s) => (x - s[dim].shift) / s[dim].scale,
            None => x,
        }
    }

    pub fn from_latent(&self, dim: usize, u: f64) -> f64 {
        if let Some(c) = &self.copula {
            return c[dim].inverse(u);
        }
        match &self.meta.standardization {
            Some(s) => u * s[dim].scale + s[dim].shift,
            None => u,
        }
    }

    /// Log-derivative of the data-to-latent map of a continuous dimension.
    pub(crate) fn log_jacobian(&self, dim: usize, x: f64) -> f64 {
        if self.kind(dim) == VariableKind::Discrete {
            return 0.0;
        }
        if let Some(c) = &self.copula {
            return c[dim].density(x).ln();
        }
        match &self.meta.standardization {
            Some(s) => -s[dim].scale.ln(),
            None => 0.0,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        file.try_into()
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    rank: usize,
    grid: Vec<Vec<f64>>,
    lambda: Vec<f64>,
    /// `factors[n][h]` is column `h` of the factor of dimension `n`.
    factors: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    copula: Option<Vec<MarginalTransform>>,
    #[serde(default)]
    meta: Meta,
}

impl From<&CpdModel> for ModelFile {
    fn from(m: &CpdModel) -> Self {
        ModelFile {
            rank: m.rank(),
            grid: m.grid.cutoffs.clone(),
            lambda: m.weights().to_vec(),
            factors: m.factors.iter().map(FactorMatrix::columns).collect(),
            copula: m.copula.clone(),
            meta: m.meta.clone(),
        }
    }
}

impl TryFrom<ModelFile> for CpdModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        if f.lambda.len() != f.rank {
            return Err(Error::InvalidModel("rank does not match lambda length".into()));
        }
        let grid = Grid::new(f.grid)?;
        let factors = f
            .factors
            .iter()
            .map(|cols| FactorMatrix::from_columns(cols))
            .collect::<Result<Vec<_>>>()?;
        CpdModel::with_parts(grid, factors, MixtureWeights::new(f.lambda)?, f.copula, f.meta)
    }
}
