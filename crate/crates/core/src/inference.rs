//! Closed-form queries against a fitted model.
//!
//! Every query uses the latent naive Bayes reading of the model: a hidden
//! state `h` with prior `λ`, and independent per-dimension conditionals whose
//! CDFs are the (interpolated) factor columns. Real-valued inputs and outputs
//! are in data coordinates.

use rand::Rng;

use crate::empirical::Dataset;
use crate::error::{Error, Result};
use crate::model::{CpdModel, Meta, MixtureWeights, VariableKind};

/// Floor applied to densities before taking logarithms.
pub const PDF_FLOOR: f64 = 1e-300;

/// Axis-aligned box with per-dimension half-open intervals `(a, b]`.
/// Unconstrained dimensions span the whole line.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxQuery {
    bounds: Vec<Option<(f64, f64)>>,
}

impl BoxQuery {
    pub fn unbounded(ndim: usize) -> Self {
        BoxQuery {
            bounds: vec![None; ndim],
        }
    }

    /// Restricts `dim` to `(lower, upper]`; either end may be infinite.
    pub fn with(mut self, dim: usize, lower: f64, upper: f64) -> Result<Self> {
        if dim >= self.bounds.len() {
            return Err(Error::InvalidArgument(format!("dimension {dim} out of range")));
        }
        if !(lower < upper) {
            return Err(Error::InvalidArgument(format!(
                "empty interval ({lower}, {upper}] in dimension {dim}"
            )));
        }
        self.bounds[dim] = Some((lower, upper));
        Ok(self)
    }

    pub fn bounds(&self) -> &[Option<(f64, f64)>] {
        &self.bounds
    }
}

/// Distribution of the hidden state given evidence.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub weights: Vec<f64>,
    /// Set when the evidence had zero likelihood and the uniform fallback was used.
    pub fallback: bool,
}

/// What to do when evidence has zero likelihood under every component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroLikelihoodPolicy {
    #[default]
    Error,
    /// Return a uniform posterior and set [`Posterior::fallback`].
    Uniform,
}

/// Model over a subset of dimensions, obtained by dropping the other factors.
pub fn marginalize(model: &CpdModel, keep: &[usize]) -> Result<CpdModel> {
    if keep.is_empty() {
        return Err(Error::InvalidArgument("no dimensions to keep".into()));
    }
    let mut seen = vec![false; model.ndim()];
    for &d in keep {
        if d >= model.ndim() || seen[d] {
            return Err(Error::InvalidArgument(format!("bad or repeated dimension {d}")));
        }
        seen[d] = true;
    }
    let meta = model.meta();
    let sub_meta = Meta {
        names: keep.iter().map(|&d| meta.names[d].clone()).collect(),
        kinds: keep.iter().map(|&d| meta.kinds[d]).collect(),
        standardization: meta
            .standardization
            .as_ref()
            .map(|s| keep.iter().map(|&d| s[d]).collect()),
    };
    Ok(CpdModel::from_parts_unchecked(
        model.grid().select(keep),
        keep.iter().map(|&d| model.factor(d).clone()).collect(),
        MixtureWeights::new(model.weights().to_vec())?,
        model.copula().map(|c| keep.iter().map(|&d| c[d].clone()).collect()),
        sub_meta,
    ))
}

/// Probability mass of each cell of `dim` under component `h`:
/// `A(k, h) − A(k−1, h)` with `A(−1, h) = 0`. For continuous dimensions cell
/// `k` spans `(c_{k−1}, c_k]` with `c_{−1}` the virtual left edge; for discrete
/// dimensions it is the category `c_k`.
pub fn cell_masses(model: &CpdModel, dim: usize, h: usize) -> Vec<f64> {
    let f = model.factor(dim);
    let mut prev = 0.0;
    (0..f.rows())
        .map(|k| {
            let v = f.get(k, h);
            let m = v - prev;
            prev = v;
            m
        })
        .collect()
}

/// Latent-space `(lower, upper)` edges of each continuous cell.
pub fn cell_edges(model: &CpdModel, dim: usize) -> Vec<(f64, f64)> {
    let c = model.grid().cutoffs(dim);
    let mut lo = model.grid().left_edge(dim);
    c.iter()
        .map(|&hi| {
            let e = (lo, hi);
            lo = hi;
            e
        })
        .collect()
}

/// Per-component likelihood of a latent coordinate: cell density for
/// continuous dimensions, category mass for discrete ones.
pub fn component_likelihood(model: &CpdModel, dim: usize, h: usize, u: f64) -> f64 {
    let c = model.grid().cutoffs(dim);
    let f = model.factor(dim);
    let mass = |k: usize| f.get(k, h) - if k == 0 { 0.0 } else { f.get(k - 1, h) };
    match model.kind(dim) {
        VariableKind::Discrete => {
            let k = c.partition_point(|&v| v < u);
            if k < c.len() && (c[k] - u).abs() <= 1e-12 * (1.0 + u.abs()) {
                mass(k)
            } else if k > 0 && (c[k - 1] - u).abs() <= 1e-12 * (1.0 + u.abs()) {
                mass(k - 1)
            } else {
                0.0
            }
        }
        VariableKind::Continuous => {
            let edge = model.grid().left_edge(dim);
            if !(u > edge && u <= c[c.len() - 1]) {
                return 0.0;
            }
            let k = c.partition_point(|&v| v < u);
            let lo = if k == 0 { edge } else { c[k - 1] };
            mass(k) / (c[k] - lo)
        }
    }
}

/// Conditional CDF of `dim` given `h` at a data-space point (±∞ map to 0 and 1).
pub fn component_cdf_at(model: &CpdModel, dim: usize, h: usize, x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        0.0
    } else if x == f64::INFINITY {
        1.0
    } else {
        model.component_cdf(dim, h, model.to_latent(dim, x))
    }
}

/// Joint density (mixed density/mass for discrete dimensions) at a data-space point.
pub fn density(model: &CpdModel, x: &[f64]) -> f64 {
    assert_eq!(x.len(), model.ndim(), "point dimension mismatch");
    let u: Vec<f64> = x.iter().enumerate().map(|(d, &v)| model.to_latent(d, v)).collect();
    let latent: f64 = (0..model.rank())
        .map(|h| {
            model.weights()[h]
                * u.iter()
                    .enumerate()
                    .map(|(d, &v)| component_likelihood(model, d, h, v))
                    .product::<f64>()
        })
        .sum();
    if latent == 0.0 {
        return 0.0;
    }
    let log_jac: f64 = x.iter().enumerate().map(|(d, &v)| model.log_jacobian(d, v)).sum();
    latent * log_jac.exp()
}

/// Mean log-density over the complete rows of `data`.
pub fn log_likelihood(model: &CpdModel, data: &Dataset) -> Result<f64> {
    if data.ncols() != model.ndim() {
        return Err(Error::Schema(format!(
            "data has {} columns, model has {} dimensions",
            data.ncols(),
            model.ndim()
        )));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for row in data.complete_rows() {
        total += density(model, row).max(PDF_FLOOR).ln();
        count += 1;
    }
    if count == 0 {
        return Err(Error::InsufficientData("no complete rows".into()));
    }
    Ok(total / count as f64)
}

/// `P(a < X ≤ b)` for an axis-aligned box, one CDF difference per dimension
/// and component.
pub fn box_probability(model: &CpdModel, q: &BoxQuery) -> f64 {
    assert_eq!(q.bounds.len(), model.ndim(), "box dimension mismatch");
    let p: f64 = (0..model.rank())
        .map(|h| {
            model.weights()[h]
                * q.bounds
                    .iter()
                    .enumerate()
                    .map(|(d, b)| match *b {
                        None => 1.0,
                        Some((lo, hi)) => {
                            component_cdf_at(model, d, h, hi) - component_cdf_at(model, d, h, lo)
                        }
                    })
                    .product::<f64>()
        })
        .sum();
    p.clamp(0.0, 1.0)
}

/// Posterior over the hidden state given a partial assignment `(dim, value)`.
pub fn posterior(
    model: &CpdModel,
    evidence: &[(usize, f64)],
    policy: ZeroLikelihoodPolicy,
) -> Result<Posterior> {
    if evidence.is_empty() {
        return Err(Error::InvalidArgument("posterior needs at least one observation".into()));
    }
    let mut logw: Vec<f64> = model.weights().iter().map(|l| l.ln()).collect();
    for &(d, x) in evidence {
        if d >= model.ndim() {
            return Err(Error::InvalidArgument(format!("dimension {d} out of range")));
        }
        let u = model.to_latent(d, x);
        for (h, lw) in logw.iter_mut().enumerate() {
            *lw += component_likelihood(model, d, h, u).ln();
        }
    }
    normalize_log_weights(logw, policy)
}

fn normalize_log_weights(logw: Vec<f64>, policy: ZeroLikelihoodPolicy) -> Result<Posterior> {
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return match policy {
            ZeroLikelihoodPolicy::Error => Err(Error::ZeroLikelihood),
            ZeroLikelihoodPolicy::Uniform => Ok(Posterior {
                weights: vec![1.0 / logw.len() as f64; logw.len()],
                fallback: true,
            }),
        };
    }
    let mut w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    Ok(Posterior {
        weights: w,
        fallback: false,
    })
}

/// `E[U_dim | h]` in latent coordinates, using cell midpoints for continuous
/// dimensions and category values for discrete ones.
pub fn component_mean(model: &CpdModel, dim: usize, h: usize) -> f64 {
    let masses = cell_masses(model, dim, h);
    match model.kind(dim) {
        VariableKind::Discrete => masses
            .iter()
            .zip(model.grid().cutoffs(dim))
            .map(|(m, c)| m * c)
            .sum(),
        VariableKind::Continuous => masses
            .iter()
            .zip(cell_edges(model, dim))
            .map(|(m, (lo, hi))| m * 0.5 * (lo + hi))
            .sum(),
    }
}

/// `Var[U_dim | h]` in latent coordinates under the piecewise-uniform density.
pub fn component_variance(model: &CpdModel, dim: usize, h: usize) -> f64 {
    let masses = cell_masses(model, dim, h);
    let second: f64 = match model.kind(dim) {
        VariableKind::Discrete => masses
            .iter()
            .zip(model.grid().cutoffs(dim))
            .map(|(m, c)| m * c * c)
            .sum(),
        VariableKind::Continuous => masses
            .iter()
            .zip(cell_edges(model, dim))
            .map(|(m, (lo, hi))| m * (lo * lo + lo * hi + hi * hi) / 3.0)
            .sum(),
    };
    let mean = component_mean(model, dim, h);
    (second - mean * mean).max(0.0)
}

/// Conditional mean and variance of `dim` under hidden-state weights `w`, in
/// latent coordinates.
pub fn conditional_moments(model: &CpdModel, dim: usize, w: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    let mut second = 0.0;
    for (h, &wh) in w.iter().enumerate() {
        let m = component_mean(model, dim, h);
        mean += wh * m;
        second += wh * (component_variance(model, dim, h) + m * m);
    }
    (mean, (second - mean * mean).max(0.0))
}

/// Conditional variance of `dim` given evidence. Standardized models report it
/// in data units; copula models report it in probability-integral units.
pub fn conditional_variance(
    model: &CpdModel,
    evidence: &[(usize, f64)],
    dim: usize,
    policy: ZeroLikelihoodPolicy,
) -> Result<f64> {
    let post = posterior(model, evidence, policy)?;
    let (_, var) = conditional_moments(model, dim, &post.weights);
    let scale = match (&model.meta().standardization, model.is_copula()) {
        (Some(s), false) => s[dim].scale,
        _ => 1.0,
    };
    Ok(var * scale * scale)
}

/// Box probability under the posterior given evidence: a conditional tail
/// probability when the box is semi-infinite.
pub fn posterior_box_probability(
    model: &CpdModel,
    evidence: &[(usize, f64)],
    q: &BoxQuery,
    policy: ZeroLikelihoodPolicy,
) -> Result<f64> {
    let post = posterior(model, evidence, policy)?;
    let reweighted = model.with_weights(MixtureWeights::new(post.weights)?)?;
    Ok(box_probability(&reweighted, q))
}

/// Fills the missing (`NaN`) entries of `x` with their conditional expectation
/// given the observed ones. Discrete dimensions receive their most probable
/// category instead.
pub fn impute(model: &CpdModel, x: &[f64], policy: ZeroLikelihoodPolicy) -> Result<Vec<f64>> {
    if x.len() != model.ndim() {
        return Err(Error::Schema("point dimension mismatch".into()));
    }
    if x.iter().all(|v| !v.is_nan()) {
        return Ok(x.to_vec());
    }
    let evidence: Vec<(usize, f64)> = x
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .map(|(d, &v)| (d, v))
        .collect();
    let post = posterior(model, &evidence, policy)?;
    let mut out = x.to_vec();
    for (d, v) in out.iter_mut().enumerate() {
        if !v.is_nan() {
            continue;
        }
        *v = match model.kind(d) {
            VariableKind::Continuous => {
                let (mean, _) = conditional_moments(model, d, &post.weights);
                model.from_latent(d, mean)
            }
            VariableKind::Discrete => {
                let probs = category_probabilities(model, d, &post.weights);
                model.from_latent(d, model.grid().cutoffs(d)[argmax(&probs)])
            }
        };
    }
    Ok(out)
}

fn category_probabilities(model: &CpdModel, dim: usize, w: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; model.grid().cutoffs(dim).len()];
    for (h, &wh) in w.iter().enumerate() {
        for (pc, m) in p.iter_mut().zip(cell_masses(model, dim, h)) {
            *pc += wh * m;
        }
    }
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        p.iter_mut().for_each(|v| *v /= s);
    }
    p
}

/// First index of the maximum; ties go to the smaller index.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Predicted label of a discrete dimension with the class posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    /// Data-space value of the predicted category.
    pub label: f64,
    pub class_index: usize,
    /// Data-space category values, aligned with `probabilities`.
    pub classes: Vec<f64>,
    pub probabilities: Vec<f64>,
}

/// Classifies `label_dim` from the other observed (non-`NaN`) entries of `x`.
/// With no evidence the prior is used.
pub fn classify(
    model: &CpdModel,
    x: &[f64],
    label_dim: usize,
    policy: ZeroLikelihoodPolicy,
) -> Result<Classification> {
    if x.len() != model.ndim() {
        return Err(Error::Schema("point dimension mismatch".into()));
    }
    if label_dim >= model.ndim() || model.kind(label_dim) != VariableKind::Discrete {
        return Err(Error::InvalidArgument(format!(
            "label dimension {label_dim} is not a discrete dimension"
        )));
    }
    let evidence: Vec<(usize, f64)> = x
        .iter()
        .enumerate()
        .filter(|&(d, v)| d != label_dim && !v.is_nan())
        .map(|(d, &v)| (d, v))
        .collect();
    let weights = if evidence.is_empty() {
        model.weights().to_vec()
    } else {
        posterior(model, &evidence, policy)?.weights
    };
    let probabilities = category_probabilities(model, label_dim, &weights);
    let class_index = argmax(&probabilities);
    let classes: Vec<f64> = model
        .grid()
        .cutoffs(label_dim)
        .iter()
        .map(|&c| model.from_latent(label_dim, c))
        .collect();
    Ok(Classification {
        label: classes[class_index],
        class_index,
        classes,
        probabilities,
    })
}

/// Draws `count` samples: a hidden state from `λ`, then each coordinate by
/// inverting its component's interpolated CDF.
pub fn sample(model: &CpdModel, count: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let cum: Vec<f64> = model
        .weights()
        .iter()
        .scan(0.0, |acc, &w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    (0..count)
        .map(|_| {
            let r = rng.random::<f64>() * cum[cum.len() - 1];
            let h = cum.partition_point(|&c| c <= r).min(cum.len() - 1);
            (0..model.ndim())
                .map(|d| {
                    let u = sample_component(model, d, h, rng.random::<f64>());
                    model.from_latent(d, u)
                })
                .collect()
        })
        .collect()
}

/// Inverse CDF of component `h` in `dim` at `p ∈ [0, 1)`, in latent coordinates.
pub fn sample_component(model: &CpdModel, dim: usize, h: usize, p: f64) -> f64 {
    let c = model.grid().cutoffs(dim);
    let f = model.factor(dim);
    let rows = f.rows();
    // first cell whose upper CDF value exceeds p; its mass is positive
    let mut k = rows - 1;
    for i in 0..rows {
        if f.get(i, h) > p {
            k = i;
            break;
        }
    }
    if model.kind(dim) == VariableKind::Discrete {
        return c[k];
    }
    let (lo_x, lo_f) = if k == 0 {
        (model.grid().left_edge(dim), 0.0)
    } else {
        (c[k - 1], f.get(k - 1, h))
    };
    let hi_f = f.get(k, h);
    if hi_f <= lo_f {
        return c[k];
    }
    lo_x + (p - lo_f) / (hi_f - lo_f) * (c[k] - lo_x)
}
