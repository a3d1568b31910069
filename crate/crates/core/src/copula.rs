//! Probability integral transform used to fit copula models.
//!
//! Each variable is mapped through its empirical marginal CDF, using the
//! `rank / (M + 1)` convention so transformed values stay strictly inside
//! `(0, 1)`. Between knots the map is linear; outside the knot range it is
//! clamped to `[u_min, 1 - u_min]` with `u_min = 1 / (2 (M + 1))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalTransform {
    knots: Vec<f64>,
    cdf_values: Vec<f64>,
    sample_count: usize,
}

impl MarginalTransform {
    /// Fits the empirical marginal of one column. Non-finite values are skipped.
    pub fn fit(column: &[f64]) -> Result<Self> {
        let mut sorted: Vec<f64> = column.iter().copied().filter(|v| v.is_finite()).collect();
        if sorted.len() < 2 {
            return Err(Error::InsufficientData(
                "a marginal transform needs at least two observations".into(),
            ));
        }
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len();
        let denom = (m + 1) as f64;
        let mut knots = Vec::new();
        let mut cdf_values = Vec::new();
        for (i, &v) in sorted.iter().enumerate() {
            // last occurrence of each distinct value carries the count <= v
            if i + 1 == m || sorted[i + 1] != v {
                knots.push(v);
                cdf_values.push((i + 1) as f64 / denom);
            }
        }
        if knots.len() < 2 {
            return Err(Error::DegenerateDimension { dim: 0 });
        }
        Ok(MarginalTransform {
            knots,
            cdf_values,
            sample_count: m,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf_values
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn u_min(&self) -> f64 {
        0.5 / (self.sample_count + 1) as f64
    }

    pub fn forward(&self, x: f64) -> f64 {
        let (k, c) = (&self.knots, &self.cdf_values);
        let last = k.len() - 1;
        let u = if x < k[0] {
            self.u_min()
        } else if x > k[last] {
            1.0 - self.u_min()
        } else if x == k[last] {
            c[last]
        } else {
            let j = k.partition_point(|&v| v <= x) - 1;
            c[j] + (c[j + 1] - c[j]) * (x - k[j]) / (k[j + 1] - k[j])
        };
        u.clamp(self.u_min(), 1.0 - self.u_min())
    }

    pub fn inverse(&self, u: f64) -> f64 {
        let (k, c) = (&self.knots, &self.cdf_values);
        let last = k.len() - 1;
        if u <= c[0] {
            return k[0];
        }
        if u >= c[last] {
            return k[last];
        }
        let j = c.partition_point(|&v| v <= u) - 1;
        k[j] + (k[j + 1] - k[j]) * (u - c[j]) / (c[j + 1] - c[j])
    }

    /// Derivative of [`forward`](Self::forward): the interpolated marginal
    /// density. Zero outside the knot range.
    pub fn density(&self, x: f64) -> f64 {
        let (k, c) = (&self.knots, &self.cdf_values);
        let last = k.len() - 1;
        if !(x >= k[0] && x <= k[last]) {
            return 0.0;
        }
        let j = (k.partition_point(|&v| v <= x) - 1).min(last - 1);
        (c[j + 1] - c[j]) / (k[j + 1] - k[j])
    }
}

/// Fits one transform per column of a row-major `rows × ndim` matrix,
/// skipping missing (non-finite) cells.
pub fn fit_marginals(samples: &[f64], ndim: usize) -> Result<Vec<MarginalTransform>> {
    (0..ndim)
        .map(|d| {
            let col: Vec<f64> = samples.iter().skip(d).step_by(ndim).copied().collect();
            MarginalTransform::fit(&col).map_err(|e| match e {
                Error::DegenerateDimension { .. } => Error::DegenerateDimension { dim: d },
                other => other,
            })
        })
        .collect()
}
