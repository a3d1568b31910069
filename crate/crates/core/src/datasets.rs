//! Synthetic generators used by the examples and the test suites.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Mixture of axis-aligned Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub stds: Vec<Vec<f64>>,
}

impl GaussianMixture {
    /// The two-component 3-D mixture with diagonal covariances used as the
    /// reference recovery problem, with equal mixing proportions.
    pub fn reference_3d() -> Self {
        GaussianMixture {
            weights: vec![0.5, 0.5],
            means: vec![vec![-1.7, 0.45, -2.50], vec![1.8, 2.30, -1.20]],
            stds: vec![vec![0.8, 1.4, 0.7], vec![1.3, 0.8, 0.8]],
        }
    }

    pub fn ndim(&self) -> usize {
        self.means[0].len()
    }

    /// Samples with their generating component.
    pub fn sample_labeled(&self, count: usize, rng: &mut impl Rng) -> Vec<(usize, Vec<f64>)> {
        let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
        (0..count)
            .map(|_| {
                let mut r = rng.random::<f64>();
                let mut h = self.weights.len() - 1;
                for (k, &w) in self.weights.iter().enumerate() {
                    if r < w {
                        h = k;
                        break;
                    }
                    r -= w;
                }
                let x = self.means[h]
                    .iter()
                    .zip(&self.stds[h])
                    .map(|(m, s)| m + s * std_normal.sample(rng))
                    .collect();
                (h, x)
            })
            .collect()
    }

    pub fn sample(&self, count: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        self.sample_labeled(count, rng).into_iter().map(|(_, x)| x).collect()
    }

    pub fn pdf(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(w, (mu, sd))| {
                w * x
                    .iter()
                    .zip(mu.iter().zip(sd))
                    .map(|(xi, (m, s))| {
                        let z = (xi - m) / s;
                        (-0.5 * z * z).exp() / (s * (2.0 * PI).sqrt())
                    })
                    .product::<f64>()
            })
            .sum()
    }
}

/// Two interleaving half circles with Gaussian noise (sd 0.1), scaled by 2
/// and shifted by `(-1, -0.2)`.
pub fn moons(count: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let noise = Normal::new(0.0, 0.1).expect("valid normal");
    (0..count)
        .map(|i| {
            let t = rng.random::<f64>() * PI;
            let (x, y) = if i % 2 == 0 {
                (t.cos(), t.sin())
            } else {
                (1.0 - t.cos(), 1.0 - t.sin() - 0.5)
            };
            vec![
                2.0 * (x + noise.sample(rng)) - 1.0,
                2.0 * (y + noise.sample(rng)) - 0.2,
            ]
        })
        .collect()
}

/// Two concentric circles (radii 1 and 0.5) with noise sd 0.08, scaled by 3.
pub fn circles(count: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let noise = Normal::new(0.0, 0.08).expect("valid normal");
    (0..count)
        .map(|i| {
            let t = rng.random::<f64>() * 2.0 * PI;
            let r = if i % 2 == 0 { 1.0 } else { 0.5 };
            vec![
                3.0 * (r * t.cos() + noise.sample(rng)),
                3.0 * (r * t.sin() + noise.sample(rng)),
            ]
        })
        .collect()
}

/// Uniform density on the black squares of a 4×4 board over `[-2, 2]²`.
pub fn checkerboard(count: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let x1 = rng.random::<f64>() * 4.0 - 2.0;
            let x2_ = rng.random::<f64>() - 2.0 * f64::from(rng.random_range(0..2u8));
            let x2 = x2_ + x1.floor().rem_euclid(2.0);
            vec![x1, x2]
        })
        .collect()
}

/// Eight isotropic Gaussians (sd 0.5) on a circle of radius 4.
pub fn eight_gaussians(count: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let noise = Normal::new(0.0, 0.5).expect("valid normal");
    (0..count)
        .map(|_| {
            let k = rng.random_range(0..8) as f64;
            let a = k * PI / 4.0;
            vec![4.0 * a.cos() + noise.sample(rng), 4.0 * a.sin() + noise.sample(rng)]
        })
        .collect()
}
