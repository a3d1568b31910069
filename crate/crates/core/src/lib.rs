//! Low-rank CP models of multivariate CDFs.
//!
//! The empirical CDF of a dataset, sampled on a lattice of per-dimension
//! cut-offs, is approximated by a rank-R canonical polyadic model whose factor
//! columns are valid 1-D CDFs and whose weights lie on the simplex. Such a
//! model is a latent-variable naive Bayes model, so sampling, marginals,
//! conditionals, box probabilities, densities, imputation and classification
//! all follow in closed form from the factors.

pub mod admm;
pub mod cli;
pub mod copula;
pub mod datasets;
pub mod empirical;
pub mod error;
pub mod inference;
pub mod io;
pub mod model;
pub mod projections;
pub mod sgd;
pub mod tensor;

pub use admm::{fit_admm, AdmmConfig};
pub use copula::MarginalTransform;
pub use empirical::{
    build_grid, empirical_at, materialize_empirical, Dataset, EmpiricalCdf, GridReduction,
};
pub use error::{Error, Result};
pub use inference::{BoxQuery, Posterior, ZeroLikelihoodPolicy};
pub use model::{Affine, CpdModel, FactorMatrix, Grid, Meta, MixtureWeights, VariableKind};
pub use sgd::{fit_sgd, SgdConfig, TargetSampling};

/// Progress callback invoked with `(iteration, objective)`.
pub type Progress<'a> = &'a mut dyn FnMut(usize, f64);
