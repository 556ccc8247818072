//! Clique-decomposed surrogate models.
//!
//! Two fitters share the sum-over-cliques prediction form f̂(x) = Σ_C f̂_C(x_C):
//! an exact one-hot ridge regression for discrete spaces ([`fit_onehot`]) and
//! a masked neural regressor for continuous spaces ([`fit_masked_mlp`]). The
//! monolithic baseline ([`fit_full_mlp`]) is the same machinery with the
//! single clique {0..d−1}.

mod container;
mod masked;
mod onehot;

pub use container::ModelContainer;
pub use masked::{fit_full_mlp, fit_masked_mlp, MaskedMlpModel, MlpFitConfig, MlpFitReport};
pub use onehot::{fit_onehot, OneHotCliqueModel};

use crate::error::Result;
use crate::fgm::CliqueSet;

/// A surrogate decomposed over cliques, exposing per-clique components.
pub trait CliqueComponents {
    fn cliques(&self) -> &CliqueSet;

    /// Value of component `c_idx` at the full design vector `x` (only the
    /// clique's coordinates may influence the result).
    fn component_value(&self, c_idx: usize, x: &[f64]) -> Result<f64>;
}

/// A continuous surrogate with an exact gradient, as required by policy
/// gradient ascent.
pub trait DifferentiableSurrogate: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> Result<f64>;

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
}
