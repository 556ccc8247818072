//! Dense numerics substrate: matrices and linear solves, a deterministic
//! seeded RNG, a small tanh MLP with exact backpropagation, and Adam.

mod adam;
mod matrix;
mod mlp;
mod rng;

pub use adam::{adam_step, AdamParams, AdamState};
pub use matrix::{solve_ridge, DenseMatrix};
pub use mlp::{Mlp, MlpGradients};
pub use rng::Rng;
