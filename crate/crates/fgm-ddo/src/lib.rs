//! Offline data-driven optimization (DDO) with functional graphical models.
//!
//! Given a fixed dataset of (design, value) pairs and no ability to query the
//! black-box objective online, this crate
//!
//! 1. discovers an independence graph over the input coordinates from the
//!    data via a second-order Stein identity estimator ([`discovery`]),
//! 2. enumerates the graph's maximal cliques and fits a surrogate model that
//!    decomposes as a sum of per-clique components ([`fgm`], [`surrogate`]),
//! 3. optimizes designs against the decomposed surrogate — exact discrete
//!    argmax or gradient ascent on a Gaussian design distribution
//!    ([`optimize`]),
//! 4. and ships the synthetic benchmark generators and coverage/correlation
//!    diagnostics used to evaluate all of the above ([`bench`]).
//!
//! Non-Gaussian data can be routed through a small Gaussian-prior VAE
//! ([`vae`]) before graph discovery.
//!
//! Everything is `f64`, deterministic given a seed, and free of global state.
//! With the default `parallel` feature, data-parallel inner loops run on
//! rayon; results are bit-identical with the feature disabled.

pub mod bench;
pub mod data;
pub mod discovery;
mod error;
pub mod fgm;
pub mod numkit;
pub mod optimize;
pub mod par;
pub mod surrogate;
pub mod vae;

pub use data::{Dataset, Space};
pub use error::{Error, Result};
pub use numkit::{DenseMatrix, Mlp, Rng};
