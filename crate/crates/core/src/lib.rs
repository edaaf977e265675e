//! Streaming AUC maximization with second-order surrogate losses.
//!
//! The central idea: instead of replacing each pairwise 0/1 comparison with a
//! convex surrogate (which forces either instance storage or a square loss),
//! the whole per-round average pairwise loss is replaced by a function of the
//! first and second moments of the opposite-class history. Two surrogates are
//! provided: the square-based `psi_s` (exactly equal to the average pairwise
//! square loss) and the hinge-based `psi_m` (the worst-case average hinge loss
//! over all point sets sharing the observed moments).
//!
//! Modules:
//! - [`linalg`]: dense vector/matrix primitives
//! - [`moments`]: per-class running mean/covariance with exact recursions
//! - [`surrogate`]: the losses, their gradients, and verification oracles
//! - [`linear`]: the linear online learners plus Perceptron/PA-I baselines
//! - [`kernel`]: the budgeted kernel learners with FIFO weight-transfer eviction
//! - [`eval`]: AUC metric, cross-validation, grid search, experiment protocol
//! - [`data`]: LIBSVM parsing, label binarization, feature scaling, streams
//! - [`synth`]: deterministic synthetic stream generators for tests/demos
//! - [`verify`]: the seeded oracle suites behind the `verify` CLI command

pub mod data;
pub mod eval;
pub mod kernel;
pub mod linalg;
pub mod linear;
pub mod moments;
pub mod surrogate;
pub mod synth;
pub mod verify;

mod error;
mod gd;

pub use error::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
