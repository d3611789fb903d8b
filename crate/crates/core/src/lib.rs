//! Coherent set detection in discrete stochastic transition data.
//!
//! Two low-rank pipelines are implemented side by side:
//!
//! - the classical route ([`svd`]): estimate the transition matrix, take the
//!   SVD of its rescaled form, truncate, cluster singular-vector features with
//!   k-means and match the input and output partitions;
//! - direct Bayesian model reduction ([`dbmr`]): alternating maximization of a
//!   relaxed log-likelihood over a left-stochastic factor `lambda` and a hard
//!   affiliation `gamma`, estimating `Lambda = lambda * Gamma` straight from
//!   the counts.
//!
//! [`projection`] and [`bounds`] relate the two objectives: the DBMR output is
//! `P * Pi` for an induced projection `Pi`, and its Frobenius error is bounded
//! by a Kullback-Leibler sum through Pinsker-type inequalities.
//!
//! Matrices are dense [`nalgebra::DMatrix<f64>`]. Category indices are 0-based
//! inside the library and 1-based in every file format and report.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assignment;
pub mod bounds;
pub mod dbmr;
mod error;
pub mod exec;
pub mod generators;
pub mod io;
pub mod kmeans;
pub mod model;
pub mod partition;
pub mod projection;
pub mod report;
pub mod rng;
pub mod svd;

pub use error::{Error, Result};
pub use exec::Execution;
pub use model::{CountMatrix, PairDataset, TransitionModel};
pub use partition::Partition;
