//! A laboratory for studying how the size and distribution of the initial
//! design affect sequential model-based optimization (EGO: Gaussian-process
//! surrogate + expected improvement).
//!
//! The crate is organised bottom-up:
//!
//! - [`design`]: uniform, Latin hypercube, Halton and Sobol' point sets in the
//!   unit cube, plus scaling to a search box and a star-discrepancy estimate.
//! - [`benchmarks`]: a BBOB-like registry of test functions with exactly known
//!   optima on `[-5, 5]^d`.
//! - [`surrogate`]: Matérn 5/2 Kriging with maximum-likelihood hyperparameters.
//! - [`acquisition`]: expected improvement and its inner maximisation.
//! - [`ego`]: the sequential loop producing a [`ego::RunRecord`].
//! - [`runner`]: factorial experiment plans, parallel execution and a
//!   JSON-lines results store.
//! - [`analysis`]: median precision, virtual best solver, relative precision,
//!   win counts, distribution summaries and restart percentiles.
//! - [`cli`]: the `smbo-lab` command line.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod analysis;
pub mod benchmarks;
pub mod cli;
pub mod design;
pub mod ego;
pub mod error;
pub mod linalg;
pub mod neldermead;
pub mod rng;
pub mod runner;
pub mod surrogate;

pub use error::{Error, Result};
