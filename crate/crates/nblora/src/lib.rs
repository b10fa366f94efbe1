//! Norm-bounded low-rank matrix parameterizations.
//!
//! This crate implements two complete parameterizations of matrices with
//! prescribed rank and Schatten-norm budgets, built on a rectangular
//! Cayley transformation, together with analytic gradients, an AdamW
//! optimizer with a one-cycle schedule, and two desk-scale applications:
//! nuclear-norm matrix completion and differentially private low-rank
//! model merging.

pub mod cayley;
pub mod completion;
pub mod grad;
pub mod matrix;
pub mod merge;
pub mod optim;
pub mod params;
pub mod rng;
pub mod svd;
