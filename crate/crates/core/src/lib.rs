//! Areal risk-perception analytics.
//!
//! Turns ordinal survey answers into per-respondent factor scores, aggregates
//! them to areal units, measures spatial autocorrelation, smooths the unit
//! values with a conditional autoregressive model and relates them to
//! covariates with a Gibbs-sampled Bayesian linear regression. Hazard-exposure
//! covariates are built from planar geometry.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature; file formats and the command-line tool live in the companion
//! `arealrisk` crate.
#![cfg_attr(not(any(test, feature = "std")), no_std)]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod aggregate;
pub mod bayes;
pub mod car;
pub mod error;
pub mod exec;
pub mod exposure;
pub mod factor;
pub mod geometry;
pub mod graph;
pub mod linalg;
pub mod math;
pub mod moran;
pub mod rng;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
