//! Survey-weighted ("pseudo") Bayesian estimation of the one-way ANOVA
//! random-intercept model under two-stage informative sampling.

pub mod design;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod inference;
mod par;
pub mod popgen;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
