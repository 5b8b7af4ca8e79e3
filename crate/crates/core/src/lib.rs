//! Content selection for student feedback summaries, framed as multi-label
//! classification over a registry of templates.
//!
//! The pipeline: weekly learning-factor series ([`domain`]) are encoded as
//! feature vectors ([`features`]), a multi-label strategy ([`mlc`]) built on
//! decision trees ([`tree`]) predicts one bit per template, and the chosen
//! templates are rendered into a summary ([`nlg`]). [`eval`] runs k-fold
//! comparisons with paired t-tests and [`synth`] generates stand-in data.

pub mod artifact;
pub mod domain;
pub mod error;
pub mod eval;
pub mod features;
pub mod mlc;
pub mod nlg;
pub mod par;
pub mod synth;
pub mod tree;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use par::Execution;
