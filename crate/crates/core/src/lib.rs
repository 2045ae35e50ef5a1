//! Coding-time inference from commit timestamps and a "standard coder" effort model.
//!
//! The crate is organised as a pipeline:
//!
//! - [`corpus`] ingests git history into timestamped commits with line diffs.
//! - [`hmm`] fits a per-developer two-state neural hidden Markov model to the
//!   commit stream and estimates coding time for each commit interval.
//! - [`simulator`] produces synthetic developers with known coding ground truth.
//! - [`tokenizer`] turns a commit's composite change string into features.
//! - [`mdn`] is the mixture density network mapping features to coding time.
//! - [`analysis`] and [`stats`] hold the validation and counterfactual studies;
//!   [`synthetic`] generates changes with planted effects to check them.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod hmm;
pub mod mdn;
pub mod optim;
pub mod seed;
pub mod simulator;
pub mod stats;
pub mod synthetic;
pub mod tokenizer;

pub use error::{Error, Result};
