//! Core pipeline for probabilistic league match prediction from season results.
//!
//! The crate covers the full path from raw match records to cross-validated
//! model comparisons:
//!
//! * [`data`] — match records, per-season views, per-team game sequences
//! * [`features`] — leave-one-out scoring/conceding rates and their
//!   combinations, with optional home-advantage adjustment
//! * [`autocorr`] — league-averaged autocorrelation of goal differences,
//!   used to test whether team strength drifts within a season
//! * [`poisson`] — independent-Poisson score model fitted on combined
//!   features, marginalized to goal-difference and total-goals distributions
//! * [`nn`] / [`forest`] — from-scratch one-hidden-layer softmax classifier
//!   and Gini random forest, both emitting class distributions
//! * [`metrics`] — cross entropy and ranked probability score
//! * [`eval`] — matchday cross-validation with a frequency base model,
//!   fold-level standard errors, confusion matrices and averaged predictions
//! * [`synth`] — a seeded season generator with known ground truth
//!
//! Everything here is pure computation over in-memory data; IO, file formats
//! and the command-line front end live in the companion `matchcast-cli` crate.
//! The crate is `no_std`-compatible (with `alloc`) when built without the
//! default `std` feature.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod autocorr;
pub mod data;
pub mod eval;
pub mod features;
pub mod forest;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod outcome;
pub mod poisson;
pub mod rng;
pub mod synth;

#[cfg(test)]
pub(crate) mod testutil;

pub use data::{MatchRecord, SeasonDataset, TeamGameIndex};
pub use eval::{CvReport, EvalOptions};
pub use features::{FeatureRow, FeatureSet, FeatureSetSpec, FeatureTable};
pub use model::{ModelConfig, ModelKind, TrainedModel};
pub use outcome::{ClassRange, OutcomeDistribution, Target};
