//! Robust unconstrained online convex optimization under a budget of corrupted gradients.
//!
//! The learner plays `w_t in R^d`, receives a gradient `g~_t` that may be
//! adversarially corrupted on up to `k` rounds, and aims for regret against
//! any comparator `u` measured with the *true* gradients. Corruption is
//! absorbed by clipping plus a composite regularizer; the base learners are
//! parameter-free mirror descent variants.
//!
//! - [`protocol::Protocol`] is the entry point, with known-G and unknown-G presets.
//! - [`mirror::MirrorDescent`] and [`epigraph::EpigraphLearner`] are the base learners.
//! - [`filter`] and [`tracker`] estimate the gradient and iterate scales online.
//! - [`adversary`] holds the gradient streams used in experiments.

pub mod adversary;
pub mod epigraph;
pub mod error;
pub mod filter;
pub mod learner;
pub mod ledger;
pub mod mirror;
pub mod numeric;
pub mod protocol;
pub mod regularizer;
pub mod tracker;
pub mod vector;

pub use error::{Error, Result};
pub use learner::OnlineLearner;
pub use vector::Vector;
