//! The predict/observe contract shared by every learner in the crate.

use crate::error::Result;
use crate::vector::Vector;

/// An online learner playing points in `R^d`.
///
/// `predict` is a pure read of the current state; repeated calls without an
/// intervening `observe` return the same point. Every learner here starts at
/// the origin. The `hint` passed to `observe` is the gradient bound the
/// learner may assume for the *next* round; known-G callers pass `G` every
/// round.
pub trait OnlineLearner {
    fn dim(&self) -> usize;

    fn predict(&self) -> Vector;

    fn observe(&mut self, gradient: &Vector, hint: f64) -> Result<()>;

    /// Return to the freshly-constructed state with the same parameters.
    fn reset(&mut self);
}
