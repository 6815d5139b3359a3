//! Gradient streams for experiments, and the KT-bettor baseline.
//!
//! A [`GradientStream`] is asked for round `t`'s gradients after the learner
//! has committed to `w_t`, so adaptive constructions such as the sign-flip
//! attack can react to the iterate. Oblivious streams simply ignore it.

mod kt;
mod lower_bound;
mod streams;

pub use kt::KtBettor;
pub use lower_bound::{random_seq_expectation, LbOrigin, LbTheorem2, MAX_ENUMERATION_HORIZON, MAX_ORIGIN_HORIZON};
pub use streams::{DroReweight, IidRandom, SignFlipWindow};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::Vector;

/// The true gradient `g_t` and the possibly corrupted `g~_t` the learner sees.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundFeedback {
    pub g_true: Vector,
    pub g_observed: Vector,
}

impl RoundFeedback {
    pub fn clean(g: Vector) -> Self {
        RoundFeedback {
            g_observed: g.clone(),
            g_true: g,
        }
    }

    pub fn is_corrupted(&self) -> bool {
        self.g_true != self.g_observed
    }
}

pub trait GradientStream: Send {
    fn dim(&self) -> usize;

    fn horizon(&self) -> usize;

    /// Bound on `||g_t||` for the true gradients.
    fn lipschitz(&self) -> f64;

    /// Gradients for round `t` (1-based) given the iterate `w_t`.
    fn next(&mut self, t: usize, w: &Vector) -> Result<RoundFeedback>;

    /// `l_t(w)` when the stream comes from an explicit loss.
    fn loss(&self, _t: usize, _w: &Vector) -> Option<f64> {
        None
    }

    /// The comparator the construction is designed against, if any.
    fn comparator(&self) -> Option<Vector> {
        None
    }

    /// Number of rounds the construction intends to corrupt.
    fn declared_budget(&self) -> usize;
}

/// A seeded generator; `stream` selects an independent sub-sequence.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    SignFlipWindow,
    LbTheorem2,
    LbOrigin,
    DroReweight,
    IidRandom,
}

impl AdversaryKind {
    pub const ALL: [AdversaryKind; 5] = [
        AdversaryKind::SignFlipWindow,
        AdversaryKind::LbTheorem2,
        AdversaryKind::LbOrigin,
        AdversaryKind::DroReweight,
        AdversaryKind::IidRandom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AdversaryKind::SignFlipWindow => "sign_flip_window",
            AdversaryKind::LbTheorem2 => "lb_theorem2",
            AdversaryKind::LbOrigin => "lb_origin",
            AdversaryKind::DroReweight => "dro_reweight",
            AdversaryKind::IidRandom => "iid_random",
        }
    }
}

fn default_one() -> f64 {
    1.0
}

fn default_dim() -> usize {
    1
}

/// Serializable description of a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarySpec {
    pub kind: AdversaryKind,
    pub horizon: usize,
    pub k: usize,
    /// First corrupted round of the sign-flip window; defaults to `T - 5k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_start: Option<usize>,
    /// Comparator magnitude `D` of the lower-bound construction.
    #[serde(default = "default_one")]
    pub magnitude: f64,
    /// Scale of the origin lower-bound comparator, `||u*|| = 2 eps e^T`.
    #[serde(default = "default_one")]
    pub epsilon: f64,
    /// Scale `G` of every true gradient.
    #[serde(default = "default_one")]
    pub lipschitz: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dim")]
    pub dim: usize,
}

impl AdversarySpec {
    pub fn new(kind: AdversaryKind, horizon: usize, k: usize) -> Self {
        AdversarySpec {
            kind,
            horizon,
            k,
            window_start: None,
            magnitude: 1.0,
            epsilon: 1.0,
            lipschitz: 1.0,
            seed: 0,
            dim: 1,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    /// `T - 5k` when that leaves room for the window, else the last `k` rounds.
    pub fn effective_window_start(&self) -> usize {
        self.window_start.unwrap_or_else(|| {
            let t = self.horizon;
            let back = 5 * self.k;
            if back < t {
                t - back
            } else {
                t + 1 - self.k.min(t)
            }
        })
    }

    pub fn build(&self) -> Result<Box<dyn GradientStream>> {
        if !(self.lipschitz > 0.0 && self.lipschitz.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "G must be positive, got {}",
                self.lipschitz
            )));
        }
        Ok(match self.kind {
            AdversaryKind::SignFlipWindow => {
                if self.dim != 1 {
                    return Err(Error::InvalidParameter("sign_flip_window is one-dimensional".into()));
                }
                Box::new(SignFlipWindow::new(
                    self.horizon,
                    self.k,
                    self.effective_window_start(),
                    self.lipschitz,
                )?)
            }
            AdversaryKind::LbTheorem2 => Box::new(LbTheorem2::new(
                self.horizon,
                self.k,
                self.magnitude,
                self.seed,
                self.dim,
                self.lipschitz,
            )?),
            AdversaryKind::LbOrigin => Box::new(LbOrigin::new(
                self.horizon,
                self.k,
                self.epsilon,
                self.dim,
                self.lipschitz,
            )?),
            AdversaryKind::DroReweight => {
                let base = IidRandom::new(self.horizon, 0, self.dim, self.lipschitz, seeded_rng(self.seed, 1))?;
                Box::new(DroReweight::new(Box::new(base), self.k, seeded_rng(self.seed, 2))?)
            }
            AdversaryKind::IidRandom => Box::new(IidRandom::new(
                self.horizon,
                self.k,
                self.dim,
                self.lipschitz,
                seeded_rng(self.seed, 0),
            )?),
        })
    }
}
