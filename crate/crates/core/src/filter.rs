//! FILTER: k-lag adaptive thresholding with gradient clipping.
//!
//! The threshold starts at a guess `tau_G` and doubles only after `k + 1`
//! observed gradients exceeded it since the last doubling. With at most `k`
//! large corruptions, at least one of those `k + 1` exceedances came from a
//! true gradient, so the threshold never outgrows `max(tau_G, 4G)`.
//!
//! The printed pseudocode doubles when the counter reaches `k`; the surrounding
//! analysis counts `k + 1` clipped rounds per doubling, and that is what is
//! implemented. A gradient whose norm equals the threshold passes unclipped.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error as CrateError, Result};
use crate::ledger::clip;
use crate::vector::Vector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterState {
    h: f64,
    tau: f64,
    n: usize,
    k: usize,
    pass_rounds: usize,
    clip_rounds: usize,
    doublings: u32,
}

/// What FILTER emits for one observed gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterStep {
    pub clipped: Vector,
    /// Threshold `h_t` applied this round.
    pub h: f64,
    /// Threshold `h_{t+1}` for the next round.
    pub h_next: f64,
    pub passed: bool,
    pub doubled: bool,
}

/// Scalar summary of a [`FilterStep`], enough to audit the lemma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterRecord {
    pub h: f64,
    pub h_next: f64,
    pub input_norm: f64,
    pub output_norm: f64,
    pub passed: bool,
}

impl FilterStep {
    pub fn record(&self, input_norm: f64) -> FilterRecord {
        FilterRecord {
            h: self.h,
            h_next: self.h_next,
            input_norm,
            output_norm: self.clipped.norm(),
            passed: self.passed,
        }
    }
}

impl FilterState {
    pub fn new(k: usize, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(CrateError::InvalidParameter(format!(
                "initial threshold must be positive, got {tau}"
            )));
        }
        Ok(FilterState {
            h: tau,
            tau,
            n: 0,
            k,
            pass_rounds: 0,
            clip_rounds: 0,
            doublings: 0,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.h
    }

    pub fn initial_threshold(&self) -> f64 {
        self.tau
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn pass_rounds(&self) -> usize {
        self.pass_rounds
    }

    pub fn clip_rounds(&self) -> usize {
        self.clip_rounds
    }

    pub fn doublings(&self) -> u32 {
        self.doublings
    }

    /// Exceedances since the last doubling.
    pub fn counter(&self) -> usize {
        self.n
    }

    pub fn step(&mut self, g_tilde: &Vector) -> FilterStep {
        let h = self.h;
        if g_tilde.norm() <= h {
            self.pass_rounds += 1;
            return FilterStep {
                clipped: g_tilde.clone(),
                h,
                h_next: h,
                passed: true,
                doubled: false,
            };
        }
        let clipped = clip(g_tilde, h);
        self.clip_rounds += 1;
        self.n += 1;
        let doubled = self.n == self.k + 1;
        if doubled {
            self.doublings += 1;
            self.h = self.tau * 2f64.powi(self.doublings as i32);
            self.n = 0;
        }
        FilterStep {
            clipped,
            h,
            h_next: self.h,
            passed: false,
            doubled,
        }
    }
}

/// A FILTER property that failed on a replayed trace.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterViolation {
    #[error("round {round}: threshold changed on a pass round")]
    PassChangedThreshold { round: usize },
    #[error("round {round}: output norm {norm} exceeds threshold {h}")]
    OutputExceedsThreshold { round: usize, norm: f64, h: f64 },
    #[error("round {round}: threshold decreased")]
    NotMonotone { round: usize },
    #[error("final threshold {h} exceeds max(tau, 4G) = {bound}")]
    ThresholdTooLarge { h: f64, bound: f64 },
    #[error("{clip_rounds} clipped rounds exceed the bound {bound}")]
    TooManyClips { clip_rounds: usize, bound: usize },
}

/// `(k + 1) max(ceil(log2(8G / tau)), 1)`
pub fn clip_round_bound(k: usize, lipschitz: f64, tau: f64) -> usize {
    let l = (8.0 * lipschitz / tau).log2().ceil().max(1.0);
    (k + 1) * l as usize
}

/// Audit a FILTER trace against the four lemma properties, given the true `G`
/// of the stream that produced it.
pub fn check_filter_lemma(
    records: &[FilterRecord],
    k: usize,
    tau: f64,
    lipschitz: f64,
) -> std::result::Result<(), FilterViolation> {
    let mut h_prev = tau;
    let mut clip_rounds = 0;
    for (i, r) in records.iter().enumerate() {
        let round = i + 1;
        if r.h < h_prev || r.h_next < r.h {
            return Err(FilterViolation::NotMonotone { round });
        }
        if r.passed && r.h_next != r.h {
            return Err(FilterViolation::PassChangedThreshold { round });
        }
        if r.output_norm > r.h * (1.0 + 1e-12) {
            return Err(FilterViolation::OutputExceedsThreshold {
                round,
                norm: r.output_norm,
                h: r.h,
            });
        }
        if !r.passed {
            clip_rounds += 1;
        }
        h_prev = r.h_next;
    }
    let bound = tau.max(4.0 * lipschitz);
    if h_prev > bound {
        return Err(FilterViolation::ThresholdTooLarge { h: h_prev, bound });
    }
    let clip_bound = clip_round_bound(k, lipschitz, tau);
    if clip_rounds > clip_bound {
        return Err(FilterViolation::TooManyClips {
            clip_rounds,
            bound: clip_bound,
        });
    }
    Ok(())
}
