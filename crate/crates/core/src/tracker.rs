//! TRACKER: doubling estimate of the iterate magnitude.
//!
//! `z` starts at `tau_D`. When an iterate's norm strictly exceeds `z`, the
//! threshold jumps to twice that norm and a new epoch begins at that round.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error as CrateError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackerState {
    z: f64,
    tau: f64,
    epoch_index: usize,
    epoch_start_round: usize,
    round: usize,
    doubled_this_round: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerStep {
    pub z: f64,
    pub z_next: f64,
    pub doubled: bool,
    /// Epoch the round belongs to (0 until the first doubling).
    pub epoch: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerRecord {
    pub w_norm: f64,
    pub step: TrackerStep,
}

impl TrackerState {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(CrateError::InvalidParameter(format!(
                "initial magnitude must be positive, got {tau}"
            )));
        }
        Ok(TrackerState {
            z: tau,
            tau,
            epoch_index: 0,
            epoch_start_round: 1,
            round: 0,
            doubled_this_round: false,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.z
    }

    pub fn initial_threshold(&self) -> f64 {
        self.tau
    }

    pub fn epoch_index(&self) -> usize {
        self.epoch_index
    }

    pub fn epoch_start_round(&self) -> usize {
        self.epoch_start_round
    }

    pub fn doubled_this_round(&self) -> bool {
        self.doubled_this_round
    }

    pub fn step(&mut self, w_norm: f64) -> TrackerStep {
        self.round += 1;
        let z = self.z;
        self.doubled_this_round = w_norm > z;
        if self.doubled_this_round {
            self.z = 2.0 * w_norm;
            self.epoch_index += 1;
            self.epoch_start_round = self.round;
        }
        TrackerStep {
            z,
            z_next: self.z,
            doubled: self.doubled_this_round,
            epoch: self.epoch_index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackerViolation {
    #[error("round {round}: epoch index does not follow the doubling rounds")]
    BrokenPartition { round: usize },
    #[error("round {round}: next threshold is neither z nor 2||w||")]
    UnexpectedThreshold { round: usize },
    #[error("{epochs} epochs exceed the bound {bound}")]
    TooManyEpochs { epochs: usize, bound: f64 },
    #[error("round {round}: norm {norm} in epoch 0 exceeds tau {tau}")]
    EpochZeroTooLarge { round: usize, norm: f64, tau: f64 },
    #[error("round {round}: norm {norm} exceeds twice the epoch-opening norm {anchor}")]
    EpochNormTooLarge { round: usize, norm: f64, anchor: f64 },
    #[error("round {round}: threshold decreased")]
    NotMonotone { round: usize },
    #[error("final threshold {z} exceeds max(tau, 2 max||w||) = {bound}")]
    ThresholdTooLarge { z: f64, bound: f64 },
}

/// Audit a TRACKER trace. Epoch membership is reconstructed from the per-round flags.
pub fn check_tracker_lemma(records: &[TrackerRecord], tau: f64) -> std::result::Result<(), TrackerViolation> {
    let mut epoch = 0;
    let mut anchor = 0.0;
    let mut z_prev = tau;
    let mut max_norm = 0.0_f64;
    for (i, r) in records.iter().enumerate() {
        let round = i + 1;
        let s = r.step;
        max_norm = max_norm.max(r.w_norm);
        if s.z != z_prev || s.z_next < s.z {
            return Err(TrackerViolation::NotMonotone { round });
        }
        let expected_next = if s.doubled { 2.0 * r.w_norm } else { s.z };
        if s.z_next != expected_next || s.doubled != (r.w_norm > s.z) {
            return Err(TrackerViolation::UnexpectedThreshold { round });
        }
        if s.doubled {
            epoch += 1;
            anchor = r.w_norm;
        }
        if s.epoch != epoch {
            return Err(TrackerViolation::BrokenPartition { round });
        }
        if epoch == 0 {
            if r.w_norm > tau || s.z != tau || s.z_next != tau {
                return Err(TrackerViolation::EpochZeroTooLarge {
                    round,
                    norm: r.w_norm,
                    tau,
                });
            }
        } else if r.w_norm > 2.0 * anchor {
            return Err(TrackerViolation::EpochNormTooLarge {
                round,
                norm: r.w_norm,
                anchor,
            });
        }
        z_prev = s.z_next;
    }
    let epoch_bound = if max_norm > 0.0 {
        (2.0 * max_norm / tau).log2().max(0.0)
    } else {
        0.0
    };
    if epoch as f64 > epoch_bound {
        return Err(TrackerViolation::TooManyEpochs {
            epochs: epoch,
            bound: epoch_bound,
        });
    }
    let bound = tau.max(2.0 * max_norm);
    if z_prev > bound {
        return Err(TrackerViolation::ThresholdTooLarge { z: z_prev, bound });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(tau: f64, norms: &[f64]) -> (TrackerState, Vec<TrackerRecord>) {
        let mut tr = TrackerState::new(tau).unwrap();
        let recs = norms
            .iter()
            .map(|&w| TrackerRecord {
                w_norm: w,
                step: tr.step(w),
            })
            .collect();
        (tr, recs)
    }

    #[test]
    fn hand_traced_example() {
        let (tr, recs) = run(1.0, &[0.5, 1.5, 2.0, 5.0]);
        let zs: Vec<f64> = recs.iter().map(|r| r.step.z_next).collect();
        let flags: Vec<bool> = recs.iter().map(|r| r.step.doubled).collect();
        assert_eq!(zs, vec![1.0, 3.0, 3.0, 10.0]);
        assert_eq!(flags, vec![false, true, false, true]);
        assert_eq!(tr.epoch_index(), 2);
        assert_eq!(tr.epoch_start_round(), 4);
        assert_eq!(check_tracker_lemma(&recs, 1.0), Ok(()));
        assert!(2.0 <= (2.0 * 5.0_f64).log2());
    }

    #[test]
    fn small_norms_stay_in_epoch_zero() {
        let (tr, recs) = run(1.0, &[0.0, 0.3, 1.0, 0.99]);
        assert!(recs.iter().all(|r| r.step.z_next == 1.0));
        assert_eq!(tr.epoch_index(), 0);
        assert_eq!(check_tracker_lemma(&recs, 1.0), Ok(()));
    }

    #[test]
    fn tie_does_not_double() {
        let (_, recs) = run(2.0, &[2.0]);
        assert!(!recs[0].step.doubled);
    }

    #[test]
    fn geometric_growth() {
        let norms: Vec<f64> = (1..=20).map(|t| 2f64.powi(t)).collect();
        let (tr, recs) = run(1.0, &norms);
        assert_eq!(check_tracker_lemma(&recs, 1.0), Ok(()));
        // z jumps to 2||w|| so every other power of two triggers a new epoch
        assert_eq!(tr.epoch_index(), 10);
        assert!(tr.epoch_index() as f64 <= (2.0 * 2f64.powi(20)).log2());
    }

    #[test]
    fn checker_detects_tampering() {
        let (_, mut recs) = run(1.0, &[0.5, 1.5, 2.0, 5.0]);
        recs[2].step.epoch = 7;
        assert!(matches!(
            check_tracker_lemma(&recs, 1.0),
            Err(TrackerViolation::BrokenPartition { round: 3 })
        ));
    }
}
