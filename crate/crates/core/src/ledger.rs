//! Gradient clipping plus the regret and corruption-budget ledgers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::Vector;

/// Rescale `g` to norm at most `h`, preserving direction. The zero vector maps to itself.
pub fn clip(g: &Vector, h: f64) -> Vector {
    debug_assert!(h > 0.0);
    let n = g.norm();
    if n <= h {
        return g.clone();
    }
    // rounding can leave the rescaled norm a few ulps above h
    let mut factor = h / n;
    let mut out = g.scaled(factor);
    while out.norm() > h {
        factor = factor.next_down();
        out = g.scaled(factor);
    }
    out
}

/// Running linearized regret against a fixed comparator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    pub comparator: Vector,
    /// `sum <g_t, w_t - u>` with the true gradients.
    pub true_regret_linear: f64,
    /// `sum <g~_t, w_t - u>` with the gradients the learner saw.
    pub observed_regret_linear: f64,
    /// `sum l_t(w_t) - l_t(u)` when a loss oracle is available.
    pub loss_regret: f64,
    pub rounds: usize,
}

impl RegretLedger {
    pub fn new(comparator: Vector) -> Self {
        RegretLedger {
            comparator,
            true_regret_linear: 0.0,
            observed_regret_linear: 0.0,
            loss_regret: 0.0,
            rounds: 0,
        }
    }

    pub fn update(&mut self, w: &Vector, g_true: &Vector, g_observed: &Vector) -> Result<()> {
        let d = self.comparator.dim();
        w.check_dim(d)?;
        g_true.check_dim(d)?;
        g_observed.check_dim(d)?;
        let gap = w.sub(&self.comparator);
        self.true_regret_linear += g_true.dot(&gap);
        self.observed_regret_linear += g_observed.dot(&gap);
        self.rounds += 1;
        Ok(())
    }

    /// Add `loss_w - loss_u` for the current round.
    pub fn record_loss(&mut self, loss_w: f64, loss_u: f64) {
        self.loss_regret += loss_w - loss_u;
    }
}

/// Corruption accounting against a Lipschitz scale `G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionLedger {
    pub lipschitz: f64,
    /// Rounds with `g~_t != g_t`.
    pub count_corrupted: usize,
    /// Rounds with `||g_t - g~_t|| >= G`.
    pub big_rounds: usize,
    /// `sum min(||g_t - g~_t||, G)`.
    pub deviation_sum: f64,
    /// `sum ||g_t - g~_t|| / G`, the unclipped deviation measure.
    pub raw_deviation: f64,
}

impl CorruptionLedger {
    pub fn new(lipschitz: f64) -> Result<Self> {
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Lipschitz scale must be positive, got {lipschitz}"
            )));
        }
        Ok(CorruptionLedger {
            lipschitz,
            count_corrupted: 0,
            big_rounds: 0,
            deviation_sum: 0.0,
            raw_deviation: 0.0,
        })
    }

    pub fn update(&mut self, g_true: &Vector, g_tilde: &Vector) -> Result<()> {
        g_tilde.check_dim(g_true.dim())?;
        if g_true == g_tilde {
            return Ok(());
        }
        let dev = g_true.sub(g_tilde).norm();
        self.count_corrupted += 1;
        if dev >= self.lipschitz {
            self.big_rounds += 1;
        }
        self.deviation_sum += dev.min(self.lipschitz);
        self.raw_deviation += dev / self.lipschitz;
        Ok(())
    }

    /// Normalized budget `sum min(||g - g~||, G) / G`.
    pub fn normalized_deviation(&self) -> f64 {
        self.deviation_sum / self.lipschitz
    }

    /// Whether both budget assumptions hold for corruption level `k`.
    pub fn within_budget(&self, k: f64) -> bool {
        self.big_rounds as f64 <= k && self.normalized_deviation() <= k * (1.0 + 1e-12)
    }
}
