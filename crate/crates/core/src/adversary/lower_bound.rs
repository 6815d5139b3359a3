use rand::Rng;

use super::{seeded_rng, GradientStream, RoundFeedback};
use crate::error::{Error, Result};
use crate::vector::Vector;

pub const MAX_ENUMERATION_HORIZON: usize = 20;
/// `||u*|| = 2 eps e^T` must stay well inside `f64`.
pub const MAX_ORIGIN_HORIZON: usize = 30;

/// `+1` for nonnegative sums, `-1` otherwise.
fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `E |z_1 + ... + z_T|` for i.i.d. uniform signs, by enumerating all `2^T` sequences.
pub fn random_seq_expectation(horizon: usize) -> Result<f64> {
    if horizon > MAX_ENUMERATION_HORIZON {
        return Err(Error::HorizonTooLarge {
            requested: horizon,
            max: MAX_ENUMERATION_HORIZON,
        });
    }
    let n = horizon as i64;
    let total: u64 = (0u64..1 << horizon)
        .map(|mask| (2 * mask.count_ones() as i64 - n).unsigned_abs())
        .sum();
    Ok(total as f64 / (1u64 << horizon) as f64)
}

/// The corrupted-feedback lower-bound sequence.
///
/// Signs `z_{k+1}, ..., z_T` are uniform; the first `k` rounds repeat
/// `sign(sum_{t>k} z_t)` but are hidden from the learner (`g~ = 0`). The
/// comparator `u* = -D sign(sum z) e_1` collects `D` on every hidden round.
#[derive(Debug, Clone)]
pub struct LbTheorem2 {
    dim: usize,
    k: usize,
    lipschitz: f64,
    z: Vec<f64>,
    comparator: Vector,
}

impl LbTheorem2 {
    pub fn new(horizon: usize, k: usize, magnitude: f64, seed: u64, dim: usize, lipschitz: f64) -> Result<Self> {
        if k >= horizon {
            return Err(Error::InvalidParameter(format!(
                "need k < T, got k = {k}, T = {horizon}"
            )));
        }
        if dim == 0 {
            return Err(Error::EmptyVector);
        }
        let mut rng = seeded_rng(seed, 0);
        let mut z = vec![0.0; horizon];
        for zt in z.iter_mut().skip(k) {
            *zt = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        let s = sign(z.iter().sum());
        for zt in z.iter_mut().take(k) {
            *zt = s;
        }
        Ok(LbTheorem2 {
            dim,
            k,
            lipschitz,
            z,
            comparator: Vector::basis(dim, -magnitude * s),
        })
    }

    pub fn signs(&self) -> &[f64] {
        &self.z
    }
}

impl GradientStream for LbTheorem2 {
    fn dim(&self) -> usize {
        self.dim
    }

    fn horizon(&self) -> usize {
        self.z.len()
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn next(&mut self, t: usize, _w: &Vector) -> Result<RoundFeedback> {
        let g = Vector::basis(self.dim, self.lipschitz * self.z[t - 1]);
        Ok(if t <= self.k {
            RoundFeedback {
                g_true: g,
                g_observed: Vector::zeros(self.dim),
            }
        } else {
            RoundFeedback::clean(g)
        })
    }

    fn comparator(&self) -> Option<Vector> {
        Some(self.comparator.clone())
    }

    fn declared_budget(&self) -> usize {
        self.k
    }
}

/// The origin lower-bound sequence: the learner always sees `g~ = G e_1`, while
/// on the last `k` rounds the truth is `g~ - G u*/||u*|| = 0`.
#[derive(Debug, Clone)]
pub struct LbOrigin {
    horizon: usize,
    k: usize,
    dim: usize,
    lipschitz: f64,
    comparator: Vector,
}

impl LbOrigin {
    pub fn new(horizon: usize, k: usize, epsilon: f64, dim: usize, lipschitz: f64) -> Result<Self> {
        if horizon > MAX_ORIGIN_HORIZON {
            return Err(Error::HorizonTooLarge {
                requested: horizon,
                max: MAX_ORIGIN_HORIZON,
            });
        }
        if k > horizon {
            return Err(Error::InvalidParameter(format!("budget {k} exceeds horizon {horizon}")));
        }
        if dim == 0 {
            return Err(Error::EmptyVector);
        }
        Ok(LbOrigin {
            horizon,
            k,
            dim,
            lipschitz,
            comparator: Vector::basis(dim, 2.0 * epsilon * (horizon as f64).exp()),
        })
    }
}

impl GradientStream for LbOrigin {
    fn dim(&self) -> usize {
        self.dim
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn next(&mut self, t: usize, _w: &Vector) -> Result<RoundFeedback> {
        let observed = Vector::basis(self.dim, self.lipschitz);
        Ok(if t + self.k > self.horizon {
            let direction = self.comparator.direction().expect("comparator is nonzero");
            RoundFeedback {
                g_true: observed.sub(&direction.scaled(self.lipschitz)),
                g_observed: observed,
            }
        } else {
            RoundFeedback::clean(observed)
        })
    }

    fn comparator(&self) -> Option<Vector> {
        Some(self.comparator.clone())
    }

    fn declared_budget(&self) -> usize {
        self.k
    }
}
