use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{GradientStream, RoundFeedback};
use crate::error::{Error, Result};
use crate::ledger::clip;
use crate::vector::Vector;

/// Adaptive sign gradients of `G |w - 1|`, flipped for `k` consecutive rounds.
///
/// The subgradient at `w = 1` is taken as `-G`.
#[derive(Debug, Clone)]
pub struct SignFlipWindow {
    horizon: usize,
    k: usize,
    window_start: usize,
    lipschitz: f64,
}

impl SignFlipWindow {
    pub fn new(horizon: usize, k: usize, window_start: usize, lipschitz: f64) -> Result<Self> {
        if k > 0 && (window_start == 0 || window_start + k - 1 > horizon) {
            return Err(Error::InvalidParameter(format!(
                "window [{window_start}, {}] does not fit in [1, {horizon}]",
                window_start + k - 1
            )));
        }
        Ok(SignFlipWindow {
            horizon,
            k,
            window_start,
            lipschitz,
        })
    }

    pub fn in_window(&self, t: usize) -> bool {
        self.k > 0 && t >= self.window_start && t < self.window_start + self.k
    }
}

impl GradientStream for SignFlipWindow {
    fn dim(&self) -> usize {
        1
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn next(&mut self, t: usize, w: &Vector) -> Result<RoundFeedback> {
        w.check_dim(1)?;
        let g = if w[0] > 1.0 { self.lipschitz } else { -self.lipschitz };
        let observed = if self.in_window(t) { -g } else { g };
        Ok(RoundFeedback {
            g_true: Vector::scalar(g),
            g_observed: Vector::scalar(observed),
        })
    }

    fn loss(&self, _t: usize, w: &Vector) -> Option<f64> {
        Some(self.lipschitz * (w[0] - 1.0).abs())
    }

    fn comparator(&self) -> Option<Vector> {
        Some(Vector::scalar(1.0))
    }

    fn declared_budget(&self) -> usize {
        self.k
    }
}

/// Uniform gradients on `[-G, G]^d` clipped to norm `G`, with `k` random
/// rounds reported as `-10 g`.
#[derive(Debug, Clone)]
pub struct IidRandom {
    horizon: usize,
    k: usize,
    dim: usize,
    lipschitz: f64,
    corrupted: Vec<bool>,
    rng: ChaCha8Rng,
}

impl IidRandom {
    pub fn new(horizon: usize, k: usize, dim: usize, lipschitz: f64, mut rng: ChaCha8Rng) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyVector);
        }
        if k > horizon {
            return Err(Error::InvalidParameter(format!("budget {k} exceeds horizon {horizon}")));
        }
        let mut corrupted = vec![false; horizon];
        for i in sample(&mut rng, horizon, k) {
            corrupted[i] = true;
        }
        Ok(IidRandom {
            horizon,
            k,
            dim,
            lipschitz,
            corrupted,
            rng,
        })
    }
}

impl GradientStream for IidRandom {
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
        let g_max = self.lipschitz;
        let coords: Vec<f64> = loop {
            let c: Vec<f64> = (0..self.dim).map(|_| self.rng.random_range(-g_max..=g_max)).collect();
            // a zero draw would make the corrupted copy equal to the truth
            if c.iter().any(|&x| x != 0.0) {
                break c;
            }
        };
        let g = clip(&Vector::new(coords)?, g_max);
        let corrupted = t >= 1 && t <= self.horizon && self.corrupted[t - 1];
        Ok(if corrupted {
            RoundFeedback {
                g_observed: g.scaled(-10.0),
                g_true: g,
            }
        } else {
            RoundFeedback::clean(g)
        })
    }

    fn declared_budget(&self) -> usize {
        self.k
    }
}

/// Importance reweighting of a base stream by a distribution `p` within total
/// variation `k / T` of uniform: `g~_t = T p_t g_t`.
///
/// `p` boosts `k` random rounds by a factor `m` and renormalizes. For `T > 2k`
/// the largest admissible factor `m = 1 + T / (T - 2k)` is used, which puts the
/// total variation exactly at `k / T`.
pub struct DroReweight {
    base: Box<dyn GradientStream>,
    k: usize,
    weights: Vec<f64>,
}

impl DroReweight {
    pub fn new(base: Box<dyn GradientStream>, k: usize, mut rng: ChaCha8Rng) -> Result<Self> {
        let horizon = base.horizon();
        if k > horizon {
            return Err(Error::InvalidParameter(format!("budget {k} exceeds horizon {horizon}")));
        }
        let t = horizon as f64;
        let m = if 2 * k < horizon {
            1.0 + t / (t - 2.0 * k as f64)
        } else {
            3.0
        };
        let mut raw = vec![1.0; horizon];
        for i in sample(&mut rng, horizon, k) {
            raw[i] = m;
        }
        let total: f64 = raw.iter().sum();
        let weights = raw.into_iter().map(|r| r / total).collect();
        Ok(DroReweight { base, k, weights })
    }

    /// The reweighting distribution `p`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_variation(&self) -> f64 {
        let q = 1.0 / self.weights.len() as f64;
        0.5 * self.weights.iter().map(|p| (p - q).abs()).sum::<f64>()
    }
}

impl GradientStream for DroReweight {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn horizon(&self) -> usize {
        self.base.horizon()
    }

    fn lipschitz(&self) -> f64 {
        self.base.lipschitz()
    }

    fn next(&mut self, t: usize, w: &Vector) -> Result<RoundFeedback> {
        let fb = self.base.next(t, w)?;
        let factor = self.weights.len() as f64 * self.weights[t - 1];
        let g_observed = if factor == 1.0 {
            fb.g_true.clone()
        } else {
            fb.g_true.scaled(factor)
        };
        Ok(RoundFeedback {
            g_true: fb.g_true,
            g_observed,
        })
    }

    /// Bound on the normalized deviation `sum ||g - g~|| / G`, which is `2k`.
    fn declared_budget(&self) -> usize {
        2 * self.k
    }
}
