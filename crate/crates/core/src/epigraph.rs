//! The unknown-G base learner: two mirror-descent learners coupled through
//! the epigraph `W = {(w, y) : y >= ||w||^2}`.
//!
//! `A_w` proposes `w^`, the scalar learner `A_y` proposes `y^`, and the pair is
//! projected onto `W` in the weighted norm `h^2 ||w||^2 + gamma^2 y^2`. The
//! played point is the `w` part. Feedback to both learners carries a
//! correction along the projection's normal, so that regret of the unconstrained
//! pair transfers to the constrained one. The `y` coordinate pays the quadratic
//! regularizer `a_t ||w||^2` through the linear loss `a_t y`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::OnlineLearner;
use crate::mirror::{MirrorDescent, MirrorDescentConfig};
use crate::vector::Vector;

const PROJECTION_MAX_BISECTIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpigraphPoint {
    pub w: Vector,
    pub y: f64,
}

impl EpigraphPoint {
    pub fn origin(dim: usize) -> Self {
        EpigraphPoint {
            w: Vector::zeros(dim),
            y: 0.0,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.y >= self.w.norm_sq()
    }
}

/// Schedules for the quadratic weights `alpha_t` and `beta_t`.
///
/// `alpha_t` fires with weight `gamma_alpha` on rounds where FILTER doubled
/// its threshold. `beta_t` fires on TRACKER doublings with weight
/// `gamma_beta / (1 + n)`, where `n` counts tracker doublings so far including
/// the current one, so its total stays logarithmic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadWeights {
    pub gamma_alpha: f64,
    pub gamma_beta: f64,
    beta_denominator: u64,
}

impl QuadWeights {
    pub fn new(gamma_alpha: f64, gamma_beta: f64) -> Result<Self> {
        if !(gamma_alpha >= 0.0 && gamma_beta >= 0.0 && (gamma_alpha + gamma_beta).is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "quadratic weights must be finite and >= 0, got ({gamma_alpha}, {gamma_beta})"
            )));
        }
        Ok(QuadWeights {
            gamma_alpha,
            gamma_beta,
            beta_denominator: 1,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma_alpha + self.gamma_beta
    }

    pub fn beta_denominator(&self) -> u64 {
        self.beta_denominator
    }

    /// `(alpha_t, beta_t)` for a round with the given doubling flags.
    pub fn compute(&mut self, filter_doubled: bool, tracker_doubled: bool) -> (f64, f64) {
        let alpha = if filter_doubled { self.gamma_alpha } else { 0.0 };
        let beta = if tracker_doubled {
            self.beta_denominator += 1;
            self.gamma_beta / self.beta_denominator as f64
        } else {
            0.0
        };
        (alpha, beta)
    }
}

/// `phi(s) - h^2 ||w^||` for the boundary stationarity equation, with the scale of its terms.
fn stationarity(s: f64, norm_hat: f64, y_hat: f64, h: f64, gamma: f64) -> (f64, f64) {
    let h2 = h * h;
    let g2 = 2.0 * gamma * gamma;
    let value = s * (h2 + g2 * (s * s - y_hat)) - h2 * norm_hat;
    let scale = h2 * norm_hat + h2 * s + g2 * s * (s * s + y_hat.abs());
    (value, scale)
}

/// Weighted projection of `point` onto `W`:
/// `argmin_{y >= ||w||^2} h^2 ||w - w^||^2 + gamma^2 (y - y^)^2`.
///
/// Exterior points land on the boundary at `w = s w^ / ||w^||, y = s^2`, where
/// `s` is the unique root of `s (h^2 + 2 gamma^2 (s^2 - y^)) = h^2 ||w^||` on
/// `[sqrt(max(y^, 0)), ||w^||]`. The left side is increasing there and brackets
/// the right side at the two ends.
pub fn weighted_project(point: &EpigraphPoint, h: f64, gamma: f64) -> Result<EpigraphPoint> {
    if !(h > 0.0 && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "projection weights must be positive, got h = {h}, gamma = {gamma}"
        )));
    }
    if !point.w.is_finite() || !point.y.is_finite() {
        return Err(Error::NonFinite {
            context: "epigraph point".into(),
        });
    }
    if point.is_feasible() {
        return Ok(point.clone());
    }
    let n = point.w.norm();
    if n == 0.0 {
        return Ok(EpigraphPoint {
            w: point.w.clone(),
            y: point.y.max(0.0),
        });
    }
    let mut lo = point.y.max(0.0).sqrt().min(n);
    let mut hi = n;
    let mut s = 0.5 * (lo + hi);
    for _ in 0..PROJECTION_MAX_BISECTIONS {
        s = 0.5 * (lo + hi);
        if s <= lo || s >= hi {
            break;
        }
        let (value, _) = stationarity(s, n, point.y, h, gamma);
        if value == 0.0 {
            break;
        }
        if value < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
    }
    let candidates = [lo, s, hi];
    let s = candidates
        .into_iter()
        .min_by(|&a, &b| {
            let ra = stationarity(a, n, point.y, h, gamma).0.abs();
            let rb = stationarity(b, n, point.y, h, gamma).0.abs();
            ra.total_cmp(&rb)
        })
        .unwrap_or(s);
    let residual = projection_residual(point, s, h, gamma);
    if residual > 1e-12 {
        return Err(Error::SolverDiverged {
            solver: "epigraph projection",
            target: h * h * n,
            residual,
        });
    }
    let w = point.w.scaled(s / n);
    let y = (s * s).max(w.norm_sq());
    Ok(EpigraphPoint { w, y })
}

/// Relative residual of the boundary stationarity equation at radius `s`,
/// scaled by the magnitude of its terms.
pub fn projection_residual(hat: &EpigraphPoint, s: f64, h: f64, gamma: f64) -> f64 {
    let (value, scale) = stationarity(s, hat.w.norm(), hat.y, h, gamma);
    if scale == 0.0 {
        value.abs()
    } else {
        value.abs() / scale
    }
}

/// `||(g, a)||_* = sqrt(||g||^2 / h^2 + a^2 / gamma^2)`.
pub fn dual_norm(g: &Vector, a: f64, h: f64, gamma: f64) -> f64 {
    (g.norm_sq() / (h * h) + a * a / (gamma * gamma)).sqrt()
}

/// Feedback correction `(delta_w, delta_y)` for an exterior proposal.
///
/// The direction is the unit-dual-norm normal `(h^2 dw, gamma^2 dy) / sqrt(D)`
/// with `dw = w^ - w`, `dy = y^ - y`, `D = h^2 ||dw||^2 + gamma^2 dy^2`, scaled
/// by [`dual_norm`] of the round's feedback. Interior proposals get no correction.
pub fn correction_direction(
    hat: &EpigraphPoint,
    proj: &EpigraphPoint,
    h: f64,
    gamma: f64,
    g_clipped: &Vector,
    a_t: f64,
) -> (Vector, f64) {
    let dw = hat.w.sub(&proj.w);
    let dy = hat.y - proj.y;
    let d = h * h * dw.norm_sq() + gamma * gamma * dy * dy;
    if d == 0.0 || hat == proj {
        return (Vector::zeros(hat.w.dim()), 0.0);
    }
    let scale = dual_norm(g_clipped, a_t, h, gamma) / d.sqrt();
    (dw.scaled(h * h * scale), gamma * gamma * dy * scale)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpigraphConfig {
    pub dim: usize,
    pub epsilon: f64,
    /// Huber regularizer of `A_w`.
    pub c: f64,
    pub p: f64,
    pub alpha: f64,
    /// FILTER's initial threshold, which is `h_1`.
    pub tau_g: f64,
    pub gamma_alpha: f64,
    pub gamma_beta: f64,
}

/// Per-round diagnostics of [`EpigraphLearner::observe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpigraphRound {
    pub a_t: f64,
    pub delta_w_norm: f64,
    pub delta_y: f64,
    /// `h_t` used for the correction.
    pub h: f64,
    pub w_feedback_norm: f64,
    pub y_feedback: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpigraphLearner {
    config: EpigraphConfig,
    a_w: MirrorDescent,
    a_y: MirrorDescent,
    gamma: f64,
    h: f64,
    hat: EpigraphPoint,
    point: EpigraphPoint,
}

impl EpigraphLearner {
    pub fn new(config: EpigraphConfig) -> Result<Self> {
        let gamma = config.gamma_alpha + config.gamma_beta;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma_alpha + gamma_beta must be positive, got {gamma}"
            )));
        }
        if !(config.tau_g > 0.0 && config.tau_g.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tau_G must be positive, got {}",
                config.tau_g
            )));
        }
        let a_w = MirrorDescent::new(MirrorDescentConfig {
            dim: config.dim,
            epsilon: config.epsilon,
            c: config.c,
            p: config.p,
            alpha: config.alpha,
            initial_hint: 2.0 * config.tau_g,
        })?;
        let a_y = MirrorDescent::new(MirrorDescentConfig {
            dim: 1,
            epsilon: config.epsilon,
            c: 0.0,
            p: 2.0,
            alpha: 1.0,
            initial_hint: 1.5 * gamma,
        })?;
        Ok(EpigraphLearner {
            a_w,
            a_y,
            gamma,
            h: config.tau_g,
            hat: EpigraphPoint::origin(config.dim),
            point: EpigraphPoint::origin(config.dim),
            config,
        })
    }

    pub fn config(&self) -> &EpigraphConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The played `w_t`.
    pub fn predict(&self) -> Vector {
        self.point.w.clone()
    }

    pub fn point(&self) -> &EpigraphPoint {
        &self.point
    }

    /// The unprojected proposal `(w^_t, y^_t)`.
    pub fn proposal(&self) -> &EpigraphPoint {
        &self.hat
    }

    pub fn w_learner(&self) -> &MirrorDescent {
        &self.a_w
    }

    pub fn y_learner(&self) -> &MirrorDescent {
        &self.a_y
    }

    /// Feed the clipped gradient for the current round together with the
    /// next threshold and this round's quadratic weights.
    pub fn observe(&mut self, g_clipped: &Vector, h_next: f64, alpha_t: f64, beta_t: f64) -> Result<EpigraphRound> {
        g_clipped.check_dim(self.config.dim)?;
        let a_t = alpha_t + beta_t;
        let (delta_w, delta_y) = correction_direction(&self.hat, &self.point, self.h, self.gamma, g_clipped, a_t);
        let w_feedback = g_clipped.add(&delta_w).scaled(0.5);
        let y_feedback = 0.5 * (a_t + delta_y);
        self.a_w.observe(&w_feedback, 2.0 * h_next)?;
        self.a_y.observe(&Vector::scalar(y_feedback), 1.5 * self.gamma)?;
        let round = EpigraphRound {
            a_t,
            delta_w_norm: delta_w.norm(),
            delta_y,
            h: self.h,
            w_feedback_norm: w_feedback.norm(),
            y_feedback,
        };
        self.h = h_next;
        self.hat = EpigraphPoint {
            w: self.a_w.predict(),
            y: self.a_y.predict()[0],
        };
        self.point = weighted_project(&self.hat, self.h, self.gamma)?;
        Ok(round)
    }

    pub fn reset(&mut self) {
        *self = EpigraphLearner::new(self.config.clone()).expect("config was validated at construction");
    }
}
