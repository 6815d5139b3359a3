//! The Huber-family composite regularizer `f_t(w; c, p, alpha)`.
//!
//! `f_t` depends on the history of iterate norms through
//! `S_t = sum_{i<=t} ||w_i||^p + alpha^p` and on the most recent norm
//! `||w_t||`, which is the knot between its power and linear branches:
//!
//! ```text
//! f_t(w) = c * sigma_t(w) / S_t^(1 - 1/p)
//! sigma_t(w) = ||w||^p                                   if ||w|| <= ||w_t||
//!            = (p ||w|| - (p - 1) ||w_t||) ||w_t||^(p-1)  otherwise
//! ```
//!
//! Two views are exposed. [`RegularizerState::evaluate`] is `f_t` for the
//! round whose iterate was last passed to [`RegularizerState::advance`], so
//! `S_t` already contains `||w_t||^p`. [`RegularizerState::radial_subgradient`]
//! is the gradient magnitude of `f_{t+1}` at a *candidate* next iterate of norm
//! `x`, whose denominator is `S_t + x^p`; mirror descent solves against it
//! before the next iterate exists.
//!
//! With `p = ln T` the powers overflow quickly, so `S` is kept in raw and
//! log form and all formulas go through logarithms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log_add_exp, pow_guarded, softplus};

/// Exponent at which the log-domain sum is preferred over the raw one.
const LOG_FORM_POWER: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizerState {
    c: f64,
    p: f64,
    alpha: f64,
    s_raw: f64,
    log_s: f64,
    last_norm: f64,
    t: usize,
}

/// Result of inverting the radial subgradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InverseBound {
    Finite(f64),
    /// The requested value is at or above the asymptote `c p`.
    Unbounded,
}

impl RegularizerState {
    pub fn new(c: f64, p: f64, alpha: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale c must be >= 0, got {c}")));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("power p must be >= 1, got {p}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "offset alpha must be > 0, got {alpha}"
            )));
        }
        let log_s = p * alpha.ln();
        Ok(RegularizerState {
            c,
            p,
            alpha,
            s_raw: log_s.exp(),
            log_s,
            last_norm: 0.0,
            t: 0,
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn round(&self) -> usize {
        self.t
    }

    pub fn last_iterate_norm(&self) -> f64 {
        self.last_norm
    }

    /// `S_t` in raw form; may be `inf` once the powers overflow.
    pub fn s(&self) -> f64 {
        self.s_raw
    }

    pub fn ln_s(&self) -> f64 {
        if self.p < LOG_FORM_POWER && self.s_raw.is_finite() && self.s_raw > 0.0 {
            self.s_raw.ln()
        } else {
            self.log_s
        }
    }

    /// Register the norm of the next iterate.
    pub fn advance(&mut self, norm: f64) {
        debug_assert!(norm >= 0.0 && norm.is_finite());
        if norm > 0.0 {
            self.s_raw += pow_guarded(norm, self.p);
            self.log_s = log_add_exp(self.log_s, self.p * norm.ln());
        }
        self.last_norm = norm;
        self.t += 1;
    }

    fn inv_scale_ln(&self) -> f64 {
        // ln of 1 / S^(1 - 1/p)
        -(1.0 - 1.0 / self.p) * self.ln_s()
    }

    /// `f_t(w)` for a point of norm `norm`.
    pub fn evaluate(&self, norm: f64) -> f64 {
        if self.c == 0.0 || norm == 0.0 {
            return 0.0;
        }
        let m = self.last_norm;
        if self.p == 1.0 {
            return self.c * norm;
        }
        if norm <= m {
            self.c * (self.p * norm.ln() + self.inv_scale_ln()).exp()
        } else if m == 0.0 {
            0.0
        } else {
            let linear = self.p * norm - (self.p - 1.0) * m;
            self.c * linear * ((self.p - 1.0) * m.ln() + self.inv_scale_ln()).exp()
        }
    }

    /// Slope of the linear branch, which bounds the Lipschitz constant of `f_t`.
    pub fn lipschitz_bound(&self) -> f64 {
        if self.c == 0.0 {
            return 0.0;
        }
        if self.p == 1.0 {
            return self.c;
        }
        if self.last_norm == 0.0 {
            return 0.0;
        }
        self.c * self.p * ((self.p - 1.0) * self.last_norm.ln() + self.inv_scale_ln()).exp()
    }

    /// `R_{t+1}(x) = c p x^(p-1) / (S_t + x^p)^(1 - 1/p)`.
    pub fn radial_subgradient(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.radial_subgradient_ln(x.ln())
    }

    /// [`Self::radial_subgradient`] at `x = exp(ln_x)`; valid for iterates beyond `f64` range.
    pub fn radial_subgradient_ln(&self, ln_x: f64) -> f64 {
        if self.c == 0.0 || ln_x == f64::NEG_INFINITY {
            return 0.0;
        }
        if self.p == 1.0 {
            return self.c;
        }
        let p = self.p;
        // (x^p / (S + x^p))^((p-1)/p)
        let ln_ratio = p * ln_x - log_add_exp(self.ln_s(), p * ln_x);
        self.c * p * ((1.0 - 1.0 / p) * ln_ratio).exp()
    }

    /// Inverse of [`Self::radial_subgradient`] on `[0, c p)`.
    pub fn radial_subgradient_inverse(&self, y: f64) -> InverseBound {
        debug_assert!(y >= 0.0);
        if self.c == 0.0 {
            return InverseBound::Unbounded;
        }
        if y <= 0.0 {
            return InverseBound::Finite(0.0);
        }
        let cp = self.c * self.p;
        if y >= cp {
            return InverseBound::Unbounded;
        }
        if self.p == 1.0 {
            return InverseBound::Finite(0.0);
        }
        let p = self.p;
        // q = (y / cp)^(p/(p-1)) = x^p / (S + x^p)
        let ln_q = p / (p - 1.0) * (y / cp).ln();
        let q = ln_q.exp();
        let ln_x = (self.ln_s() + ln_q - (-q).ln_1p()) / p;
        InverseBound::Finite(ln_x.exp())
    }
}

/// Outcome of checking the two regularizer-sum inequalities on a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SumBoundCheck {
    pub sum_at_iterates: f64,
    pub sum_at_comparator: f64,
    /// `c (max_t ||w_t|| - alpha)`
    pub lower_bound: f64,
    /// `3 c ln T ||u|| [ln(1 + (||u||/alpha)^p) + 2]`
    pub upper_bound: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

/// Sum `f_t(w_t)` and `f_t(u)` over a trace of iterate norms with `p = ln T`
/// and compare against the closed-form lower and upper bounds.
pub fn check_sum_bounds(norms: &[f64], comparator_norm: f64, c: f64, alpha: f64) -> Result<SumBoundCheck> {
    let horizon = norms.len();
    if horizon < 3 {
        return Err(Error::InvalidParameter(format!(
            "sum bounds need T >= 3, got {horizon}"
        )));
    }
    let p = (horizon as f64).ln();
    let mut state = RegularizerState::new(c, p, alpha)?;
    let mut sum_w = 0.0;
    let mut sum_u = 0.0;
    let mut max_norm = 0.0_f64;
    for &n in norms {
        if !(n >= 0.0 && n.is_finite()) {
            return Err(Error::NonFinite {
                context: "iterate norm trace".into(),
            });
        }
        state.advance(n);
        sum_w += state.evaluate(n);
        sum_u += state.evaluate(comparator_norm);
        max_norm = max_norm.max(n);
    }
    let lower_bound = c * (max_norm - alpha);
    let ln_term = if comparator_norm == 0.0 {
        0.0
    } else {
        softplus(p * (comparator_norm / alpha).ln())
    };
    let upper_bound = 3.0 * c * p * comparator_norm * (ln_term + 2.0);
    Ok(SumBoundCheck {
        sum_at_iterates: sum_w,
        sum_at_comparator: sum_u,
        lower_bound,
        upper_bound,
        lower_ok: sum_w >= lower_bound,
        upper_ok: sum_u <= upper_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Straight transcription of the definition, used as an oracle.
    fn direct_f(c: f64, p: f64, alpha: f64, norms: &[f64], x: f64) -> f64 {
        let s: f64 = norms.iter().map(|n| n.powf(p)).sum::<f64>() + alpha.powf(p);
        let m = *norms.last().unwrap();
        let sigma = if x <= m {
            x.powf(p)
        } else {
            (p * x - (p - 1.0) * m) * m.powf(p - 1.0)
        };
        c * sigma / s.powf(1.0 - 1.0 / p)
    }

    #[test]
    fn evaluate_at_origin_is_zero() {
        let mut s = RegularizerState::new(3.0, 4.0, 0.5).unwrap();
        s.advance(1.2);
        assert_eq!(s.evaluate(0.0), 0.0);
    }

    #[test]
    fn evaluate_with_unit_power_is_linear() {
        let mut s = RegularizerState::new(2.0, 1.0, 0.3).unwrap();
        for n in [0.5, 4.0, 1.0] {
            s.advance(n);
        }
        for x in [0.1, 1.0, 7.5] {
            assert!((s.evaluate(x) - 2.0 * x).abs() < 1e-12);
            assert!((direct_f(2.0, 1.0, 0.3, &[0.5, 4.0, 1.0], x) - 2.0 * x).abs() < 1e-12);
        }
    }

    #[test]
    fn evaluate_matches_direct_formula_on_both_branches() {
        let norms = [0.4, 1.3, 0.9];
        let mut s = RegularizerState::new(1.5, 2.7, 0.2).unwrap();
        for n in norms {
            s.advance(n);
        }
        for x in [0.05, 0.5, 0.9, 1.0, 3.0, 40.0] {
            let expected = direct_f(1.5, 2.7, 0.2, &norms, x);
            assert!((s.evaluate(x) - expected).abs() <= 1e-12 * expected.max(1.0), "x={x}");
        }
    }

    #[test]
    fn evaluate_is_continuous_at_the_knot() {
        let mut s = RegularizerState::new(1.0, 3.0, 0.5).unwrap();
        s.advance(2.0);
        let m = 2.0_f64;
        let lower = m.powf(3.0) / s.s().powf(2.0 / 3.0);
        let upper = (3.0 * m - 2.0 * m) * m.powf(2.0) / s.s().powf(2.0 / 3.0);
        assert!((lower - upper).abs() < 1e-12);
        assert!((s.evaluate(m) - lower).abs() < 1e-12);
        assert!((s.evaluate(m * (1.0 + 1e-12)) - lower).abs() < 1e-9);
    }

    #[test]
    fn advance_examples() {
        let mut s = RegularizerState::new(1.0, 2.0, 1.0).unwrap();
        s.advance(0.0);
        assert_eq!(s.s(), 1.0);
        s.advance(2.0);
        s.advance(3.0);
        assert!((s.s() - 14.0).abs() < 1e-12);
        assert!((s.ln_s() - 14.0_f64.ln()).abs() < 1e-12);
        let before = s.s();
        s.advance(0.0);
        assert_eq!(s.s(), before);
        assert_eq!(s.last_iterate_norm(), 0.0);
        assert_eq!(s.round(), 4);
    }

    #[test]
    fn log_form_survives_overflow() {
        let mut s = RegularizerState::new(1.0, 30.0, 1.0).unwrap();
        s.advance(1e20);
        assert!(s.s().is_infinite());
        assert!((s.ln_s() - 30.0 * 1e20_f64.ln()).abs() < 1e-9);
        // f_t(w_t) = c ||w_t||^p / S^(1-1/p) ~ ||w_t|| when the last term dominates
        assert!((s.evaluate(1e20) / 1e20 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn radial_subgradient_examples() {
        let s = RegularizerState::new(1.0, 2.0, 1.0).unwrap();
        assert_eq!(s.radial_subgradient(0.0), 0.0);
        assert!((s.radial_subgradient(1.0) - 2.0_f64.sqrt()).abs() < 1e-14);

        let s = RegularizerState::new(0.7, 1.0, 1.0).unwrap();
        for x in [1e-6, 1.0, 1e6] {
            assert_eq!(s.radial_subgradient(x), 0.7);
        }
    }

    #[test]
    fn radial_subgradient_is_monotone_and_capped() {
        let mut s = RegularizerState::new(2.0, 4.6, 0.1).unwrap();
        s.advance(0.3);
        let mut prev = 0.0;
        for i in 0..400 {
            let x = 1e-4 * 1.05_f64.powi(i);
            let r = s.radial_subgradient(x);
            assert!(r >= prev);
            assert!(r <= 2.0 * 4.6 + 1e-12);
            prev = r;
        }
    }

    #[test]
    fn radial_subgradient_matches_finite_difference_of_evaluate() {
        // After advancing to x, f_{t+1} on [0, x] is the power branch c y^p / S_{t+1}^(1-1/p),
        // whose slope at y is R_{t+1}(x) (y/x)^(p-1).
        let mut base = RegularizerState::new(1.3, 3.5, 0.4).unwrap();
        base.advance(0.8);
        for x in [0.2, 0.9, 2.5] {
            let predicted = base.radial_subgradient(x);
            let mut next = base.clone();
            next.advance(x);
            let y = 0.9 * x;
            let h = 1e-5 * x;
            let fd = (next.evaluate(y + h) - next.evaluate(y - h)) / (2.0 * h);
            let expected = predicted * (y / x).powf(2.5);
            assert!(
                (fd - expected).abs() <= 1e-6 * expected,
                "x={x} fd={fd} expected={expected}"
            );
        }
    }

    #[test]
    fn inverse_examples() {
        let s = RegularizerState::new(1.0, 2.0, 1.0).unwrap();
        assert_eq!(s.radial_subgradient_inverse(0.0), InverseBound::Finite(0.0));
        assert_eq!(s.radial_subgradient_inverse(2.0), InverseBound::Unbounded);
        assert_eq!(s.radial_subgradient_inverse(5.0), InverseBound::Unbounded);
        match s.radial_subgradient_inverse(2.0_f64.sqrt()) {
            InverseBound::Finite(x) => assert!((x - 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let zero_scale = RegularizerState::new(0.0, 2.0, 1.0).unwrap();
        assert_eq!(zero_scale.radial_subgradient_inverse(0.3), InverseBound::Unbounded);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(RegularizerState::new(-1.0, 2.0, 1.0).is_err());
        assert!(RegularizerState::new(1.0, 0.5, 1.0).is_err());
        assert!(RegularizerState::new(1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn sum_bounds_trivial_cases() {
        let zeros = vec![0.0; 10];
        let r = check_sum_bounds(&zeros, 0.0, 1.0, 0.1).unwrap();
        assert_eq!(r.sum_at_iterates, 0.0);
        assert!(r.lower_ok && r.upper_ok);
        assert_eq!(r.sum_at_comparator, 0.0);
        assert!(check_sum_bounds(&[1.0, 2.0], 1.0, 1.0, 0.1).is_err());
    }
}
