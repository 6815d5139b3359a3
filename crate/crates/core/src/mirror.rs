//! Centered mirror descent with a composite Huber regularizer (the known-G base learner).
//!
//! The mirror map is `psi_t(w) = 3 int_0^||w|| Psi'_t(x) dx` with
//!
//! ```text
//! Psi'_t(x) = min_{eta <= 1/h_t} [ F_t(x) / eta + eta V_t ],   F_t(x) = ln(1 + x / a_t)
//! ```
//!
//! Each round the dual vector `theta = grad psi_t(w_t) - g_t` is mapped back
//! through `L(x) = 3 Psi'_{t+1}(x) + R_{t+1}(x) = ||theta||`, and the new iterate
//! points along `theta` with norm `x`.
//!
//! `L` is solved in the variable `F` rather than `x`. The branch of `Psi'` is
//! then the comparison `F <= V / h^2`, the point `x* = a (e^{V/h^2} - 1)`
//! never has to be formed, and `x` is only exponentiated once at the end.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::learner::OnlineLearner;
use crate::numeric::ln_expm1;
use crate::regularizer::{InverseBound, RegularizerState};
use crate::vector::Vector;

const SOLVE_TOLERANCE: f64 = 1e-9;
const MAX_BISECTIONS: usize = 200;
/// Relative slack on the hint contract, to absorb rounding in callers' clipping.
const HINT_SLACK: f64 = 1e-9;

/// `Psi'(x)` in closed form.
pub fn psi_prime(x: f64, v: f64, h: f64, a: f64) -> f64 {
    psi_prime_of_f((x / a).ln_1p(), v, h)
}

/// `Psi'` as a function of `F = ln(1 + x / a)`.
pub fn psi_prime_of_f(f: f64, v: f64, h: f64) -> f64 {
    if f <= 0.0 {
        0.0
    } else if h * h * f <= v {
        2.0 * (v * f).sqrt()
    } else {
        h * f + v / h
    }
}

/// Smallest `F` with `Psi'(F) >= y`.
fn psi_prime_inverse_f(y: f64, v: f64, h: f64) -> f64 {
    if y <= 2.0 * v / h {
        y * y / (4.0 * v)
    } else {
        (y - v / h) / h
    }
}

/// `L(x) = 3 Psi'(x) + R(x)` for one round's potential.
#[derive(Debug, Clone, Copy)]
pub struct LinkFunction<'a> {
    pub v: f64,
    pub h: f64,
    pub a: f64,
    pub reg: &'a RegularizerState,
}

impl LinkFunction<'_> {
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        3.0 * psi_prime(x, self.v, self.h, self.a) + self.reg.radial_subgradient(x)
    }

    pub fn eval_f(&self, f: f64) -> f64 {
        if f <= 0.0 {
            return 0.0;
        }
        let ln_x = self.a.ln() + ln_expm1(f);
        3.0 * psi_prime_of_f(f, self.v, self.h) + self.reg.radial_subgradient_ln(ln_x)
    }

    /// `ln x*` where `x* = a (exp(V / h^2) - 1)` separates the two branches.
    pub fn ln_branch_point(&self) -> f64 {
        self.a.ln() + ln_expm1(self.v / (self.h * self.h))
    }

    /// `6 V / h + R(x*)`: targets at or below this value are solved on the square-root branch.
    pub fn branch_threshold(&self) -> f64 {
        6.0 * self.v / self.h + self.reg.radial_subgradient_ln(self.ln_branch_point())
    }

    /// `L` with the branch chosen by comparing `target` against [`Self::branch_threshold`].
    pub fn eval_by_target_rule(&self, x: f64, target: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let f = (x / self.a).ln_1p();
        let r = self.reg.radial_subgradient(x);
        if target <= self.branch_threshold() {
            6.0 * (self.v * f).sqrt() + r
        } else {
            3.0 * self.h * f + 3.0 * self.v / self.h + r
        }
    }

    /// Solve `L(x) = target` and return `F = ln(1 + x / a)`.
    pub fn solve_f(&self, target: f64) -> Result<f64> {
        let target = ensure_finite(target, "link target")?;
        if target <= 0.0 {
            return Ok(0.0);
        }
        // R jumps to c at 0+ when p = 1; below that the subdifferential at 0 absorbs the target
        if self.reg.radial_subgradient_ln(f64::MIN) >= target {
            return Ok(0.0);
        }
        let mut hi = psi_prime_inverse_f(target / 3.0, self.v, self.h);
        if let InverseBound::Finite(x) = self.reg.radial_subgradient_inverse(target) {
            hi = hi.min((x / self.a).ln_1p());
        }
        let mut lo = 0.0;
        let tol = SOLVE_TOLERANCE * target.max(1.0);
        let mut best = (hi, (self.eval_f(hi) - target).abs());
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let value = self.eval_f(mid);
            let residual = (value - target).abs();
            if residual < best.1 {
                best = (mid, residual);
            }
            if value == target {
                break;
            }
            if value < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if best.1 <= tol {
            Ok(best.0)
        } else {
            Err(Error::SolverDiverged {
                solver: "mirror link inverse",
                target,
                residual: best.1,
            })
        }
    }

    /// Solve `L(x) = target` for `x >= 0`.
    pub fn solve(&self, target: f64) -> Result<f64> {
        let f = self.solve_f(target)?;
        ensure_finite(self.a * f.exp_m1(), "mirror iterate norm")
    }
}

/// Parameters of one mirror-descent instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorDescentConfig {
    pub dim: usize,
    pub epsilon: f64,
    pub c: f64,
    pub p: f64,
    pub alpha: f64,
    /// `h_1`, the gradient bound for the first round.
    pub initial_hint: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorDescent {
    config: MirrorDescentConfig,
    theta: Vector,
    c_sum: f64,
    n_acc: f64,
    b: f64,
    v: f64,
    a_scale: f64,
    h: f64,
    reg: RegularizerState,
    w: Vector,
}

fn wealth_scale(epsilon: f64, b: f64) -> f64 {
    let l = b.ln().max(1.0);
    epsilon / (b.sqrt() * l * l)
}

impl MirrorDescent {
    pub fn new(config: MirrorDescentConfig) -> Result<Self> {
        if config.dim == 0 {
            return Err(Error::EmptyVector);
        }
        if !(config.epsilon > 0.0 && config.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                config.epsilon
            )));
        }
        if !(config.initial_hint > 0.0 && config.initial_hint.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "initial hint must be positive, got {}",
                config.initial_hint
            )));
        }
        let mut reg = RegularizerState::new(config.c, config.p, config.alpha)?;
        // w_1 = 0 enters S before the first solve
        reg.advance(0.0);
        let n_acc = 4.0;
        let b = 4.0 * n_acc;
        let h = config.initial_hint;
        Ok(MirrorDescent {
            theta: Vector::zeros(config.dim),
            c_sum: 0.0,
            n_acc,
            b,
            v: h * h,
            a_scale: wealth_scale(config.epsilon, b),
            h,
            reg,
            w: Vector::zeros(config.dim),
            config,
        })
    }

    pub fn config(&self) -> &MirrorDescentConfig {
        &self.config
    }

    pub fn theta(&self) -> &Vector {
        &self.theta
    }

    pub fn hint(&self) -> f64 {
        self.h
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n_acc(&self) -> f64 {
        self.n_acc
    }

    pub fn gradient_sq_sum(&self) -> f64 {
        self.c_sum
    }

    pub fn a_scale(&self) -> f64 {
        self.a_scale
    }

    pub fn regularizer(&self) -> &RegularizerState {
        &self.reg
    }

    /// The link function `L` for the current potential.
    pub fn link(&self) -> LinkFunction<'_> {
        LinkFunction {
            v: self.v,
            h: self.h,
            a: self.a_scale,
            reg: &self.reg,
        }
    }

    /// `grad psi_t(w)` for the current potential.
    pub fn mirror_gradient(&self, w: &Vector) -> Vector {
        let n = w.norm();
        if n == 0.0 {
            return Vector::zeros(w.dim());
        }
        w.scaled(3.0 * psi_prime(n, self.v, self.h, self.a_scale) / n)
    }

    /// `psi_t(w) = 3 int_0^||w|| Psi'(x) dx`, by adaptive Simpson in `x`.
    pub fn mirror_potential(&self, norm: f64) -> f64 {
        if norm <= 0.0 {
            return 0.0;
        }
        let f = |x: f64| 3.0 * psi_prime(x, self.v, self.h, self.a_scale);
        simpson(&f, 0.0, norm, 1e-12, 40)
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let whole = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
    simpson_step(f, a, b, f(a), f(m), f(b), whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

impl OnlineLearner for MirrorDescent {
    fn dim(&self) -> usize {
        self.config.dim
    }

    fn predict(&self) -> Vector {
        self.w.clone()
    }

    fn observe(&mut self, g: &Vector, h_next: f64) -> Result<()> {
        g.check_dim(self.config.dim)?;
        if !g.is_finite() {
            return Err(Error::NonFinite {
                context: "mirror descent gradient".into(),
            });
        }
        let h_next = ensure_finite(h_next, "mirror descent hint")?;
        let g_sq = g.norm_sq();
        let g_norm = g_sq.sqrt();
        if g_norm > self.h * (1.0 + HINT_SLACK) {
            return Err(Error::HintViolated {
                norm: g_norm,
                hint: self.h,
            });
        }
        if h_next < self.h * (1.0 - HINT_SLACK) {
            return Err(Error::HintDecreased {
                previous: self.h,
                next: h_next,
            });
        }
        let h_next = h_next.max(self.h);

        let theta = self.mirror_gradient(&self.w).sub(g);

        let n_old = self.n_acc;
        self.c_sum += g_sq;
        self.n_acc += g_sq / (self.h * self.h);
        self.b += 4.0 * n_old;
        self.v = h_next * h_next + self.c_sum;
        self.a_scale = wealth_scale(self.config.epsilon, self.b);
        self.h = h_next;

        let theta_norm = theta.norm();
        let x = self.link().solve(theta_norm)?;
        self.w = match theta.direction() {
            Some(dir) if x > 0.0 => dir.scaled(x),
            _ => Vector::zeros(self.config.dim),
        };
        self.theta = theta;
        self.reg.advance(self.w.norm());
        Ok(())
    }

    fn reset(&mut self) {
        *self = MirrorDescent::new(self.config.clone()).expect("config was validated at construction");
    }
}
