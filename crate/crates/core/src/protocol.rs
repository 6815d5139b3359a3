//! The general protocol: clip the observed gradient, feed a base learner, and
//! charge a composite regularizer `r_t` so that corruption-induced error is
//! cancelled by the correction it pays for.
//!
//! Two settings are supported. With a known Lipschitz bound `G` every
//! gradient is clipped at `G` and [`MirrorDescent`] is the base learner. With
//! `G` unknown, [`FilterState`] supplies the clipping threshold, [`TrackerState`]
//! watches the iterate scale, and [`EpigraphLearner`] adds the quadratic part
//! `a_t ||w||^2` of the regularizer. The unknown-G configuration has no field
//! for `G`.
//!
//! Every round updates a [`DecompositionLedger`] that splits true regret into
//! `error - correction + bias + composite`.

use serde::{Deserialize, Serialize};

use crate::epigraph::{EpigraphConfig, EpigraphLearner, QuadWeights};
use crate::error::{Error, Result};
use crate::filter::{FilterState, FilterStep};
use crate::learner::OnlineLearner;
use crate::ledger::{clip, RegretLedger};
use crate::mirror::{MirrorDescent, MirrorDescentConfig};
use crate::regularizer::RegularizerState;
use crate::tracker::TrackerState;
use crate::vector::Vector;

/// How the clipping threshold is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ProtocolMode {
    KnownG {
        lipschitz: f64,
    },
    UnknownG {
        tau_g: f64,
        tau_d: f64,
        gamma_alpha: f64,
        gamma_beta: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub dim: usize,
    pub horizon: usize,
    pub epsilon: f64,
    pub k: usize,
    /// Huber scale `c`, power `p` and offset `alpha` of `f_t`.
    pub c: f64,
    pub p: f64,
    pub alpha: f64,
    pub mode: ProtocolMode,
}

/// `max(ln T, 1)`.
pub fn default_power(horizon: usize) -> f64 {
    (horizon as f64).ln().max(1.0)
}

impl ProtocolConfig {
    /// `h_t = G`, `c = k G`, `alpha = eps / k`. With `k = 0` the Huber term is off.
    pub fn known_g(dim: usize, horizon: usize, epsilon: f64, k: usize, lipschitz: f64) -> Self {
        let (c, alpha) = if k == 0 {
            (0.0, epsilon)
        } else {
            (k as f64 * lipschitz, epsilon / k as f64)
        };
        ProtocolConfig {
            dim,
            horizon,
            epsilon,
            k,
            c,
            p: default_power(horizon),
            alpha,
            mode: ProtocolMode::KnownG { lipschitz },
        }
    }

    /// `c = k tau_G`, `gamma_beta = k`, `gamma_alpha = 1`, `tau_D = eps / k`.
    pub fn unknown_g_case1(dim: usize, horizon: usize, epsilon: f64, k: usize, tau_g: f64) -> Self {
        let kf = k as f64;
        let (c, tau_d) = if k == 0 {
            (0.0, epsilon)
        } else {
            (kf * tau_g, epsilon / kf)
        };
        Self::unknown_g(dim, horizon, epsilon, k, c, tau_g, tau_d, 1.0, kf)
    }

    /// `c = tau_G`, `gamma_beta = k^2`, `gamma_alpha = k + 1`, `tau_D = 1`.
    pub fn unknown_g_case2(dim: usize, horizon: usize, epsilon: f64, k: usize, tau_g: f64) -> Self {
        let kf = k as f64;
        Self::unknown_g(dim, horizon, epsilon, k, tau_g, tau_g, 1.0, kf + 1.0, kf * kf)
    }

    /// Unknown-G configuration with `alpha = eps tau_G / c` (or `eps` when `c = 0`).
    #[allow(clippy::too_many_arguments)]
    pub fn unknown_g(
        dim: usize,
        horizon: usize,
        epsilon: f64,
        k: usize,
        c: f64,
        tau_g: f64,
        tau_d: f64,
        gamma_alpha: f64,
        gamma_beta: f64,
    ) -> Self {
        let alpha = if c > 0.0 { epsilon * tau_g / c } else { epsilon };
        ProtocolConfig {
            dim,
            horizon,
            epsilon,
            k,
            c,
            p: default_power(horizon),
            alpha,
            mode: ProtocolMode::UnknownG {
                tau_g,
                tau_d,
                gamma_alpha,
                gamma_beta,
            },
        }
    }
}

/// Splits true regret `sum <g_t, w_t - u>` into four running sums.
///
/// `error = sum <g - g^c, w>`, `correction = sum r_t(w_t)`,
/// `bias = <sum (g - g^c), -u> + sum r_t(u)` and
/// `composite = sum <g^c, w - u> + r_t(w_t) - r_t(u)`, so that
/// `error - correction + bias + composite` is the regret.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecompositionLedger {
    pub error_term: f64,
    pub correction_term: f64,
    pub bias_term: f64,
    pub composite_term: f64,
}

impl DecompositionLedger {
    pub fn update(&mut self, w: &Vector, u: &Vector, g: &Vector, g_clipped: &Vector, r_w: f64, r_u: f64) {
        let residual = g.sub(g_clipped);
        self.error_term += residual.dot(w);
        self.correction_term += r_w;
        self.bias_term += -residual.dot(u) + r_u;
        self.composite_term += g_clipped.dot(&w.sub(u)) + r_w - r_u;
    }

    pub fn total(&self) -> f64 {
        self.error_term - self.correction_term + self.bias_term + self.composite_term
    }

    /// `|total - regret| / max(1, |regret|, |terms|)`.
    pub fn identity_gap(&self, regret: f64) -> f64 {
        let scale = [
            1.0,
            regret.abs(),
            self.error_term.abs(),
            self.correction_term.abs(),
            self.bias_term.abs(),
            self.composite_term.abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        (self.total() - regret).abs() / scale
    }
}

/// What happened in one protocol round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundReport {
    pub round: usize,
    /// The iterate played this round.
    pub w: Vector,
    pub clipped: Vector,
    pub h: f64,
    pub h_next: f64,
    /// TRACKER threshold in effect this round; `None` with known `G`.
    pub z: Option<f64>,
    pub alpha_t: f64,
    pub beta_t: f64,
    pub filter_doubled: bool,
    pub tracker_doubled: bool,
    pub r_w: f64,
    pub r_u: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
enum Base {
    KnownG {
        lipschitz: f64,
        learner: MirrorDescent,
    },
    UnknownG {
        learner: EpigraphLearner,
        filter: FilterState,
        tracker: TrackerState,
        weights: QuadWeights,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    config: ProtocolConfig,
    base: Base,
    /// `f_t` evaluated along the played iterates.
    ledger_reg: RegularizerState,
    w: Vector,
    round: usize,
    regret: RegretLedger,
    decomposition: DecompositionLedger,
}

impl Protocol {
    pub fn new(config: ProtocolConfig) -> Result<Self> {
        Self::with_comparator(config.clone(), Vector::zeros(config.dim.max(1)))
    }

    /// A protocol whose ledgers measure regret against `comparator`.
    pub fn with_comparator(config: ProtocolConfig, comparator: Vector) -> Result<Self> {
        if config.dim == 0 {
            return Err(Error::EmptyVector);
        }
        comparator.check_dim(config.dim)?;
        let base = match config.mode {
            ProtocolMode::KnownG { lipschitz } => {
                if !(lipschitz > 0.0 && lipschitz.is_finite()) {
                    return Err(Error::InvalidParameter(format!("G must be positive, got {lipschitz}")));
                }
                Base::KnownG {
                    lipschitz,
                    learner: MirrorDescent::new(MirrorDescentConfig {
                        dim: config.dim,
                        epsilon: config.epsilon,
                        c: config.c,
                        p: config.p,
                        alpha: config.alpha,
                        initial_hint: lipschitz,
                    })?,
                }
            }
            ProtocolMode::UnknownG {
                tau_g,
                tau_d,
                gamma_alpha,
                gamma_beta,
            } => Base::UnknownG {
                learner: EpigraphLearner::new(EpigraphConfig {
                    dim: config.dim,
                    epsilon: config.epsilon,
                    c: config.c,
                    p: config.p,
                    alpha: config.alpha,
                    tau_g,
                    gamma_alpha,
                    gamma_beta,
                })?,
                filter: FilterState::new(config.k, tau_g)?,
                tracker: TrackerState::new(tau_d)?,
                weights: QuadWeights::new(gamma_alpha, gamma_beta)?,
            },
        };
        Ok(Protocol {
            ledger_reg: RegularizerState::new(config.c, config.p, config.alpha)?,
            w: Vector::zeros(config.dim),
            round: 0,
            regret: RegretLedger::new(comparator),
            decomposition: DecompositionLedger::default(),
            base,
            config,
        })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    /// The iterate to play next.
    pub fn predict(&self) -> Vector {
        self.w.clone()
    }

    pub fn rounds(&self) -> usize {
        self.round
    }

    pub fn regret(&self) -> &RegretLedger {
        &self.regret
    }

    pub fn decomposition(&self) -> &DecompositionLedger {
        &self.decomposition
    }

    pub fn comparator(&self) -> &Vector {
        &self.regret.comparator
    }

    pub fn filter(&self) -> Option<&FilterState> {
        match &self.base {
            Base::UnknownG { filter, .. } => Some(filter),
            Base::KnownG { .. } => None,
        }
    }

    pub fn tracker(&self) -> Option<&TrackerState> {
        match &self.base {
            Base::UnknownG { tracker, .. } => Some(tracker),
            Base::KnownG { .. } => None,
        }
    }

    pub fn epigraph(&self) -> Option<&EpigraphLearner> {
        match &self.base {
            Base::UnknownG { learner, .. } => Some(learner),
            Base::KnownG { .. } => None,
        }
    }

    /// Play one round. `g_tilde` is what the learner observes; `g_true`, when
    /// known to a simulator, is what the ledgers charge regret with.
    pub fn round(&mut self, g_tilde: &Vector, g_true: Option<&Vector>) -> Result<RoundReport> {
        let d = self.config.dim;
        g_tilde.check_dim(d)?;
        if !g_tilde.is_finite() {
            return Err(Error::NonFinite {
                context: format!("observed gradient at round {}", self.round + 1),
            });
        }
        let g = match g_true {
            Some(g) => {
                g.check_dim(d)?;
                g
            }
            None => g_tilde,
        };
        self.round += 1;
        let w = self.w.clone();
        let w_norm = w.norm();
        let u = self.regret.comparator.clone();
        self.ledger_reg.advance(w_norm);

        let mut report = RoundReport {
            round: self.round,
            w: w.clone(),
            clipped: Vector::zeros(d),
            h: 0.0,
            h_next: 0.0,
            z: None,
            alpha_t: 0.0,
            beta_t: 0.0,
            filter_doubled: false,
            tracker_doubled: false,
            r_w: 0.0,
            r_u: 0.0,
        };
        match &mut self.base {
            Base::KnownG { lipschitz, learner } => {
                let clipped = clip(g_tilde, *lipschitz);
                learner.observe(&clipped, *lipschitz)?;
                self.w = learner.predict();
                report.clipped = clipped;
                report.h = *lipschitz;
                report.h_next = *lipschitz;
            }
            Base::UnknownG {
                learner,
                filter,
                tracker,
                weights,
            } => {
                let FilterStep {
                    clipped,
                    h,
                    h_next,
                    doubled: filter_doubled,
                    ..
                } = filter.step(g_tilde);
                let tstep = tracker.step(w_norm);
                let (alpha_t, beta_t) = weights.compute(filter_doubled, tstep.doubled);
                learner.observe(&clipped, h_next, alpha_t, beta_t)?;
                self.w = learner.predict();
                report.clipped = clipped;
                report.h = h;
                report.h_next = h_next;
                report.z = Some(tstep.z);
                report.alpha_t = alpha_t;
                report.beta_t = beta_t;
                report.filter_doubled = filter_doubled;
                report.tracker_doubled = tstep.doubled;
            }
        }
        if !self.w.is_finite() {
            return Err(Error::NonFinite {
                context: format!("iterate after round {}", self.round),
            });
        }
        let a_t = report.alpha_t + report.beta_t;
        report.r_w = self.ledger_reg.evaluate(w_norm) + a_t * w.norm_sq();
        report.r_u = self.ledger_reg.evaluate(u.norm()) + a_t * u.norm_sq();
        self.decomposition
            .update(&w, &u, g, &report.clipped, report.r_w, report.r_u);
        self.regret.update(&w, g, g_tilde)?;
        Ok(report)
    }
}

/// Uniform average of the iterates.
pub fn online_to_batch(trace: &[Vector]) -> Result<Vector> {
    let first = trace.first().ok_or(Error::EmptyTrace)?;
    let mut sum = Vector::zeros(first.dim());
    for w in trace {
        w.check_dim(first.dim())?;
        sum.add_assign(w);
    }
    Ok(sum.scaled(1.0 / trace.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn presets() {
        let kg = ProtocolConfig::known_g(1, 1000, 1.0, 10, 2.0);
        assert_eq!((kg.c, kg.alpha), (20.0, 0.1));
        assert!((kg.p - 1000f64.ln()).abs() < 1e-15);
        let k0 = ProtocolConfig::known_g(1, 1000, 1.0, 0, 2.0);
        assert_eq!(k0.c, 0.0);

        let c1 = ProtocolConfig::unknown_g_case1(1, 100, 2.0, 4, 0.5);
        assert_eq!((c1.c, c1.alpha), (2.0, 0.5));
        assert_eq!(
            c1.mode,
            ProtocolMode::UnknownG {
                tau_g: 0.5,
                tau_d: 0.5,
                gamma_alpha: 1.0,
                gamma_beta: 4.0
            }
        );
        let c2 = ProtocolConfig::unknown_g_case2(1, 100, 2.0, 4, 0.5);
        assert_eq!((c2.c, c2.alpha), (0.5, 2.0));
        assert_eq!(
            c2.mode,
            ProtocolMode::UnknownG {
                tau_g: 0.5,
                tau_d: 1.0,
                gamma_alpha: 5.0,
                gamma_beta: 16.0
            }
        );
        assert_eq!(default_power(2), 1.0);
    }

    #[test]
    fn uncorrupted_known_g_without_budget_never_clips_or_charges() {
        let mut p = Protocol::new(ProtocolConfig::known_g(1, 50, 1.0, 0, 1.0)).unwrap();
        for t in 0..50 {
            let g = v(&[if t % 2 == 0 { 0.7 } else { -1.0 }]);
            let r = p.round(&g, None).unwrap();
            assert_eq!(r.clipped, g);
            assert_eq!(r.r_w, 0.0);
        }
        assert_eq!(p.decomposition().correction_term, 0.0);
    }

    #[test]
    fn corrupted_gradient_is_clipped_to_g() {
        let mut p = Protocol::new(ProtocolConfig::known_g(2, 10, 1.0, 1, 1.0)).unwrap();
        let r = p.round(&v(&[60.0, 80.0]), Some(&v(&[0.0, 1.0]))).unwrap();
        assert!((r.clipped.norm() - 1.0).abs() < 1e-15);
        assert!((r.clipped[0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn decomposition_identity_on_a_corrupted_run() {
        for unknown in [false, true] {
            let cfg = if unknown {
                ProtocolConfig::unknown_g_case1(1, 1000, 1.0, 5, 0.25)
            } else {
                ProtocolConfig::known_g(1, 1000, 1.0, 5, 1.0)
            };
            let mut p = Protocol::with_comparator(cfg, v(&[3.0])).unwrap();
            for t in 0..1000usize {
                let g = v(&[((t * 7919 % 13) as f64 / 6.0 - 1.0).clamp(-1.0, 1.0)]);
                let gt = if t % 197 == 5 { g.scaled(-40.0) } else { g.clone() };
                p.round(&gt, Some(&g)).unwrap();
                let gap = p.decomposition().identity_gap(p.regret().true_regret_linear);
                assert!(gap <= 1e-6, "round {t}: gap {gap}");
            }
        }
    }

    #[test]
    fn unknown_g_reports_thresholds() {
        let mut p = Protocol::new(ProtocolConfig::unknown_g_case2(1, 100, 1.0, 0, 0.5)).unwrap();
        let r = p.round(&v(&[2.0]), None).unwrap();
        assert_eq!((r.h, r.h_next), (0.5, 1.0));
        assert!(r.filter_doubled);
        assert_eq!(r.alpha_t, 1.0);
        assert_eq!(r.z, Some(1.0));
        assert!(p.filter().is_some() && p.tracker().is_some());
    }

    #[test]
    fn first_prediction_is_origin() {
        let p = Protocol::new(ProtocolConfig::unknown_g_case1(3, 10, 1.0, 2, 1.0)).unwrap();
        assert!(p.predict().is_zero());
        assert_eq!(p.predict(), p.predict());
    }

    #[test]
    fn online_to_batch_examples() {
        assert_eq!(online_to_batch(&[v(&[0.0]), v(&[1.0]), v(&[2.0])]).unwrap(), v(&[1.0]));
        assert_eq!(online_to_batch(&vec![v(&[4.5]); 7]).unwrap(), v(&[4.5]));
        let avg = online_to_batch(&[v(&[1.0, 0.0, 3.0]), v(&[3.0, 2.0, -3.0])]).unwrap();
        assert_eq!(avg, v(&[2.0, 1.0, 0.0]));
        assert_eq!(online_to_batch(&[]), Err(Error::EmptyTrace));
    }

    #[test]
    fn dimension_errors() {
        let mut p = Protocol::new(ProtocolConfig::known_g(2, 10, 1.0, 1, 1.0)).unwrap();
        assert!(matches!(
            p.round(&v(&[1.0]), None),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(Protocol::with_comparator(ProtocolConfig::known_g(2, 10, 1.0, 1, 1.0), v(&[1.0])).is_err());
    }
}
