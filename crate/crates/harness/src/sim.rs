//! The round loop shared by `run`, `sweep` and the checks.

use std::time::Instant;

use robust_oco::adversary::{GradientStream, KtBettor};
use robust_oco::ledger::{CorruptionLedger, RegretLedger};
use robust_oco::protocol::{DecompositionLedger, Protocol, ProtocolConfig};
use robust_oco::{OnlineLearner, Vector};

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{HarnessError, Result};

/// A learner the harness can drive.
pub enum Learner {
    Kt(KtBettor),
    Protocol(Box<Protocol>),
}

impl Learner {
    pub fn protocol(config: ProtocolConfig, comparator: Vector) -> Result<Self> {
        Ok(Learner::Protocol(Box::new(Protocol::with_comparator(
            config, comparator,
        )?)))
    }

    fn predict(&self) -> Vector {
        match self {
            Learner::Kt(kt) => kt.predict(),
            Learner::Protocol(p) => p.predict(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    pub w: Vector,
    pub g_norm: f64,
    pub g_tilde_norm: f64,
    pub g_clipped_norm: f64,
    pub h: Option<f64>,
    pub z: Option<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub corrupted: bool,
    pub true_regret: f64,
    pub observed_regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub rounds: usize,
    pub regret: RegretLedger,
    pub corruption: CorruptionLedger,
    /// Present for protocol learners.
    pub decomposition: Option<DecompositionLedger>,
    pub max_w_norm: f64,
    pub wall_time_s: f64,
    pub records: Vec<TraceRecord>,
}

impl Outcome {
    pub fn true_regret(&self) -> f64 {
        self.regret.true_regret_linear
    }
}

/// Drive `learner` against `stream` for the stream's horizon.
pub fn simulate(
    learner: &mut Learner,
    stream: &mut dyn GradientStream,
    comparator: &Vector,
    keep_records: bool,
) -> Result<Outcome> {
    let start = Instant::now();
    let mut regret = RegretLedger::new(comparator.clone());
    let mut corruption = CorruptionLedger::new(stream.lipschitz())?;
    let mut records = Vec::with_capacity(if keep_records { stream.horizon() } else { 0 });
    let mut max_w_norm = 0.0_f64;
    for t in 1..=stream.horizon() {
        let at = |source| HarnessError::Round { round: t, source };
        let w = learner.predict();
        max_w_norm = max_w_norm.max(w.norm());
        let fb = stream.next(t, &w).map_err(at)?;
        let (clipped_norm, h, z, alpha, beta) = match learner {
            Learner::Kt(kt) => {
                kt.observe(&fb.g_observed, 1.0).map_err(at)?;
                (fb.g_observed.norm(), None, None, 0.0, 0.0)
            }
            Learner::Protocol(p) => {
                let r = p.round(&fb.g_observed, Some(&fb.g_true)).map_err(at)?;
                (r.clipped.norm(), Some(r.h), r.z, r.alpha_t, r.beta_t)
            }
        };
        regret.update(&w, &fb.g_true, &fb.g_observed).map_err(at)?;
        if let (Some(lw), Some(lu)) = (stream.loss(t, &w), stream.loss(t, comparator)) {
            regret.record_loss(lw, lu);
        }
        corruption.update(&fb.g_true, &fb.g_observed).map_err(at)?;
        if keep_records {
            records.push(TraceRecord {
                t,
                w,
                g_norm: fb.g_true.norm(),
                g_tilde_norm: fb.g_observed.norm(),
                g_clipped_norm: clipped_norm,
                h,
                z,
                alpha,
                beta,
                corrupted: fb.is_corrupted(),
                true_regret: regret.true_regret_linear,
                observed_regret: regret.observed_regret_linear,
            });
        }
    }
    let decomposition = match learner {
        Learner::Protocol(p) => Some(p.decomposition().clone()),
        Learner::Kt(_) => None,
    };
    Ok(Outcome {
        rounds: stream.horizon(),
        regret,
        corruption,
        decomposition,
        max_w_norm,
        wall_time_s: start.elapsed().as_secs_f64(),
        records,
    })
}

/// Build the stream and learner described by `config` for one seed and run them.
pub fn run_seed(config: &ExperimentConfig, seed: u64, keep_records: bool) -> Result<Outcome> {
    let mut spec = config.adversary.clone();
    spec.seed = seed;
    let mut stream = spec.build()?;
    let comparator = match &config.comparator {
        Some(u) => Vector::new(u.clone())?,
        None => stream.comparator().unwrap_or_else(|| Vector::zeros(spec.dim)),
    };
    let mut learner = match config.algorithm {
        Algorithm::KtBettor => {
            if spec.dim != 1 {
                return Err(HarnessError::Config("kt_bettor is one-dimensional".into()));
            }
            Learner::Kt(KtBettor::new(config.protocol.epsilon)?)
        }
        alg => Learner::protocol(config.protocol.resolve(alg, &spec)?, comparator.clone())?,
    };
    simulate(&mut learner, stream.as_mut(), &comparator, keep_records)
}
