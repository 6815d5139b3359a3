//! The pinned experiments: sign-flip fragility, the corruption-scaling sweep,
//! origin safety, and the lower-bound floor.

use std::time::Instant;

use rayon::prelude::*;
use robust_oco::adversary::{AdversaryKind, AdversarySpec, MAX_ORIGIN_HORIZON};

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::Result;
use crate::sim::run_seed;

pub const SWEEP_KS: [usize; 6] = [20, 30, 40, 50, 60, 70];

/// `(1 + ln(1 + ||u|| T / eps))^2`
pub fn polylog(u_norm: f64, horizon: usize, epsilon: f64) -> f64 {
    (1.0 + (u_norm * horizon as f64 / epsilon).ln_1p()).powi(2)
}

/// Known-G rate `(eps G + ||u|| G (sqrt T + k)) polylog`.
pub fn known_g_scale(epsilon: f64, g: f64, u_norm: f64, horizon: usize, k: usize) -> f64 {
    let t = horizon as f64;
    (epsilon * g + u_norm * g * (t.sqrt() + k as f64)) * polylog(u_norm, horizon, epsilon)
}

/// Unknown-G rate, which adds `(k + 1)(||u||^2 + G^2)`.
pub fn unknown_g_scale(epsilon: f64, g: f64, u_norm: f64, horizon: usize, k: usize) -> f64 {
    let t = horizon as f64;
    let kf = k as f64;
    (epsilon * g + u_norm * g * (t.sqrt() + kf) + (kf + 1.0) * (u_norm * u_norm + g * g))
        * polylog(u_norm, horizon, epsilon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioPair {
    pub corrupted: f64,
    pub clean: f64,
}

impl RatioPair {
    pub fn ratio(&self) -> f64 {
        self.corrupted / self.clean
    }
}

/// One algorithm against the sign-flip window and against the same adaptive
/// loss without corruption, tuned for the same `k` in both runs.
pub fn sign_flip_pair(
    algorithm: Algorithm,
    horizon: usize,
    k: usize,
    window_start: Option<usize>,
    epsilon: f64,
) -> Result<RatioPair> {
    let run = |adv_k: usize| -> Result<f64> {
        let mut spec = AdversarySpec::new(AdversaryKind::SignFlipWindow, horizon, adv_k);
        spec.window_start = window_start;
        let mut cfg = ExperimentConfig::new(algorithm, spec);
        cfg.protocol.epsilon = epsilon;
        cfg.protocol.k = Some(k);
        Ok(run_seed(&cfg, 0, false)?.true_regret())
    };
    Ok(RatioPair {
        corrupted: run(k)?,
        clean: run(0)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragilityResult {
    pub kt: RatioPair,
    pub protocol: RatioPair,
    pub elapsed_s: f64,
}

/// KT bettor and known-G protocol on `|w - 1|`, `T = 400`, flips during `[300, 319]`.
pub fn sign_flip_fragility() -> Result<FragilityResult> {
    let start = Instant::now();
    let kt = sign_flip_pair(Algorithm::KtBettor, 400, 20, Some(300), 1.0)?;
    let protocol = sign_flip_pair(Algorithm::KnownG, 400, 20, Some(300), 1.0)?;
    Ok(FragilityResult {
        kt,
        protocol,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub k: usize,
    pub horizon: usize,
    pub regret: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingResult {
    pub points: Vec<SweepPoint>,
    pub elapsed_s: f64,
}

impl ScalingResult {
    /// `max / min` of the normalized regrets.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.normalized), hi.max(p.normalized))
            });
        hi / lo
    }
}

/// Sign-flip sweep with `T = k^2`, comparator `u = 1`, regret divided by the algorithm's rate.
pub fn corruption_scaling(algorithm: Algorithm, ks: &[usize]) -> Result<ScalingResult> {
    let start = Instant::now();
    let points = ks
        .par_iter()
        .map(|&k| {
            let horizon = k * k;
            let spec = AdversarySpec::new(AdversaryKind::SignFlipWindow, horizon, k);
            let cfg = ExperimentConfig::new(algorithm, spec);
            let regret = run_seed(&cfg, 0, false)?.true_regret();
            let scale = match algorithm {
                Algorithm::UnknownGCase1 | Algorithm::UnknownGCase2 => unknown_g_scale(1.0, 1.0, 1.0, horizon, k),
                _ => known_g_scale(1.0, 1.0, 1.0, horizon, k),
            };
            Ok(SweepPoint {
                k,
                horizon,
                regret,
                normalized: regret / scale,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingResult {
        points,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OriginPoint {
    pub kind: AdversaryKind,
    pub k: usize,
    pub horizon: usize,
    pub regret: f64,
    pub bound: f64,
}

impl OriginPoint {
    pub fn passed(&self) -> bool {
        self.regret <= self.bound
    }
}

/// Known-G protocol (`eps = G = 1`) against every adversary with `u = 0`.
///
/// The origin lower-bound construction is limited to `T <= 30`, so it runs at
/// that horizon with `k` capped at `T`; the bound is evaluated at the horizon
/// actually run.
pub fn origin_safety(horizon: usize, ks: &[usize]) -> Result<Vec<OriginPoint>> {
    let cells: Vec<(AdversaryKind, usize)> = AdversaryKind::ALL
        .iter()
        .flat_map(|&kind| ks.iter().map(move |&k| (kind, k)))
        .collect();
    cells
        .par_iter()
        .map(|&(kind, k)| {
            let (t, k) = if kind == AdversaryKind::LbOrigin {
                let t = horizon.min(MAX_ORIGIN_HORIZON);
                (t, k.min(t))
            } else {
                (horizon, k)
            };
            let spec = AdversarySpec::new(kind, t, k).with_seed(k as u64);
            let mut cfg = ExperimentConfig::new(Algorithm::KnownG, spec);
            cfg.comparator = Some(vec![0.0]);
            let regret = run_seed(&cfg, k as u64, false)?.true_regret();
            Ok(OriginPoint {
                kind,
                k,
                horizon: t,
                regret,
                bound: 20.0 * (1.0 + (t as f64).ln()).powi(2),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloorResult {
    pub mean: f64,
    pub standard_error: f64,
    pub floor: f64,
    pub seeds: usize,
    pub elapsed_s: f64,
}

impl FloorResult {
    pub fn passed(&self) -> bool {
        self.mean >= self.floor - 3.0 * self.standard_error
    }
}

/// Seed-averaged regret of the known-G protocol against `u*` of the lower-bound sequence.
pub fn lower_bound_floor(horizon: usize, k: usize, magnitude: f64, seeds: usize) -> Result<FloorResult> {
    let start = Instant::now();
    let regrets = (0..seeds as u64)
        .into_par_iter()
        .map(|seed| {
            let mut spec = AdversarySpec::new(AdversaryKind::LbTheorem2, horizon, k).with_seed(seed);
            spec.magnitude = magnitude;
            let cfg = ExperimentConfig::new(Algorithm::KnownG, spec);
            Ok(run_seed(&cfg, seed, false)?.true_regret())
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = regrets.len() as f64;
    let mean = regrets.iter().sum::<f64>() / n;
    let var = regrets.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(FloorResult {
        mean,
        standard_error: (var / n).sqrt(),
        floor: magnitude * (k as f64 + ((horizon - k) as f64 / 16.0).sqrt()),
        seeds,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}
