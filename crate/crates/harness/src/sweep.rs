//! Parallel corruption sweeps over (algorithm, k, seed) cells.
//!
//! Every cell runs twice: once against the configured adversary with
//! corruption budget `k`, and once with the budget set to zero while the
//! learner stays tuned for `k`. Rows come back in grid order regardless of
//! scheduling.

use std::io::Write;

use rayon::prelude::*;
use robust_oco::Vector;

use crate::config::{Algorithm, ExperimentConfig, HorizonRule, SweepSettings};
use crate::error::{HarnessError, Result};
use crate::experiments::{known_g_scale, unknown_g_scale};
use crate::sim::run_seed;
use crate::trace::num;

pub const SWEEP_COLUMNS: [&str; 9] = [
    "algorithm",
    "k",
    "horizon",
    "seed",
    "regret_corrupted",
    "regret_clean",
    "ratio",
    "normalized",
    "wall_time_s",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub algorithm: Algorithm,
    pub k: usize,
    pub horizon: usize,
    pub seed: u64,
    pub regret_corrupted: f64,
    pub regret_clean: f64,
    /// Corrupted regret over the algorithm's rate for this `(T, k, ||u||)`.
    pub normalized: f64,
    pub wall_time_s: f64,
}

impl SweepRow {
    pub fn ratio(&self) -> f64 {
        self.regret_corrupted / self.regret_clean
    }
}

/// Config for a single cell: adversary horizon and budget set, learner tuned for `k`.
pub fn cell_config(base: &ExperimentConfig, rule: HorizonRule, algorithm: Algorithm, k: usize) -> ExperimentConfig {
    let mut cfg = base.clone();
    cfg.algorithm = algorithm;
    cfg.sweep = None;
    cfg.adversary.k = k;
    if rule == HorizonRule::Square {
        cfg.adversary.horizon = k * k;
    }
    cfg.protocol.k = Some(k);
    cfg
}

fn comparator_norm(cfg: &ExperimentConfig) -> Result<f64> {
    match &cfg.comparator {
        Some(u) => Ok(Vector::new(u.clone())?.norm()),
        None => Ok(cfg.adversary.build()?.comparator().map_or(0.0, |u| u.norm())),
    }
}

fn run_cell(base: &ExperimentConfig, rule: HorizonRule, algorithm: Algorithm, k: usize, seed: u64) -> Result<SweepRow> {
    let cfg = cell_config(base, rule, algorithm, k);
    let corrupted = run_seed(&cfg, seed, false)?;
    let mut clean_cfg = cfg.clone();
    clean_cfg.adversary.k = 0;
    let clean = run_seed(&clean_cfg, seed, false)?;

    let spec = &cfg.adversary;
    let u_norm = comparator_norm(&cfg)?;
    let eps = cfg.protocol.epsilon;
    let scale = match algorithm {
        Algorithm::UnknownGCase1 | Algorithm::UnknownGCase2 => {
            unknown_g_scale(eps, spec.lipschitz, u_norm, spec.horizon, k)
        }
        _ => known_g_scale(eps, spec.lipschitz, u_norm, spec.horizon, k),
    };
    let regret_corrupted = corrupted.true_regret();
    Ok(SweepRow {
        algorithm,
        k,
        horizon: spec.horizon,
        seed,
        regret_corrupted,
        regret_clean: clean.true_regret(),
        normalized: regret_corrupted / scale,
        wall_time_s: corrupted.wall_time_s + clean.wall_time_s,
    })
}

/// Run every cell of the grid in `config.sweep`.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let settings: &SweepSettings = config
        .sweep
        .as_ref()
        .ok_or_else(|| HarnessError::Config("sweep requires a [sweep] table".into()))?;
    if settings.ks.is_empty() || settings.algorithms.is_empty() || config.seeds.is_empty() {
        return Err(HarnessError::Config("sweep grid is empty".into()));
    }
    let cells: Vec<(Algorithm, usize, u64)> = settings
        .algorithms
        .iter()
        .flat_map(|&a| {
            settings
                .ks
                .iter()
                .flat_map(move |&k| config.seeds.iter().map(move |&s| (a, k, s)))
        })
        .collect();
    cells
        .par_iter()
        .map(|&(a, k, s)| run_cell(config, settings.horizon, a, k, s))
        .collect()
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(SWEEP_COLUMNS)?;
    for r in rows {
        wtr.write_record([
            r.algorithm.name().to_string(),
            r.k.to_string(),
            r.horizon.to_string(),
            r.seed.to_string(),
            num(r.regret_corrupted),
            num(r.regret_clean),
            num(r.ratio()),
            num(r.normalized),
            format!("{:.6}", r.wall_time_s),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use robust_oco::adversary::{AdversaryKind, AdversarySpec};

    #[test]
    fn cells_square_the_budget_and_tune_the_learner() {
        let base = ExperimentConfig::new(Algorithm::KnownG, AdversarySpec::new(AdversaryKind::IidRandom, 50, 0));
        let cfg = cell_config(&base, HorizonRule::Square, Algorithm::UnknownGCase2, 7);
        assert_eq!(
            (cfg.adversary.horizon, cfg.adversary.k, cfg.protocol.k),
            (49, 7, Some(7))
        );
        assert_eq!(cfg.algorithm, Algorithm::UnknownGCase2);
        let fixed = cell_config(&base, HorizonRule::Fixed, Algorithm::KnownG, 7);
        assert_eq!(fixed.adversary.horizon, 50);
    }
}
