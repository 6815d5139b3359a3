//! Named verification suites behind `robust-oco verify --check <name>`.
//!
//! Each check draws its random instances from a fixed seed and reports one
//! verdict per property.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use robust_oco::adversary::{random_seq_expectation, seeded_rng, AdversaryKind, AdversarySpec};
use robust_oco::epigraph::{correction_direction, projection_residual, weighted_project, EpigraphPoint};
use robust_oco::filter::{check_filter_lemma, FilterState};
use robust_oco::mirror::{MirrorDescent, MirrorDescentConfig};
use robust_oco::regularizer::check_sum_bounds;
use robust_oco::tracker::{check_tracker_lemma, TrackerRecord, TrackerState};
use robust_oco::{OnlineLearner, Vector};

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::experiments::{lower_bound_floor, origin_safety};
use crate::sim::run_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub property: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: &'static str,
    pub verdicts: Vec<Verdict>,
}

impl CheckReport {
    fn new(name: &'static str) -> Self {
        CheckReport {
            name,
            verdicts: Vec::new(),
        }
    }

    fn push(&mut self, property: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict {
            property: property.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.verdicts {
            let mark = if v.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{mark} {}::{}  {}", self.name, v.property, v.detail)?;
        }
        Ok(())
    }
}

pub const CHECKS: [&str; 9] = [
    "filter_lemma",
    "tracker_lemma",
    "regularizer_sums",
    "md_inversion",
    "epigraph_feasibility",
    "random_seq",
    "lb_theorem2_floor",
    "origin_safety",
    "decomposition_identity",
];

/// Run a check by name at its default size.
pub fn run_check(name: &str) -> Result<CheckReport> {
    match name {
        "filter_lemma" => Ok(filter_lemma(1000, 0)),
        "tracker_lemma" => Ok(tracker_lemma(1000, 0)),
        "regularizer_sums" => regularizer_sums(1000, 0),
        "md_inversion" => md_inversion(1000, 0),
        "epigraph_feasibility" => epigraph_feasibility(1000, 0),
        "random_seq" => random_seq(),
        "lb_theorem2_floor" => lb_theorem2_floor(2000),
        "origin_safety" => origin_safety_check(),
        "decomposition_identity" => decomposition_identity(50, 0),
        _ => Err(HarnessError::UnknownCheck {
            name: name.to_string(),
            valid: CHECKS.join(", "),
        }),
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize, norm: f64) -> Vector {
    let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let v = Vector::new(v).expect("finite draw");
    match v.direction() {
        Some(d) => d.scaled(norm),
        None => Vector::basis(dim, norm),
    }
}

/// FILTER on random streams with at most `k` rounds of large corruption.
pub fn filter_lemma(streams: usize, seed: u64) -> CheckReport {
    let mut report = CheckReport::new("filter_lemma");
    let mut rng = seeded_rng(seed, 10);
    let mut failures = Vec::new();
    for i in 0..streams {
        let horizon = rng.random_range(1..=400usize);
        let k = rng.random_range(0..=10usize).min(horizon);
        let dim = rng.random_range(1..=3usize);
        let g_max = log_uniform(&mut rng, 0.1, 10.0);
        let tau = g_max * log_uniform(&mut rng, 1e-3, 10.0);
        let mut big = vec![false; horizon];
        for idx in rand::seq::index::sample(&mut rng, horizon, k) {
            big[idx] = true;
        }
        let mut filter = FilterState::new(k, tau).expect("positive tau");
        let mut records = Vec::with_capacity(horizon);
        for &is_big in &big {
            let g_norm = g_max * rng.random::<f64>();
            let g = random_vector(&mut rng, dim, g_norm);
            let big_norm = g_max * log_uniform(&mut rng, 1.0, 1e3);
            let small_norm = 0.999 * g_max * rng.random::<f64>();
            let observed = if is_big {
                random_vector(&mut rng, dim, big_norm)
            } else if rng.random::<f64>() < 0.3 {
                // small deviation, strictly below G
                g.add(&random_vector(&mut rng, dim, small_norm))
            } else {
                g.clone()
            };
            let step = filter.step(&observed);
            records.push(step.record(observed.norm()));
        }
        if let Err(e) = check_filter_lemma(&records, k, tau, g_max) {
            failures.push(format!("stream {i}: {e}"));
        }
    }
    report.push(
        "all_properties",
        failures.is_empty(),
        format!(
            "{} of {streams} streams violated a property {:?}",
            failures.len(),
            failures.first()
        ),
    );
    report
}

/// TRACKER on random iterate-norm sequences of several shapes.
pub fn tracker_lemma(streams: usize, seed: u64) -> CheckReport {
    let mut report = CheckReport::new("tracker_lemma");
    let mut rng = seeded_rng(seed, 11);
    let mut failures = Vec::new();
    for i in 0..streams {
        let horizon = rng.random_range(1..=400usize);
        let tau = log_uniform(&mut rng, 1e-3, 1e3);
        let shape = i % 3;
        let mut x = log_uniform(&mut rng, 1e-4, 1e2);
        let norms: Vec<f64> = (0..horizon)
            .map(|t| match shape {
                0 => log_uniform(&mut rng, 1e-4, 1e4),
                1 => {
                    x *= (rng.random_range(-0.5..0.7f64)).exp();
                    x
                }
                _ => {
                    if rng.random::<f64>() < 0.1 {
                        0.0
                    } else {
                        tau * 1.5f64.powi(t as i32 % 60)
                    }
                }
            })
            .collect();
        let mut tracker = TrackerState::new(tau).expect("positive tau");
        let records: Vec<TrackerRecord> = norms
            .iter()
            .map(|&w_norm| TrackerRecord {
                w_norm,
                step: tracker.step(w_norm),
            })
            .collect();
        if let Err(e) = check_tracker_lemma(&records, tau) {
            failures.push(format!("stream {i}: {e}"));
        }
    }
    report.push(
        "all_properties",
        failures.is_empty(),
        format!(
            "{} of {streams} streams violated a property {:?}",
            failures.len(),
            failures.first()
        ),
    );
    report
}

/// Both regularizer sum bounds on random norm traces, `p = ln T`.
pub fn regularizer_sums(traces: usize, seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new("regularizer_sums");
    let mut rng = seeded_rng(seed, 12);
    for horizon in [10usize, 100, 1000] {
        let (mut lower_fail, mut upper_fail) = (0, 0);
        for i in 0..traces {
            let c = log_uniform(&mut rng, 1e-2, 1e2);
            let alpha = log_uniform(&mut rng, 1e-3, 10.0);
            let scale = log_uniform(&mut rng, 1e-3, 1e3);
            let norms: Vec<f64> = (0..horizon)
                .map(|_| match i % 3 {
                    0 => scale * rng.random::<f64>(),
                    1 => scale * log_uniform(&mut rng, 1e-6, 1.0),
                    _ => {
                        if rng.random::<f64>() < 0.5 {
                            0.0
                        } else {
                            scale
                        }
                    }
                })
                .collect();
            let u = log_uniform(&mut rng, 1e-4, 1e4);
            let check = check_sum_bounds(&norms, u, c, alpha)?;
            lower_fail += usize::from(!check.lower_ok);
            upper_fail += usize::from(!check.upper_ok);
        }
        report.push(
            format!("lower_bound_T{horizon}"),
            lower_fail == 0,
            format!("{lower_fail} of {traces} traces below c (max ||w|| - alpha)"),
        );
        report.push(
            format!("upper_bound_T{horizon}"),
            upper_fail == 0,
            format!("{upper_fail} of {traces} traces above the comparator bound"),
        );
    }
    Ok(report)
}

/// A mirror-descent state reached by a random number of random rounds.
fn random_mirror_state(rng: &mut ChaCha8Rng) -> Result<MirrorDescent> {
    let horizon = [10usize, 100, 1000][rng.random_range(0..3)];
    let mut hint = log_uniform(rng, 0.1, 10.0);
    let mut md = MirrorDescent::new(MirrorDescentConfig {
        dim: rng.random_range(1..=3),
        epsilon: log_uniform(rng, 1e-2, 1e2),
        c: if rng.random::<bool>() {
            0.0
        } else {
            log_uniform(rng, 1e-2, 1e2)
        },
        p: (horizon as f64).ln(),
        alpha: log_uniform(rng, 1e-3, 1.0),
        initial_hint: hint,
    })?;
    let drift = rng.random_range(-1.0..=1.0f64);
    for _ in 0..rng.random_range(0..200) {
        let dim = md.dim();
        let g_norm = hint * rng.random::<f64>();
        let g = random_vector(rng, dim, g_norm);
        let g = g.add(&Vector::basis(dim, drift * hint)).scaled(0.5);
        if rng.random::<f64>() < 0.05 {
            hint *= 2.0;
        }
        md.observe(&g, hint)?;
    }
    Ok(md)
}

/// Round trip `x -> L(x) -> x` and monotonicity of `L` on reachable states.
pub fn md_inversion(states: usize, seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new("md_inversion");
    let mut rng = seeded_rng(seed, 13);
    let mut worst: f64 = 0.0;
    let mut non_monotone = 0;
    for i in 0..states {
        let md = random_mirror_state(&mut rng)?;
        let link = md.link();
        let x0 = log_uniform(&mut rng, 1e-8, 1e8) * md.a_scale();
        let y = link.eval(x0);
        let x = link.solve(y)?;
        worst = worst.max((x - x0).abs() / x0);
        if i < 100 {
            let mut prev = 0.0;
            for j in 1..=200 {
                let v = link.eval(md.a_scale() * 1.2f64.powi(j - 100));
                if v <= prev {
                    non_monotone += 1;
                    break;
                }
                prev = v;
            }
        }
    }
    report.push(
        "round_trip",
        worst <= 1e-8,
        format!("max relative error {worst:.3e} over {states} states (tolerance 1e-8)"),
    );
    report.push(
        "strictly_increasing",
        non_monotone == 0,
        format!(
            "{non_monotone} of {} scanned states not strictly increasing",
            states.min(100)
        ),
    );
    Ok(report)
}

/// Projection feasibility, stationarity, and correction bounds on random points.
pub fn epigraph_feasibility(points: usize, seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new("epigraph_feasibility");
    let mut rng = seeded_rng(seed, 14);
    let (mut infeasible, mut worst, mut bound_fail) = (0, 0.0_f64, 0);
    for _ in 0..points {
        let dim = rng.random_range(1..=4);
        let h = log_uniform(&mut rng, 1e-2, 1e2);
        let gamma = log_uniform(&mut rng, 1e-2, 1e2);
        let w_norm = log_uniform(&mut rng, 1e-3, 1e3);
        let hat = EpigraphPoint {
            w: random_vector(&mut rng, dim, w_norm),
            y: rng.random_range(-2.0..1.5) * w_norm * w_norm,
        };
        let proj = weighted_project(&hat, h, gamma)?;
        infeasible += usize::from(!proj.is_feasible());
        if !hat.is_feasible() {
            let s = proj.w.norm();
            worst = worst.max(projection_residual(&hat, s, h, gamma));
        }
        let g_norm = h * rng.random::<f64>();
        let g = random_vector(&mut rng, dim, g_norm);
        let a = gamma * rng.random::<f64>();
        let (dw, dy) = correction_direction(&hat, &proj, h, gamma, &g, a);
        let root2 = 2f64.sqrt() * (1.0 + 1e-12);
        bound_fail += usize::from(dw.norm() > root2 * h || dy.abs() > root2 * gamma);
    }
    report.push(
        "feasible",
        infeasible == 0,
        format!("{infeasible} of {points} projections outside W"),
    );
    report.push(
        "stationarity",
        worst <= 1e-9,
        format!("max relative residual {worst:.3e} (tolerance 1e-9)"),
    );
    report.push(
        "correction_bounds",
        bound_fail == 0,
        format!("{bound_fail} of {points} corrections beyond sqrt(2) h or sqrt(2) gamma"),
    );
    Ok(report)
}

pub fn random_seq() -> Result<CheckReport> {
    let mut report = CheckReport::new("random_seq");
    for t in 1..=20usize {
        let e = random_seq_expectation(t)?;
        let floor = (t as f64 / 16.0).sqrt();
        report.push(format!("T{t}"), e >= floor, format!("E|S_T| = {e} >= {floor:.6}"));
    }
    let e4 = random_seq_expectation(4)?;
    report.push("T4_exact", e4 == 1.5, format!("E|S_4| = {e4}"));
    Ok(report)
}

pub fn lb_theorem2_floor(seeds: usize) -> Result<CheckReport> {
    let mut report = CheckReport::new("lb_theorem2_floor");
    let r = lower_bound_floor(64, 8, 1.0, seeds)?;
    report.push(
        "seed_mean_above_floor",
        r.passed(),
        format!(
            "mean {:.4} (SE {:.4}) vs floor {:.4} over {} seeds",
            r.mean, r.standard_error, r.floor, r.seeds
        ),
    );
    Ok(report)
}

pub fn origin_safety_check() -> Result<CheckReport> {
    let mut report = CheckReport::new("origin_safety");
    for p in origin_safety(1000, &[0, 10, 100])? {
        report.push(
            format!("{}_k{}", p.kind.name(), p.k),
            p.passed(),
            format!("R_T(0) = {:.4e} <= {:.2} (T = {})", p.regret, p.bound, p.horizon),
        );
    }
    Ok(report)
}

/// `error - correction + bias + composite = R_T(u)` on random corrupted runs.
pub fn decomposition_identity(configs: usize, seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new("decomposition_identity");
    let mut rng = seeded_rng(seed, 15);
    let mut worst: f64 = 0.0;
    let mut worst_at = String::new();
    for i in 0..configs {
        let kind = [
            AdversaryKind::SignFlipWindow,
            AdversaryKind::LbTheorem2,
            AdversaryKind::LbOrigin,
            AdversaryKind::DroReweight,
            AdversaryKind::IidRandom,
        ][rng.random_range(0..5)];
        let horizon = if kind == AdversaryKind::LbOrigin {
            rng.random_range(5..=30)
        } else {
            rng.random_range(50..=1000)
        };
        let k = rng.random_range(1..=horizon / 4);
        let dim = if kind == AdversaryKind::SignFlipWindow {
            1
        } else {
            rng.random_range(1..=3)
        };
        let mut spec = AdversarySpec::new(kind, horizon, k)
            .with_seed(rng.random())
            .with_dim(dim);
        spec.lipschitz = log_uniform(&mut rng, 0.1, 10.0);
        let algorithm = [Algorithm::KnownG, Algorithm::UnknownGCase1, Algorithm::UnknownGCase2][i % 3];
        let mut cfg = ExperimentConfig::new(algorithm, spec);
        let u_norm = log_uniform(&mut rng, 1e-2, 1e2);
        let u = random_vector(&mut rng, dim, u_norm);
        cfg.comparator = Some(u.into_inner());
        cfg.protocol.epsilon = log_uniform(&mut rng, 0.1, 10.0);
        cfg.protocol.tau_g = Some(log_uniform(&mut rng, 0.1, 10.0));
        let o = run_seed(&cfg, cfg.adversary.seed, false)?;
        let regret = o.true_regret();
        let d = o.decomposition.expect("protocol runs carry a decomposition");
        let gap = d.identity_gap(regret);
        if gap > worst {
            worst = gap;
            worst_at = format!("{algorithm} on {} (T = {horizon}, k = {k})", kind.name());
        }
    }
    report.push(
        "identity",
        worst <= 1e-6,
        format!("max relative gap {worst:.3e} over {configs} configs, worst {worst_at}"),
    );
    Ok(report)
}
