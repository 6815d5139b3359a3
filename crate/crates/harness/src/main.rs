use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use robust_oco_harness::checks::{run_check, CHECKS};
use robust_oco_harness::sim::run_seed;
use robust_oco_harness::sweep::{run_sweep, write_sweep};
use robust_oco_harness::trace::{write_summary, write_trace, RunKey};
use robust_oco_harness::{ExperimentConfig, HarnessError, Result};

/// Corruption-robust online convex optimization experiments.
#[derive(Debug, Parser)]
#[command(name = "robust-oco", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one configuration and write per-round traces plus a summary CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run this seed only, overriding `seeds` in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Trace CSV path, overriding `output_path`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the `[sweep]` grid of a configuration and write one row per cell.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Sweep CSV path, overriding `sweep.summary_path`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named verification check.
    Verify {
        #[arg(long)]
        check: String,
    },
    /// Print the names accepted by `verify --check`.
    ListChecks,
}

/// `dir/trace.csv` with suffix `_seed3` becomes `dir/trace_seed3.csv`.
fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}{suffix}.{ext}"),
        None => format!("{stem}{suffix}"),
    };
    path.with_file_name(name)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    Ok(cfg)
}

fn run(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let cfg = load(config, seed)?;
    let trace_path = out
        .or_else(|| cfg.output_path.clone())
        .unwrap_or_else(|| "trace.csv".into());
    let mut rows = Vec::with_capacity(cfg.seeds.len());
    for &s in &cfg.seeds {
        let outcome = run_seed(&cfg, s, true)?;
        let path = if cfg.seeds.len() == 1 {
            trace_path.clone()
        } else {
            with_suffix(&trace_path, &format!("_seed{s}"))
        };
        write_trace(create(&path)?, &outcome.records)?;
        println!(
            "seed {s}: R_T(u) = {:.6e}, corrupted rounds = {}, trace {}",
            outcome.true_regret(),
            outcome.corruption.count_corrupted,
            path.display()
        );
        let key = RunKey {
            algorithm: cfg.algorithm.name().to_string(),
            adversary: cfg.adversary.kind.name().to_string(),
            k: cfg.adversary.k,
            horizon: cfg.adversary.horizon,
            seed: s,
        };
        rows.push((key, outcome));
    }
    let summary = with_suffix(&trace_path, "_summary");
    write_summary(create(&summary)?, &rows)?;
    println!("summary {}", summary.display());
    Ok(())
}

fn sweep(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let cfg = load(config, seed)?;
    let path = out
        .or_else(|| cfg.sweep.as_ref().and_then(|s| s.summary_path.clone()))
        .unwrap_or_else(|| "sweep.csv".into());
    let rows = run_sweep(&cfg)?;
    write_sweep(create(&path)?, &rows)?;
    println!("{} rows written to {}", rows.len(), path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed, out } => run(&config, seed, out).map(|()| ExitCode::SUCCESS),
        Command::Sweep { config, seed, out } => sweep(&config, seed, out).map(|()| ExitCode::SUCCESS),
        Command::Verify { check } => run_check(&check).map(|report| {
            print!("{report}");
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }),
        Command::ListChecks => {
            for name in CHECKS {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        match e {
            HarnessError::UnknownCheck { .. } | HarnessError::Config(_) | HarnessError::Parse { .. } => {
                ExitCode::from(2)
            }
            _ => ExitCode::from(1),
        }
    })
}
