//! Command-line front end: single runs, sweeps, oracle reports and the
//! invariant check suite.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use cinderella::harness::{
    check_suite, run_experiment, run_sweep, CheckLevel, CheckOptions, RegretTrace, RunConfig, Setup, SweepConfig,
    SEED_ENV_VAR,
};
use cinderella::oracle::OracleReport;

#[derive(Parser)]
#[command(name = "cinderella", version, about = "Optimistic RL on locally linearizable MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSV and metadata.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a list of experiments in parallel.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
    },
    /// Print the oracle's V* report for a config.
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the invariant checks and print one JSON line per check.
    Check {
        #[arg(long, default_value = "quick")]
        level: String,
        /// Bonus multiplier for the optimism check.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        bonus_scale: f64,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn seed_override() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV_VAR) {
        Ok(raw) => {
            Ok(Some(raw.trim().parse().with_context(|| format!("{SEED_ENV_VAR}={raw:?} is not an unsigned integer"))?))
        }
        Err(_) => Ok(None),
    }
}

fn summary(label: &str, trace: &RegretTrace) -> String {
    format!(
        "{label}: episodes={} regions={} feature_dim={} epsilon={} cum_regret={:.6} avg_regret={:.6}",
        trace.rows.len(),
        trace.meta.regions,
        trace.meta.feature_dim,
        trace.meta.epsilon,
        trace.cumulative_regret(),
        trace.average_regret()
    )
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, out } => {
            let mut cfg = RunConfig::from_json(&read(&config)?)?;
            cfg.apply_env_override()?;
            let trace = run_experiment(&cfg)?;
            trace.write_to(&out, "run")?;
            println!("{}", summary("run", &trace));
        }
        Command::Sweep { config, jobs, out } => {
            let mut sweep = SweepConfig::from_json(&read(&config)?)?;
            if let Some(seed) = seed_override()? {
                match sweep.master_seed.as_mut() {
                    Some(master) => *master = seed,
                    None => sweep.runs.iter_mut().for_each(|r| r.seed = seed),
                }
            }
            let traces = run_sweep(&sweep.seeded_runs(), jobs)?;
            for (i, trace) in traces.iter().enumerate() {
                let stem = format!("run_{i:03}");
                trace.write_to(&out, &stem)?;
                println!("{}", summary(&stem, trace));
            }
        }
        Command::Oracle { config } => {
            let mut cfg = RunConfig::from_json(&read(&config)?)?;
            cfg.apply_env_override()?;
            let setup = Setup::new(&cfg)?;
            let report = OracleReport::build(setup.env.as_ref(), &setup.dp, &setup.initial_state(1));
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Check { level, bonus_scale } => {
            let level: CheckLevel = level.parse()?;
            let opts = CheckOptions { bonus_scale, ..Default::default() };
            let report = check_suite(level, &opts);
            print!("{}", report.to_jsonl());
            if !report.passed {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
