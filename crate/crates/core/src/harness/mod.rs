//! Experiment orchestration: configs, regret traces, sweeps and the check
//! suite behind the command-line tool.

mod check;
mod config;
mod experiment;
mod sweep;
mod trace;

pub use check::{check_suite, optimism_rate, CheckEntry, CheckLevel, CheckOptions, CheckReport, OptimismReport};
pub use config::{EpsilonSpec, InitialState, OracleGrid, Resolved, RunConfig, MAX_ORACLE_WORK, SEED_ENV_VAR};
pub use experiment::{run_experiment, run_with_agent, Agent, OracleAgent, Setup};
pub use sweep::{run_sweep, SweepConfig};
pub use trace::{loglog_slope, sig9, RegretRow, RegretTrace, RunMetadata, CSV_HEADER, EVAL_TOLERANCE};
