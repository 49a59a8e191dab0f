use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::experiment::run_experiment;
use super::trace::RegretTrace;
use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// A list of runs read from one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// When set, run `i` uses the seed derived from `(master_seed, i)`
    /// instead of its own.
    #[serde(default)]
    pub master_seed: Option<u64>,
    pub runs: Vec<RunConfig>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Run configs with their final seeds.
    pub fn seeded_runs(&self) -> Vec<RunConfig> {
        self.runs
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut r = r.clone();
                if let Some(master) = self.master_seed {
                    r.seed = derive_seed(master, i as u64);
                }
                r
            })
            .collect()
    }
}

/// Runs independent experiments on `jobs` threads (0 = all cores). Results
/// keep the input order; every failure is reported with its run index.
pub fn run_sweep(configs: &[RunConfig], jobs: usize) -> Result<Vec<RegretTrace>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::ConfigInvalid(format!("thread pool: {e}")))?;
    let results: Vec<Result<RegretTrace>> = pool.install(|| configs.par_iter().map(run_experiment).collect());
    let mut traces = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(t) => traces.push(t),
            Err(e) => failures.push(Error::Run { index, source: Box::new(e) }),
        }
    }
    if failures.is_empty() {
        Ok(traces)
    } else {
        Err(Error::Sweep(failures))
    }
}
