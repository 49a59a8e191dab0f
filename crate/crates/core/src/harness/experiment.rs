use std::time::Instant;

use rand::Rng;

use super::config::{InitialState, Resolved, RunConfig};
use super::trace::{RegretRow, RegretTrace, RunMetadata};
use crate::cinderella::{Cinderella, PlanSummary};
use crate::envs::{run_episode, Episode, EnvironmentModel};
use crate::error::Result;
use crate::features::{LocalFeatures, TaylorFeatureMap};
use crate::geometry::Partition;
use crate::oracle::{dp_solve, policy_value, random_policy_value, GridDP};
use crate::rng::{stream, Purpose};

/// Anything that can be scored episode by episode against the oracle.
pub trait Agent: Sync {
    /// Prepares the policy for the coming episode.
    fn plan(&mut self, s1: &[f64]) -> Result<()>;
    /// Action at 1-based step `h`; must not change between `plan` and `absorb`.
    fn act(&self, h: usize, state: &[f64]) -> Vec<f64>;
    fn absorb(&mut self, episode: &Episode) -> Result<()>;
    fn summary(&self) -> Option<PlanSummary> {
        None
    }
}

impl Agent for Cinderella {
    fn plan(&mut self, s1: &[f64]) -> Result<()> {
        Cinderella::plan(self, s1)
    }

    fn act(&self, h: usize, state: &[f64]) -> Vec<f64> {
        Cinderella::act(self, h, state)
    }

    fn absorb(&mut self, episode: &Episode) -> Result<()> {
        Cinderella::absorb(self, episode)
    }

    fn summary(&self) -> Option<PlanSummary> {
        Some(self.last_summary().clone())
    }
}

/// Greedy policy with respect to the oracle's own Q tables.
pub struct OracleAgent<'a> {
    env: &'a dyn EnvironmentModel,
    dp: &'a GridDP,
}

impl<'a> OracleAgent<'a> {
    pub fn new(env: &'a dyn EnvironmentModel, dp: &'a GridDP) -> Self {
        Self { env, dp }
    }
}

impl Agent for OracleAgent<'_> {
    fn plan(&mut self, _s1: &[f64]) -> Result<()> {
        Ok(())
    }

    fn act(&self, h: usize, state: &[f64]) -> Vec<f64> {
        self.dp.value_at(self.env, h, state).1
    }

    fn absorb(&mut self, _episode: &Episode) -> Result<()> {
        Ok(())
    }
}

/// Environment, oracle and learner pieces built from a config.
pub struct Setup {
    pub config: RunConfig,
    pub resolved: Resolved,
    pub env: Box<dyn EnvironmentModel>,
    pub dp: GridDP,
}

impl Setup {
    pub fn new(config: &RunConfig) -> Result<Self> {
        let env = config.env.build(config.horizon)?;
        let resolved = config.resolve(env.state_dim(), env.action_dim())?;
        let dp = dp_solve(env.as_ref(), config.oracle.state_grid, config.oracle.action_grid)?;
        Ok(Self { config: config.clone(), resolved, env, dp })
    }

    pub fn feature_map(&self) -> Result<TaylorFeatureMap<f64>> {
        let dim = self.resolved.state_dim + self.resolved.action_dim;
        TaylorFeatureMap::new(Partition::new(dim, self.resolved.epsilon)?, self.resolved.degree, self.config.normalize)
    }

    pub fn learner(&self) -> Result<Cinderella> {
        Cinderella::new(
            self.config.horizon,
            self.resolved.state_dim,
            self.resolved.action_dim,
            self.feature_map()?,
            self.config.learner_config(),
            self.config.episodes,
        )
    }

    /// Initial state of episode `k` (1-based).
    pub fn initial_state(&self, k: usize) -> Vec<f64> {
        match &self.config.initial_state {
            InitialState::Fixed(s) => s.clone(),
            InitialState::Uniform => {
                let mut rng = stream(self.config.seed, k as u64, 0, Purpose::InitialState);
                (0..self.resolved.state_dim).map(|_| rng.random_range(-1.0..=1.0)).collect()
            }
        }
    }

    fn metadata(&self, planner: &str) -> Result<RunMetadata> {
        let map = self.feature_map()?;
        let s1 = self.initial_state(1);
        let v_star = self.dp.value_at(self.env.as_ref(), 1, &s1).0;
        let uniform = random_policy_value(self.env.as_ref(), &self.dp, &s1);
        Ok(RunMetadata {
            config_hash: self.config.hash(),
            env: self.env.name().to_string(),
            planner: planner.to_string(),
            seed: self.config.seed,
            episodes: self.config.episodes,
            horizon: self.config.horizon,
            nu: self.resolved.nu,
            degree: self.resolved.degree,
            epsilon: self.resolved.epsilon,
            regions: map.num_regions(),
            feature_dim: map.feature_dim(),
            uniform_policy_value: uniform,
            uniform_policy_gap: v_star - uniform,
        })
    }

    /// Runs `agent` for the configured number of episodes and scores every
    /// episode's policy exactly on the oracle grid.
    pub fn run_agent(&self, agent: &mut dyn Agent, planner: &str) -> Result<RegretTrace> {
        let env = self.env.as_ref();
        let mut rows = Vec::with_capacity(self.config.episodes);
        let mut plans = Vec::new();
        let mut cum = 0.0;
        for k in 1..=self.config.episodes {
            let start = Instant::now();
            let s1 = self.initial_state(k);
            agent.plan(&s1)?;
            let mut rng = stream(self.config.seed, k as u64, 0, Purpose::Environment);
            let episode = {
                let policy = |h: usize, s: &[f64]| agent.act(h, s);
                run_episode(env, policy, &s1, &mut rng)?
            };
            let vstar = self.dp.value_at(env, 1, &s1).0;
            let vpi = {
                let shared: &dyn Agent = agent;
                policy_value(env, &self.dp, |h, s| shared.act(h, s), &s1)
            };
            if let Some(p) = agent.summary() {
                plans.push(p);
            }
            agent.absorb(&episode)?;
            let regret = vstar - vpi;
            cum += regret;
            rows.push(RegretRow {
                k,
                ret: episode.ret,
                vstar,
                vpi,
                regret,
                cum_regret: cum,
                ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }
        Ok(RegretTrace { meta: self.metadata(planner)?, rows, plans })
    }
}

/// Builds everything from `config` and runs the learner.
pub fn run_experiment(config: &RunConfig) -> Result<RegretTrace> {
    let setup = Setup::new(config)?;
    let mut learner = setup.learner()?;
    setup.run_agent(&mut learner, config.planner.as_str())
}

/// Runs an arbitrary agent under `config`'s environment and oracle.
pub fn run_with_agent(config: &RunConfig, agent: &mut dyn Agent, label: &str) -> Result<RegretTrace> {
    Setup::new(config)?.run_agent(agent, label)
}
