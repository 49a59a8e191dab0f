use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::cinderella::{LearnerConfig, PlannerKind, TargetClip};
use crate::envs::EnvConfig;
use crate::error::{Error, Result};
use crate::features::nu_star;
use crate::geometry::auto_epsilon;

/// Environment variable that overrides the `seed` field of every run.
pub const SEED_ENV_VAR: &str = "CINDERELLA_SEED";

/// Cover radius: `"auto"` or a literal value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum EpsilonSpec {
    #[default]
    Auto,
    Value(f64),
}

impl Serialize for EpsilonSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EpsilonSpec::Auto => s.serialize_str("auto"),
            EpsilonSpec::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for EpsilonSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(t) if t == "auto" => Ok(EpsilonSpec::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("epsilon must be \"auto\" or a number, got {t:?}"))),
            Raw::Number(v) => Ok(EpsilonSpec::Value(v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Fixed(Vec<f64>),
    Uniform,
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Fixed(vec![0.0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleGrid {
    pub state_grid: usize,
    pub action_grid: usize,
}

impl Default for OracleGrid {
    fn default() -> Self {
        Self { state_grid: 129, action_grid: 65 }
    }
}

/// Upper bound on `m_S^{2 d_S} · m_A^{d_A}` density evaluations per DP step.
pub const MAX_ORACLE_WORK: f64 = 5e9;

/// One experiment, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub episodes: usize,
    pub horizon: usize,
    /// Smoothness order; defaults to the environment's own.
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub epsilon: EpsilonSpec,
    #[serde(default = "d_lambda")]
    pub lambda: f64,
    #[serde(default = "d_delta")]
    pub delta: f64,
    #[serde(default = "d_bonus_scale")]
    pub bonus_scale: f64,
    #[serde(default)]
    pub inherent_bound: f64,
    #[serde(default)]
    pub r_max: Option<f64>,
    #[serde(default = "d_action_grid")]
    pub action_grid: usize,
    #[serde(default = "d_planner")]
    pub planner: PlannerKind,
    #[serde(default = "d_exact_grid")]
    pub exact_grid: usize,
    #[serde(default)]
    pub target_clip: TargetClip,
    /// Divide features by their norm bound.
    #[serde(default)]
    pub normalize: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub oracle: OracleGrid,
    #[serde(default)]
    pub initial_state: InitialState,
}

fn d_lambda() -> f64 {
    1.0
}
fn d_delta() -> f64 {
    0.1
}
fn d_bonus_scale() -> f64 {
    0.1
}
fn d_action_grid() -> usize {
    21
}
fn d_planner() -> PlannerKind {
    PlannerKind::Relaxation
}
fn d_exact_grid() -> usize {
    5
}

/// Quantities derived from a validated config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolved {
    pub nu: f64,
    pub degree: usize,
    pub epsilon: f64,
    pub state_dim: usize,
    pub action_dim: usize,
}

impl RunConfig {
    /// A config with every optional field at its default.
    pub fn new(env: EnvConfig, episodes: usize, horizon: usize) -> Self {
        Self {
            env,
            episodes,
            horizon,
            nu: None,
            epsilon: EpsilonSpec::Auto,
            lambda: d_lambda(),
            delta: d_delta(),
            bonus_scale: d_bonus_scale(),
            inherent_bound: 0.0,
            r_max: None,
            action_grid: d_action_grid(),
            planner: d_planner(),
            exact_grid: d_exact_grid(),
            target_clip: TargetClip::default(),
            normalize: false,
            seed: 0,
            oracle: OracleGrid::default(),
            initial_state: InitialState::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Replaces the seed with `CINDERELLA_SEED` when it is set.
    pub fn apply_env_override(&mut self) -> Result<()> {
        if let Ok(raw) = std::env::var(SEED_ENV_VAR) {
            self.seed = raw
                .trim()
                .parse()
                .map_err(|_| Error::ConfigInvalid(format!("{SEED_ENV_VAR}={raw:?} is not an unsigned integer")))?;
        }
        Ok(())
    }

    pub fn learner_config(&self) -> LearnerConfig {
        LearnerConfig {
            lambda: self.lambda,
            delta: self.delta,
            bonus_scale: self.bonus_scale,
            inherent_bound: self.inherent_bound,
            r_max: self.r_max,
            action_grid: self.action_grid,
            planner: self.planner,
            exact_grid: self.exact_grid,
            target_clip: self.target_clip,
        }
    }

    /// Validates the config against the environment dimensions and resolves
    /// `ν`, `ν*` and `ε`. Literal `ε > 1` is clamped to 1.
    pub fn resolve(&self, state_dim: usize, action_dim: usize) -> Result<Resolved> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if self.episodes < 1 || self.horizon < 1 {
            return bad(format!("episodes ({}) and horizon ({}) must be ≥ 1", self.episodes, self.horizon));
        }
        let nu = self.nu.unwrap_or_else(|| self.env.default_nu());
        if !nu.is_finite() {
            return bad(format!("nu {nu} must be finite"));
        }
        let degree = nu_star(nu)?;
        let dim = state_dim + action_dim;
        let epsilon = match self.epsilon {
            EpsilonSpec::Auto => auto_epsilon(self.episodes, dim, nu)?,
            EpsilonSpec::Value(v) if v.is_finite() && v > 0.0 => v.min(1.0),
            EpsilonSpec::Value(v) => return Err(Error::InvalidEpsilon(v)),
        };
        if self.oracle.state_grid < 2 || self.oracle.action_grid < 2 {
            return Err(Error::ResolutionTooSmall(format!(
                "oracle grids {}/{} must be ≥ 2",
                self.oracle.state_grid, self.oracle.action_grid
            )));
        }
        let work = (self.oracle.state_grid as f64).powi(2 * state_dim as i32)
            * (self.oracle.action_grid as f64).powi(action_dim as i32);
        if work > MAX_ORACLE_WORK {
            return Err(Error::OracleTooLarge(format!("{work:.3e} density evaluations per step")));
        }
        if let InitialState::Fixed(s) = &self.initial_state {
            if s.len() != state_dim {
                return Err(Error::DimensionMismatch { expected: state_dim, got: s.len() });
            }
            if s.iter().any(|x| !(-1.0..=1.0).contains(x)) {
                return bad(format!("initial state {s:?} lies outside [-1, 1]"));
            }
        }
        Ok(Resolved { nu, degree, epsilon, state_dim, action_dim })
    }

    /// SHA-256 over the canonical JSON of the config, hex encoded. Defaults
    /// are materialized first, so spelling a default out does not change it.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }
}
