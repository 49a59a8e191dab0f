//! Benchmark environments on `S = [-1, 1]^{d_S}`, `A = [-1, 1]^{d_A}`.
//!
//! Two interface surfaces exist. [`Simulator`] is all a learner gets: it can
//! only draw transitions. [`EnvironmentModel`] additionally exposes the mean
//! reward and the transition density, which the brute-force oracles need.

mod exact_linear;
mod smooth_drift;
mod uniform_shift;

pub use exact_linear::ExactLinear;
pub use smooth_drift::SmoothDrift;
pub use uniform_shift::UniformShift;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points per axis of the grid used by the construction-time reward check.
pub const REWARD_CHECK_GRID: usize = 128;

/// Smoothness class an environment is built to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Smoothness {
    /// Bellman images are ν-smooth although the kernel itself may not be.
    Mildly { nu: f64 },
    /// Reward and transition density are themselves ν-smooth.
    Strongly { nu: f64 },
    /// Bellman images are exactly linear in a known feature map.
    Linear,
}

/// Learner-facing view: sampling only.
pub trait Simulator: Send + Sync {
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn horizon(&self) -> usize;
    /// Draws `(reward, next_state)` for step `h` (1-based).
    fn sample_step(&self, h: usize, state: &[f64], action: &[f64], rng: &mut dyn RngCore) -> (f64, Vec<f64>);
}

/// Full model, visible to oracles.
pub trait EnvironmentModel: Send + Sync {
    fn name(&self) -> &str;
    fn state_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn horizon(&self) -> usize;
    fn smoothness(&self) -> Smoothness;
    fn reward_noise_sigma(&self) -> f64;
    /// Mean reward in `[0, 1/H]`.
    fn reward_mean(&self, h: usize, state: &[f64], action: &[f64]) -> f64;
    fn sample_next_state(&self, h: usize, state: &[f64], action: &[f64], rng: &mut dyn RngCore) -> Vec<f64>;
    /// Density of `next` under `p_h(· | state, action)`, when available.
    fn transition_density(&self, h: usize, state: &[f64], action: &[f64], next: &[f64]) -> Option<f64>;
}

impl<E: EnvironmentModel + ?Sized> Simulator for E {
    fn state_dim(&self) -> usize {
        EnvironmentModel::state_dim(self)
    }

    fn action_dim(&self) -> usize {
        EnvironmentModel::action_dim(self)
    }

    fn horizon(&self) -> usize {
        EnvironmentModel::horizon(self)
    }

    fn sample_step(&self, h: usize, state: &[f64], action: &[f64], rng: &mut dyn RngCore) -> (f64, Vec<f64>) {
        let noise = truncated_gaussian(rng, self.reward_noise_sigma(), 4.0);
        let reward = self.reward_mean(h, state, action) + noise;
        let next = self.sample_next_state(h, state, action, rng);
        (reward, next)
    }
}

/// Zero-mean Gaussian with standard deviation `sigma`, truncated at
/// `±cutoff·sigma` by rejection.
pub fn truncated_gaussian(rng: &mut dyn RngCore, sigma: f64, cutoff: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    loop {
        let x: f64 = rng.sample(StandardNormal);
        if x.abs() <= cutoff {
            return sigma * x;
        }
    }
}

/// Mean reward profile, scaled by `1/H` inside each environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RewardSpec {
    /// The environment's own default profile.
    #[default]
    Default,
    Zero,
    /// Constant `level ∈ [0, 1]`.
    Constant { level: f64 },
    /// `(1 + sin(π(s + a)/2)) / 2` on the first state and action coordinates.
    Sine,
    /// `exp(-((s - s0)² + (a - a0)²) / (2·width²))`.
    Bump { s0: f64, a0: f64, width: f64 },
}

impl RewardSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RewardSpec::Constant { level } if !(0.0..=1.0).contains(&level) => {
                Err(Error::InvalidEnvironment(format!("constant reward level {level} outside [0, 1]")))
            }
            RewardSpec::Bump { width, .. } if !(width > 0.0) || !width.is_finite() => {
                Err(Error::InvalidEnvironment(format!("bump width {width} must be positive")))
            }
            _ => Ok(()),
        }
    }

    /// Unscaled level in `[0, 1]`; `Default` must be resolved first.
    pub fn level(&self, state: &[f64], action: &[f64]) -> f64 {
        let s = state[0];
        let a = action[0];
        match *self {
            RewardSpec::Default | RewardSpec::Zero => 0.0,
            RewardSpec::Constant { level } => level,
            RewardSpec::Sine => 0.5 * (1.0 + (std::f64::consts::FRAC_PI_2 * (s + a)).sin()),
            RewardSpec::Bump { s0, a0, width } => {
                (-((s - s0).powi(2) + (a - a0).powi(2)) / (2.0 * width * width)).exp()
            }
        }
    }

    pub(crate) fn resolve(self, default: RewardSpec) -> RewardSpec {
        match self {
            RewardSpec::Default => default,
            other => other,
        }
    }
}

/// Uniform grid of `m` points on `[-1, 1]` including both ends.
pub fn linspace(m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![0.0];
    }
    (0..m).map(|i| -1.0 + 2.0 * i as f64 / (m - 1) as f64).collect()
}

/// Product grid `linspace(m)^dim` in row-major order.
pub fn product_grid(m: usize, dim: usize) -> Vec<Vec<f64>> {
    let axis = linspace(m);
    let mut out = vec![Vec::with_capacity(dim)];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// Construction-time normalization check: `0 ≤ H·r_h(z) ≤ 1` on a
/// `128^d` grid for every step.
pub fn check_reward_normalization<E: EnvironmentModel + ?Sized>(env: &E) -> Result<()> {
    let ds = env.state_dim();
    let h_total = env.horizon();
    let grid = product_grid(REWARD_CHECK_GRID, ds + env.action_dim());
    for h in 1..=h_total {
        for z in &grid {
            let r = env.reward_mean(h, &z[..ds], &z[ds..]);
            let scaled = r * h_total as f64;
            if !scaled.is_finite() || !(-1e-12..=1.0 + 1e-12).contains(&scaled) {
                return Err(Error::InvalidEnvironment(format!(
                    "{}: H·reward_mean = {scaled} at step {h}, z = {z:?} violates [0, 1]",
                    env.name()
                )));
            }
        }
    }
    Ok(())
}

/// One observed step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    /// Step index in `1..=H`.
    pub h: usize,
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub transitions: Vec<Transition>,
    pub ret: f64,
}

fn in_cube(v: &[f64]) -> bool {
    v.iter().all(|x| (-1.0..=1.0).contains(x))
}

/// Rolls out one episode from `s1` under `policy(h, state)`.
pub fn run_episode<S, P>(env: &S, mut policy: P, s1: &[f64], rng: &mut dyn RngCore) -> Result<Episode>
where
    S: Simulator + ?Sized,
    P: FnMut(usize, &[f64]) -> Vec<f64>,
{
    if s1.len() != env.state_dim() || !in_cube(s1) {
        return Err(Error::ConfigInvalid(format!("initial state {s1:?} outside the state cube")));
    }
    let mut state = s1.to_vec();
    let mut transitions = Vec::with_capacity(env.horizon());
    let mut ret = 0.0;
    for h in 1..=env.horizon() {
        let action = policy(h, &state);
        if action.len() != env.action_dim() || !in_cube(&action) {
            return Err(Error::PolicyOutOfRange { step: h });
        }
        let (reward, next_state) = env.sample_step(h, &state, &action, rng);
        ret += reward;
        transitions.push(Transition { h, state: state.clone(), action, reward, next_state: next_state.clone() });
        state = next_state;
    }
    Ok(Episode { transitions, ret })
}

/// Serializable environment selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvConfig {
    UniformShift {
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default)]
        reward: RewardSpec,
        #[serde(default = "default_reward_sigma")]
        reward_sigma: f64,
    },
    SmoothDrift {
        #[serde(default = "default_drift_gain")]
        drift_gain: f64,
        #[serde(default = "default_noise_sigma")]
        noise_sigma: f64,
        #[serde(default)]
        reward: RewardSpec,
        #[serde(default = "default_reward_sigma")]
        reward_sigma: f64,
    },
    ExactLinear {
        #[serde(default = "default_linear_degree")]
        degree: usize,
        /// Per-step reward coefficients; defaults depend on the degree.
        #[serde(default)]
        theta: Option<Vec<Vec<f64>>>,
        #[serde(default = "default_reward_sigma")]
        reward_sigma: f64,
    },
}

fn default_beta() -> f64 {
    0.5
}
fn default_reward_sigma() -> f64 {
    0.1
}
fn default_drift_gain() -> f64 {
    0.5
}
fn default_noise_sigma() -> f64 {
    0.2
}
fn default_linear_degree() -> usize {
    2
}

impl EnvConfig {
    pub fn build(&self, horizon: usize) -> Result<Box<dyn EnvironmentModel>> {
        Ok(match self {
            EnvConfig::UniformShift { beta, reward, reward_sigma } => {
                Box::new(UniformShift::new(*beta, reward.clone(), horizon, *reward_sigma)?)
            }
            EnvConfig::SmoothDrift { drift_gain, noise_sigma, reward, reward_sigma } => Box::new(
                SmoothDrift::new(*drift_gain, *noise_sigma, reward.clone(), horizon, *reward_sigma)?,
            ),
            EnvConfig::ExactLinear { degree, theta, reward_sigma } => {
                let thetas = match theta {
                    Some(t) if t.len() != horizon => {
                        return Err(Error::InvalidTheta(format!("{} coefficient rows for horizon {horizon}", t.len())))
                    }
                    Some(t) => t.clone(),
                    None => ExactLinear::default_thetas(*degree, horizon)?,
                };
                Box::new(ExactLinear::new(*degree, thetas, *reward_sigma)?)
            }
        })
    }

    /// Smoothness order the learner should assume for this environment.
    pub fn default_nu(&self) -> f64 {
        match self {
            EnvConfig::UniformShift { .. } => 1.0,
            EnvConfig::SmoothDrift { .. } => 3.0,
            EnvConfig::ExactLinear { degree, .. } => *degree as f64 + 1.0,
        }
    }
}

pub(crate) fn validate_sigma(sigma: f64) -> Result<()> {
    if !sigma.is_finite() || !(0.0..=1.0).contains(&sigma) {
        return Err(Error::InvalidEnvironment(format!("reward noise sigma {sigma} must lie in [0, 1]")));
    }
    Ok(())
}
