use rand::{Rng, RngCore};
use statrs::function::erf::{erfc, erfc_inv};

use super::{check_reward_normalization, validate_sigma, EnvironmentModel, RewardSpec, Smoothness};
use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

fn std_normal_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// `s' ~ N(s + g·a, σ²)` conditioned on `[-1, 1]`.
///
/// The truncated Gaussian density is infinitely differentiable in `(s, a)`,
/// which puts the process in the strongly smooth family.
#[derive(Debug, Clone)]
pub struct SmoothDrift {
    drift_gain: f64,
    noise_sigma: f64,
    reward: RewardSpec,
    horizon: usize,
    reward_sigma: f64,
}

impl SmoothDrift {
    pub fn new(drift_gain: f64, noise_sigma: f64, reward: RewardSpec, horizon: usize, reward_sigma: f64) -> Result<Self> {
        if !drift_gain.is_finite() || drift_gain.abs() > 2.0 {
            return Err(Error::InvalidEnvironment(format!("drift gain {drift_gain} must lie in [-2, 2]")));
        }
        if !(noise_sigma > 0.0) || !noise_sigma.is_finite() {
            return Err(Error::InvalidEnvironment(format!("transition noise sigma {noise_sigma} must be positive")));
        }
        if horizon < 1 {
            return Err(Error::InvalidEnvironment("horizon must be at least 1".into()));
        }
        reward.validate()?;
        validate_sigma(reward_sigma)?;
        let default = RewardSpec::Bump { s0: 0.5, a0: 0.0, width: 0.5 };
        let env = Self { drift_gain, noise_sigma, reward: reward.resolve(default), horizon, reward_sigma };
        check_reward_normalization(&env)?;
        Ok(env)
    }

    fn mean(&self, state: &[f64], action: &[f64]) -> f64 {
        state[0] + self.drift_gain * action[0]
    }

    /// Standardized truncation bounds `((-1 - μ)/σ, (1 - μ)/σ)`.
    fn bounds(&self, mu: f64) -> (f64, f64) {
        ((-1.0 - mu) / self.noise_sigma, (1.0 - mu) / self.noise_sigma)
    }
}

impl EnvironmentModel for SmoothDrift {
    fn name(&self) -> &str {
        "smooth_drift"
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::Strongly { nu: f64::INFINITY }
    }

    fn reward_noise_sigma(&self) -> f64 {
        self.reward_sigma
    }

    fn reward_mean(&self, _h: usize, state: &[f64], action: &[f64]) -> f64 {
        self.reward.level(state, action) / self.horizon as f64
    }

    fn sample_next_state(&self, _h: usize, state: &[f64], action: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let mu = self.mean(state, action);
        let (lo, hi) = self.bounds(mu);
        // work in the tail where the cdf keeps its relative precision
        let flip = lo > 0.0;
        let (a, b) = if flip { (-hi, -lo) } else { (lo, hi) };
        let (pa, pb) = (std_normal_cdf(a), std_normal_cdf(b));
        let u: f64 = rng.random();
        let p = pa + u * (pb - pa);
        let mut x = if pb - pa > 0.0 && p > 0.0 { std_normal_quantile(p) } else { b };
        x = x.clamp(a, b);
        let std = if flip { -x } else { x };
        vec![(mu + self.noise_sigma * std).clamp(-1.0, 1.0)]
    }

    fn transition_density(&self, _h: usize, state: &[f64], action: &[f64], next: &[f64]) -> Option<f64> {
        let x = next[0];
        if !(-1.0..=1.0).contains(&x) {
            return Some(0.0);
        }
        let mu = self.mean(state, action);
        let (lo, hi) = self.bounds(mu);
        let mass = if lo > 0.0 {
            std_normal_cdf(-lo) - std_normal_cdf(-hi)
        } else {
            std_normal_cdf(hi) - std_normal_cdf(lo)
        };
        let t = (x - mu) / self.noise_sigma;
        let pdf = (-0.5 * t * t).exp() / (self.noise_sigma * (2.0 * std::f64::consts::PI).sqrt());
        Some(if mass > 0.0 { pdf / mass } else { 0.0 })
    }
}
