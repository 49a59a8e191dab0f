use rand::{Rng, RngCore};

use super::{check_reward_normalization, validate_sigma, EnvironmentModel, Smoothness};
use crate::error::{Error, Result};
use crate::features::{LocalFeatures, TaylorFeatureMap};
use crate::geometry::Partition;
use crate::scalar::dot;

/// Sanity instance with zero inherent Bellman error.
///
/// Rewards are `φ(z)ᵀθ_h` for a single-region Taylor map centered at the
/// origin, and next states are uniform on `[-1, 1]` whatever `(s, a)`. Every
/// Bellman backup is therefore the reward plus a constant, which the constant
/// feature absorbs.
#[derive(Debug, Clone)]
pub struct ExactLinear {
    map: TaylorFeatureMap<f64>,
    thetas: Vec<Vec<f64>>,
    reward_sigma: f64,
}

impl ExactLinear {
    pub fn new(degree: usize, thetas: Vec<Vec<f64>>, reward_sigma: f64) -> Result<Self> {
        let map = TaylorFeatureMap::new(Partition::new(2, 1.0)?, degree, false)?;
        if thetas.is_empty() {
            return Err(Error::InvalidTheta("at least one step is required".into()));
        }
        let d = map.feature_dim();
        if let Some(bad) = thetas.iter().find(|t| t.len() != d || t.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidTheta(format!("expected {d} finite coefficients, got {bad:?}")));
        }
        validate_sigma(reward_sigma)?;
        let env = Self { map, thetas, reward_sigma };
        check_reward_normalization(&env).map_err(|e| Error::InvalidTheta(e.to_string()))?;
        Ok(env)
    }

    /// Built-in coefficients for degrees 0 to 2, scaled by `1/H`.
    pub fn default_thetas(degree: usize, horizon: usize) -> Result<Vec<Vec<f64>>> {
        let base: Vec<f64> = match degree {
            0 => vec![0.5],
            1 => vec![0.5, 0.2, 0.3],
            // 0.7 + 0.1 s + 0.2 a - 0.4 a², maximized at a = 0.25
            2 => vec![0.7, 0.1, 0.2, 0.0, 0.0, -0.4],
            _ => return Err(Error::InvalidTheta(format!("no default coefficients for degree {degree}"))),
        };
        if horizon < 1 {
            return Err(Error::InvalidEnvironment("horizon must be at least 1".into()));
        }
        let scale = 1.0 / horizon as f64;
        Ok(vec![base.iter().map(|x| x * scale).collect(); horizon])
    }

    pub fn feature_map(&self) -> &TaylorFeatureMap<f64> {
        &self.map
    }

    pub fn thetas(&self) -> &[Vec<f64>] {
        &self.thetas
    }
}

impl EnvironmentModel for ExactLinear {
    fn name(&self) -> &str {
        "exact_linear"
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn horizon(&self) -> usize {
        self.thetas.len()
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::Linear
    }

    fn reward_noise_sigma(&self) -> f64 {
        self.reward_sigma
    }

    fn reward_mean(&self, h: usize, state: &[f64], action: &[f64]) -> f64 {
        let z = [state[0], action[0]];
        let (_, phi) = self.map.features(&z).expect("state-action inside the cube");
        dot(&phi, &self.thetas[h - 1])
    }

    fn sample_next_state(&self, _h: usize, _state: &[f64], _action: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        vec![rng.random_range(-1.0..=1.0)]
    }

    fn transition_density(&self, _h: usize, _state: &[f64], _action: &[f64], next: &[f64]) -> Option<f64> {
        Some(if (-1.0..=1.0).contains(&next[0]) { 0.5 } else { 0.0 })
    }
}
