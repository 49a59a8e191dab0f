use rand::{Rng, RngCore};

use super::{check_reward_normalization, validate_sigma, EnvironmentModel, RewardSpec, Smoothness};
use crate::error::{Error, Result};

/// `s' ~ Unif[βs, βs + 1 - β]`, independent of the action.
///
/// The kernel has a discontinuous density, so the process is not smooth in
/// the strong sense, yet integrating any bounded function against it gives a
/// Lipschitz function of `s`: the Bellman images are 1-smooth.
#[derive(Debug, Clone)]
pub struct UniformShift {
    beta: f64,
    reward: RewardSpec,
    horizon: usize,
    reward_sigma: f64,
}

impl UniformShift {
    pub fn new(beta: f64, reward: RewardSpec, horizon: usize, reward_sigma: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::BetaOutOfRange(beta));
        }
        if horizon < 1 {
            return Err(Error::InvalidEnvironment("horizon must be at least 1".into()));
        }
        reward.validate()?;
        validate_sigma(reward_sigma)?;
        let env = Self { beta, reward: reward.resolve(RewardSpec::Sine), horizon, reward_sigma };
        check_reward_normalization(&env)?;
        Ok(env)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Support `[βs, βs + 1 - β]` of the next-state law.
    pub fn support(&self, s: f64) -> (f64, f64) {
        (self.beta * s, self.beta * s + 1.0 - self.beta)
    }
}

impl EnvironmentModel for UniformShift {
    fn name(&self) -> &str {
        "uniform_shift"
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
        Smoothness::Mildly { nu: 1.0 }
    }

    fn reward_noise_sigma(&self) -> f64 {
        self.reward_sigma
    }

    fn reward_mean(&self, _h: usize, state: &[f64], action: &[f64]) -> f64 {
        self.reward.level(state, action) / self.horizon as f64
    }

    fn sample_next_state(&self, _h: usize, state: &[f64], _action: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        let (lo, hi) = self.support(state[0]);
        let u: f64 = rng.random();
        vec![(lo + (hi - lo) * u).clamp(-1.0, 1.0)]
    }

    fn transition_density(&self, _h: usize, state: &[f64], _action: &[f64], next: &[f64]) -> Option<f64> {
        let (lo, hi) = self.support(state[0]);
        let x = next[0];
        Some(if x >= lo && x <= hi { 1.0 / (1.0 - self.beta) } else { 0.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn beta_range() {
        for beta in [0.0, 1.0, -0.2, f64::NAN] {
            assert!(matches!(
                UniformShift::new(beta, RewardSpec::Default, 1, 0.1),
                Err(Error::BetaOutOfRange(_))
            ));
        }
    }

    #[test]
    fn support_inside_cube() {
        let env = UniformShift::new(0.5, RewardSpec::Default, 2, 0.1).unwrap();
        assert_eq!(env.support(1.0), (0.5, 1.0));
        assert_eq!(env.support(-1.0), (-0.5, 0.0));
        let mut rng = stream(1, 0, 0, Purpose::Check);
        for i in 0..100_000 {
            let s = -1.0 + 2.0 * (i % 1000) as f64 / 999.0;
            let n = env.sample_next_state(1, &[s], &[0.0], &mut rng)[0];
            assert!((-1.0..=1.0).contains(&n));
            let (lo, hi) = env.support(s);
            assert!(n >= lo && n <= hi);
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let env = UniformShift::new(0.3, RewardSpec::Default, 2, 0.1).unwrap();
        let m = 20_000;
        for s in [-1.0, -0.3, 0.0, 0.8, 1.0] {
            let mass: f64 = (0..m)
                .map(|i| -1.0 + (2 * i + 1) as f64 / m as f64)
                .map(|x| env.transition_density(1, &[s], &[0.0], &[x]).unwrap() * 2.0 / m as f64)
                .sum();
            assert!((mass - 1.0).abs() < 1e-2, "mass {mass} at s={s}");
        }
    }

    #[test]
    fn default_reward_is_scaled_sine() {
        let env = UniformShift::new(0.5, RewardSpec::Default, 4, 0.1).unwrap();
        assert!((env.reward_mean(1, &[0.0], &[1.0]) - 0.25).abs() < 1e-15);
        assert!((env.reward_mean(1, &[-1.0], &[-1.0]) - 0.125).abs() < 1e-15);
    }
}
