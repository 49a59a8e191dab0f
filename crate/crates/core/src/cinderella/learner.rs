use serde::{Deserialize, Serialize};

use super::exact::{self, ThetaTable};
use super::schedule::BonusSchedule;
use crate::envs::{product_grid, run_episode, Episode, Simulator};
use crate::error::{Error, Result};
use crate::features::{LocalFeatures, TaylorFeatureMap};
use crate::regression::RidgeState;
use crate::scalar::dot;

/// How the optimistic parameters are obtained each episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    /// Pointwise additive bonus `√α‖φ‖_{Λ⁻¹}` on top of the ridge estimate.
    Relaxation,
    /// Exhaustive search over a grid of perturbations (tiny instances only).
    ExactGrid,
}

impl PlannerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlannerKind::Relaxation => "relaxation",
            PlannerKind::ExactGrid => "exact_grid",
        }
    }
}

/// Clip range applied to regression targets before accumulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetClip {
    pub lo: f64,
    pub hi: f64,
}

impl Default for TargetClip {
    fn default() -> Self {
        Self { lo: -1.0, hi: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub lambda: f64,
    pub delta: f64,
    pub bonus_scale: f64,
    pub inherent_bound: f64,
    /// Parameter-set radius; `None` uses 1.
    pub r_max: Option<f64>,
    /// Grid points per action dimension.
    pub action_grid: usize,
    pub planner: PlannerKind,
    /// Points per coordinate of the exact solver's perturbation grid.
    pub exact_grid: usize,
    pub target_clip: TargetClip,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            delta: 0.1,
            bonus_scale: 0.1,
            inherent_bound: 0.0,
            r_max: None,
            action_grid: 21,
            planner: PlannerKind::Relaxation,
            exact_grid: 5,
            target_clip: TargetClip::default(),
        }
    }
}

/// Per-episode planning metadata.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub episode: usize,
    pub planner: String,
    pub alpha_min: f64,
    pub alpha_mean: f64,
    pub alpha_max: f64,
    pub regions_visited: usize,
    pub max_region_count: usize,
    pub optimistic_value: f64,
}

/// Samples stored for one (step, region) pair; targets are rebuilt each
/// episode because they depend on the current optimistic value of `s'`.
#[derive(Debug, Clone, Default)]
pub(crate) struct RegionHistory {
    pub(crate) phis: Vec<f64>,
    pub(crate) rewards: Vec<f64>,
    pub(crate) next_states: Vec<f64>,
}

impl RegionHistory {
    pub(crate) fn len(&self) -> usize {
        self.rewards.len()
    }
}

/// Learner state: partition, features, one ridge state per (step, region).
#[derive(Debug, Clone)]
pub struct Cinderella {
    horizon: usize,
    state_dim: usize,
    action_dim: usize,
    map: TaylorFeatureMap<f64>,
    config: LearnerConfig,
    schedule: BonusSchedule,
    pub(crate) ridge: Vec<RidgeState<f64>>,
    pub(crate) history: Vec<RegionHistory>,
    pub(crate) theta_hat: Vec<Vec<f64>>,
    pub(crate) alpha: Vec<f64>,
    theta_bar: Option<ThetaTable>,
    action_grid: Vec<Vec<f64>>,
    episode: usize,
    summary: PlanSummary,
}

impl Cinderella {
    pub fn new(
        horizon: usize,
        state_dim: usize,
        action_dim: usize,
        map: TaylorFeatureMap<f64>,
        config: LearnerConfig,
        episodes: usize,
    ) -> Result<Self> {
        if horizon < 1 || state_dim < 1 || action_dim < 1 {
            return Err(Error::DimensionZero);
        }
        if map.input_dim() != state_dim + action_dim {
            return Err(Error::DimensionMismatch { expected: state_dim + action_dim, got: map.input_dim() });
        }
        if config.action_grid < 1 {
            return Err(Error::ConfigInvalid("action grid needs at least one point".into()));
        }
        let tc = config.target_clip;
        if !(tc.lo < tc.hi) {
            return Err(Error::ConfigInvalid(format!("target clip [{}, {}] is empty", tc.lo, tc.hi)));
        }
        let n = map.num_regions();
        let d = map.feature_dim();
        let schedule = BonusSchedule {
            delta: config.delta,
            lambda: config.lambda,
            l_phi: map.norm_bound(),
            r_max: config.r_max.unwrap_or(1.0),
            regions: n,
            feature_dim: d,
            episodes: episodes.max(1),
            horizon,
            inherent_bound: config.inherent_bound,
            bonus_scale: config.bonus_scale,
        };
        schedule.validate()?;
        let ridge = (0..horizon * n).map(|_| RidgeState::new(d, config.lambda)).collect::<Result<Vec<_>>>()?;
        let action_grid = product_grid(config.action_grid, action_dim);
        let alpha = vec![schedule.alpha_radius(1, 0); horizon * n];
        Ok(Self {
            horizon,
            state_dim,
            action_dim,
            map,
            config,
            schedule,
            ridge,
            history: vec![RegionHistory::default(); horizon * n],
            theta_hat: vec![vec![0.0; d]; horizon * n],
            alpha,
            theta_bar: None,
            action_grid,
            episode: 0,
            summary: PlanSummary::default(),
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn feature_map(&self) -> &TaylorFeatureMap<f64> {
        &self.map
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn schedule(&self) -> &BonusSchedule {
        &self.schedule
    }

    /// Mutable access for experiments that tamper with the bonus constants.
    pub fn schedule_mut(&mut self) -> &mut BonusSchedule {
        &mut self.schedule
    }

    pub fn regions(&self) -> usize {
        self.map.num_regions()
    }

    pub fn feature_dim(&self) -> usize {
        self.map.feature_dim()
    }

    pub fn action_grid(&self) -> &[Vec<f64>] {
        &self.action_grid
    }

    /// Completed episodes.
    pub fn episodes_completed(&self) -> usize {
        self.episode
    }

    pub fn ridge_state(&self, h: usize, region: usize) -> &RidgeState<f64> {
        &self.ridge[self.slot(h, region)]
    }

    /// Current ridge estimate `θ̂_{h,n}`.
    pub fn theta_hat(&self, h: usize, region: usize) -> &[f64] {
        &self.theta_hat[self.slot(h, region)]
    }

    /// Current radius `√α_{h,n}`.
    pub fn alpha(&self, h: usize, region: usize) -> f64 {
        self.alpha[self.slot(h, region)]
    }

    pub fn theta_table(&self) -> Option<&ThetaTable> {
        self.theta_bar.as_ref()
    }

    pub fn last_summary(&self) -> &PlanSummary {
        &self.summary
    }

    pub(crate) fn slot(&self, h: usize, region: usize) -> usize {
        (h - 1) * self.map.num_regions() + region
    }

    pub(crate) fn join(&self, state: &[f64], action: &[f64], z: &mut Vec<f64>) {
        z.clear();
        z.extend_from_slice(state);
        z.extend_from_slice(action);
    }

    /// Relaxed optimistic value `clip(φᵀθ̂ + √α‖φ‖_{Λ⁻¹}, 0, 1)`.
    pub fn optimistic_q(&self, h: usize, z: &[f64]) -> Result<f64> {
        let mut phi = vec![0.0; self.map.feature_dim()];
        let region = self.map.features_into(z, &mut phi)?;
        Ok(self.relaxed_q_from(h, region.0, &phi))
    }

    pub(crate) fn relaxed_q_from(&self, h: usize, region: usize, phi: &[f64]) -> f64 {
        let slot = self.slot(h, region);
        let mean = dot(phi, &self.theta_hat[slot]);
        let bonus = self.alpha[slot] * self.ridge[slot].inv_norm(phi);
        (mean + bonus).clamp(0.0, 1.0)
    }

    /// Optimistic Q used for acting: the relaxation, or `clip(φᵀθ̄)` after
    /// an exact-grid plan.
    pub fn q_bar(&self, h: usize, z: &[f64]) -> Result<f64> {
        let mut phi = vec![0.0; self.map.feature_dim()];
        let region = self.map.features_into(z, &mut phi)?;
        Ok(self.q_bar_from(h, region.0, &phi))
    }

    fn q_bar_from(&self, h: usize, region: usize, phi: &[f64]) -> f64 {
        match &self.theta_bar {
            Some(table) => dot(phi, &table.entry(h, region).theta_bar).clamp(0.0, 1.0),
            None => self.relaxed_q_from(h, region, phi),
        }
    }

    /// Greedy action index over the action grid; ties go to the first index.
    fn greedy(&self, h: usize, state: &[f64], buf_z: &mut Vec<f64>, phi: &mut [f64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (j, a) in self.action_grid.iter().enumerate() {
            self.join(state, a, buf_z);
            let region = self.map.features_into(buf_z, phi).expect("grid point inside the cube");
            let q = self.q_bar_from(h, region.0, phi);
            if q > best.1 {
                best = (j, q);
            }
        }
        best
    }

    /// Greedy action of the current plan.
    pub fn act(&self, h: usize, state: &[f64]) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.state_dim + self.action_dim);
        let mut phi = vec![0.0; self.map.feature_dim()];
        let (j, _) = self.greedy(h, state, &mut z, &mut phi);
        self.action_grid[j].clone()
    }

    /// `V̄_h(s) = max_a Q̄_h(s, a)` over the action grid.
    pub fn optimistic_value(&self, h: usize, state: &[f64]) -> f64 {
        let mut z = Vec::with_capacity(self.state_dim + self.action_dim);
        let mut phi = vec![0.0; self.map.feature_dim()];
        self.greedy(h, state, &mut z, &mut phi).1
    }

    pub(crate) fn refresh_alphas(&mut self, k: usize) {
        for slot in 0..self.alpha.len() {
            self.alpha[slot] = self.schedule.alpha_radius(k, self.ridge[slot].count());
        }
    }

    /// Relaxed backward sweep: `θ̂_{h,n}` from targets `r + V̄_{h+1}(s')`,
    /// with `V̄_{h+1}` maximized over the action grid.
    fn relaxed_sweep(&mut self) {
        let d = self.map.feature_dim();
        let n = self.map.num_regions();
        let clip = self.config.target_clip;
        let mut z = Vec::with_capacity(self.state_dim + self.action_dim);
        let mut phi = vec![0.0; d];
        for h in (1..=self.horizon).rev() {
            for region in 0..n {
                let slot = self.slot(h, region);
                let hist = &self.history[slot];
                let mut b = vec![0.0; d];
                for t in 0..hist.len() {
                    let next = &hist.next_states[t * self.state_dim..(t + 1) * self.state_dim];
                    let v_next = if h < self.horizon { self.greedy(h + 1, next, &mut z, &mut phi).1 } else { 0.0 };
                    let target = (hist.rewards[t] + v_next).clamp(clip.lo, clip.hi);
                    let row = &hist.phis[t * d..(t + 1) * d];
                    for (bi, &p) in b.iter_mut().zip(row) {
                        *bi += p * target;
                    }
                }
                self.theta_hat[slot] = self.ridge[slot].solve(&b);
            }
        }
    }

    /// Computes the optimistic parameters for the next episode from `s1`.
    pub fn plan(&mut self, s1: &[f64]) -> Result<()> {
        if s1.len() != self.state_dim {
            return Err(Error::DimensionMismatch { expected: self.state_dim, got: s1.len() });
        }
        let k = self.episode + 1;
        self.refresh_alphas(k);
        self.theta_bar = None;
        match self.config.planner {
            PlannerKind::Relaxation => self.relaxed_sweep(),
            PlannerKind::ExactGrid => {
                let table = exact::solve_exact_grid(self, s1, self.config.exact_grid)?;
                for (slot, entry) in table.entries().iter().enumerate() {
                    self.theta_hat[slot] = entry.theta_hat.clone();
                }
                self.theta_bar = Some(table);
            }
        }
        let counts: Vec<usize> = self.ridge.iter().map(RidgeState::count).collect();
        let a_min = self.alpha.iter().copied().fold(f64::INFINITY, f64::min);
        let a_max = self.alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.summary = PlanSummary {
            episode: k,
            planner: self.config.planner.as_str().to_string(),
            alpha_min: a_min,
            alpha_mean: self.alpha.iter().sum::<f64>() / self.alpha.len() as f64,
            alpha_max: a_max,
            regions_visited: counts.iter().filter(|&&c| c > 0).count(),
            max_region_count: counts.iter().copied().max().unwrap_or(0),
            optimistic_value: self.optimistic_value(1, s1),
        };
        Ok(())
    }

    /// Adds an episode's transitions to the design matrices and histories.
    pub fn absorb(&mut self, episode: &Episode) -> Result<()> {
        let d = self.map.feature_dim();
        let mut z = Vec::with_capacity(self.state_dim + self.action_dim);
        let mut phi = vec![0.0; d];
        for tr in &episode.transitions {
            if tr.h < 1 || tr.h > self.horizon {
                return Err(Error::ConfigInvalid(format!("transition step {} outside 1..={}", tr.h, self.horizon)));
            }
            if !tr.reward.is_finite() {
                return Err(Error::NonFiniteInput);
            }
            self.join(&tr.state, &tr.action, &mut z);
            let region = self.map.features_into(&z, &mut phi)?;
            let slot = self.slot(tr.h, region.0);
            self.ridge[slot].observe(&phi)?;
            let hist = &mut self.history[slot];
            hist.phis.extend_from_slice(&phi);
            hist.rewards.push(tr.reward);
            hist.next_states.extend_from_slice(&tr.next_state);
        }
        self.episode += 1;
        Ok(())
    }

    /// Plans from `s1`, then plays and absorbs one greedy episode.
    pub fn plan_and_act_episode<S: Simulator + ?Sized>(
        &mut self,
        env: &S,
        s1: &[f64],
        rng: &mut dyn rand::RngCore,
    ) -> Result<Episode> {
        self.plan(s1)?;
        let episode = run_episode(env, |h, s| self.act(h, s), s1, rng)?;
        self.absorb(&episode)?;
        Ok(episode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{EnvironmentModel, ExactLinear, RewardSpec, UniformShift};
    use crate::geometry::Partition;
    use crate::rng::{stream, Purpose};

    fn learner(h: usize, eps: f64, degree: usize, config: LearnerConfig) -> Cinderella {
        let map = TaylorFeatureMap::new(Partition::new(2, eps).unwrap(), degree, false).unwrap();
        Cinderella::new(h, 1, 1, map, config, 100).unwrap()
    }

    #[test]
    fn cold_start_is_optimistic() {
        let l = learner(2, 0.5, 1, LearnerConfig::default());
        for z in [[0.0, 0.0], [0.3, -0.9], [-1.0, 1.0]] {
            let q = l.optimistic_q(1, &z).unwrap();
            let (region, phi) = l.feature_map().features(&z).unwrap();
            let expect = (l.alpha(1, region.0) * crate::scalar::norm2(&phi)).min(1.0);
            assert!((q - expect).abs() < 1e-12);
        }
        // α ≥ 1 here, so the clipped value saturates
        assert_eq!(l.optimistic_q(1, &[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn horizon_one_matches_linucb_rule() {
        let env = ExactLinear::new(1, ExactLinear::default_thetas(1, 1).unwrap(), 0.1).unwrap();
        let mut l = learner(1, 1.0, 1, LearnerConfig { bonus_scale: 1.0, ..Default::default() });
        let mut rng = stream(4, 0, 0, Purpose::Environment);
        for _ in 0..30 {
            l.plan_and_act_episode(&env, &[0.2], &mut rng).unwrap();
        }
        l.plan(&[0.2]).unwrap();
        let chosen = l.act(1, &[0.2]);
        let rs = l.ridge_state(1, 0);
        let score = |a: &[f64]| {
            let (_, phi) = l.feature_map().features(&[0.2, a[0]]).unwrap();
            dot(&phi, l.theta_hat(1, 0)) + l.alpha(1, 0) * rs.inv_norm(&phi)
        };
        let best = l.action_grid().iter().map(|a| score(a)).fold(f64::NEG_INFINITY, f64::max);
        assert!((score(&chosen) - best).abs() < 1e-12 || score(&chosen) >= 1.0);
    }

    #[test]
    fn deterministic_actions() {
        let env = UniformShift::new(0.5, RewardSpec::Default, 2, 0.0).unwrap();
        let run = || {
            let mut l = learner(2, 0.5, 0, LearnerConfig::default());
            let mut actions = Vec::new();
            for k in 0..40 {
                let mut rng = stream(9, k, 0, Purpose::Environment);
                let ep = l.plan_and_act_episode(&env, &[0.0], &mut rng).unwrap();
                actions.extend(ep.transitions.iter().map(|t| t.action[0].to_bits()));
            }
            actions
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn q_is_clipped() {
        let env = UniformShift::new(0.5, RewardSpec::Default, 2, 0.3).unwrap();
        let mut l = learner(2, 0.5, 2, LearnerConfig::default());
        let mut rng = stream(1, 0, 0, Purpose::Environment);
        for _ in 0..20 {
            l.plan_and_act_episode(&env, &[0.5], &mut rng).unwrap();
        }
        l.plan(&[0.5]).unwrap();
        let grid = crate::envs::product_grid(317, 2);
        for h in 1..=2 {
            for z in &grid {
                let q = l.optimistic_q(h, z).unwrap();
                assert!((0.0..=1.0).contains(&q));
            }
        }
    }

    #[test]
    fn counts_track_visits() {
        let env = UniformShift::new(0.5, RewardSpec::Default, 3, 0.1).unwrap();
        let mut l = learner(3, 0.5, 0, LearnerConfig::default());
        let mut rng = stream(1, 0, 0, Purpose::Environment);
        for _ in 0..10 {
            l.plan_and_act_episode(&env, &[0.0], &mut rng).unwrap();
        }
        for h in 1..=3 {
            let total: usize = (0..l.regions()).map(|n| l.ridge_state(h, n).count()).sum();
            assert_eq!(total, 10);
        }
        assert_eq!(l.episodes_completed(), 10);
        assert_eq!(EnvironmentModel::horizon(&env), 3);
    }

    #[test]
    fn bonus_shrinks_with_updates() {
        let mut l = learner(1, 1.0, 1, LearnerConfig::default());
        let z = [0.3, -0.4];
        let (_, phi) = l.feature_map().features(&z).unwrap();
        let mut prev = f64::INFINITY;
        let frozen_k = 7;
        let mut rng = stream(2, 0, 0, Purpose::Check);
        for _ in 0..200 {
            let bonus = l.schedule().alpha_radius(frozen_k, 0) * l.ridge_state(1, 0).inv_norm(&phi);
            assert!(bonus <= prev + 1e-12);
            prev = bonus;
            let a: f64 = rand::Rng::random_range(&mut rng, -1.0..=1.0);
            let s: f64 = rand::Rng::random_range(&mut rng, -1.0..=1.0);
            let (_, p) = l.feature_map().features(&[s, a]).unwrap();
            l.ridge[0].observe(&p).unwrap();
        }
    }

    #[test]
    fn dimension_checks() {
        let map = TaylorFeatureMap::new(Partition::new(3, 1.0).unwrap(), 1, false).unwrap();
        assert!(Cinderella::new(1, 1, 1, map, LearnerConfig::default(), 10).is_err());
        let map = TaylorFeatureMap::new(Partition::new(2, 1.0).unwrap(), 1, false).unwrap();
        let bad = LearnerConfig { delta: 1.5, ..Default::default() };
        assert!(Cinderella::new(1, 1, 1, map, bad, 10).is_err());
    }
}
