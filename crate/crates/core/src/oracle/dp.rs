use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envs::{product_grid, EnvironmentModel};
use crate::error::{Error, Result};

/// Backward-induction tables on a product grid.
///
/// States sit at cell midpoints `-1 + (2i + 1)/m_S` (midpoint quadrature);
/// actions on `linspace(m_A)` including both ends. Expectations use the
/// transition density at the state grid, renormalized to unit mass per
/// `(s, a)` row.
#[derive(Debug, Clone)]
pub struct GridDP {
    horizon: usize,
    state_dim: usize,
    m_s: usize,
    m_a: usize,
    states: Vec<Vec<f64>>,
    actions: Vec<Vec<f64>>,
    /// `q[h-1][i * |A| + j]`.
    q: Vec<Vec<f64>>,
    /// `v[h-1][i]` for `h = 1..=H+1`; the last row is zero.
    v: Vec<Vec<f64>>,
}

/// JSON summary produced by the `oracle` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub env: String,
    pub horizon: usize,
    pub state_grid: usize,
    pub action_grid: usize,
    pub s1: Vec<f64>,
    pub v_star: f64,
    pub witness_action: Vec<f64>,
    pub uniform_policy_value: f64,
    pub uniform_policy_gap: f64,
}

fn midpoints(m: usize, dim: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..m).map(|i| -1.0 + (2 * i + 1) as f64 / m as f64).collect();
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

impl GridDP {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn state_grid(&self) -> usize {
        self.m_s
    }

    pub fn action_grid(&self) -> usize {
        self.m_a
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn actions(&self) -> &[Vec<f64>] {
        &self.actions
    }

    /// `V*_h` on the state grid (`h` in `1..=H+1`).
    pub fn values(&self, h: usize) -> &[f64] {
        &self.v[h - 1]
    }

    /// `Q*_h` on the state × action grid, row-major by state.
    pub fn q_values(&self, h: usize) -> &[f64] {
        &self.q[h - 1]
    }

    /// Normalized expectation of a state-grid function under `p_h(·|s, a)`.
    pub fn expectation<E: EnvironmentModel + ?Sized>(
        &self,
        env: &E,
        h: usize,
        state: &[f64],
        action: &[f64],
        values: &[f64],
    ) -> f64 {
        let mut mass = 0.0;
        let mut acc = 0.0;
        for (s_next, &v) in self.states.iter().zip(values) {
            let p = env.transition_density(h, state, action, s_next).unwrap_or(0.0);
            mass += p;
            acc += p * v;
        }
        if mass > 0.0 {
            acc / mass
        } else {
            0.0
        }
    }

    /// One-step lookahead `r_h(s, a) + E[V_{h+1}(s')]` using the stored tables.
    pub fn backup<E: EnvironmentModel + ?Sized>(&self, env: &E, h: usize, state: &[f64], action: &[f64]) -> f64 {
        (env.reward_mean(h, state, action) + self.expectation(env, h, state, action, &self.v[h])).clamp(0.0, 1.0)
    }

    /// `V*_h(s)` at an arbitrary state, maximizing over the action grid.
    /// Returns the value and the maximizing action.
    pub fn value_at<E: EnvironmentModel + ?Sized>(&self, env: &E, h: usize, state: &[f64]) -> (f64, Vec<f64>) {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (j, a) in self.actions.iter().enumerate() {
            let q = self.backup(env, h, state, a);
            if q > best.0 {
                best = (q, j);
            }
        }
        (best.0, self.actions[best.1].clone())
    }
}

/// Solves `Q*_h = T_h Q*_{h+1}` backwards on the grid.
pub fn dp_solve<E: EnvironmentModel + ?Sized>(env: &E, m_s: usize, m_a: usize) -> Result<GridDP> {
    if m_s < 2 || m_a < 2 {
        return Err(Error::ResolutionTooSmall(format!("state grid {m_s}, action grid {m_a}; both must be ≥ 2")));
    }
    let ds = env.state_dim();
    if ds >= 3 {
        return Err(Error::OracleTooLarge(format!("state dimension {ds} (at most 2 supported)")));
    }
    let states = midpoints(m_s, ds);
    let actions = product_grid(m_a, env.action_dim());
    if env.transition_density(1, &states[0], &actions[0], &states[0]).is_none() {
        return Err(Error::DensityUnavailable);
    }
    let h_total = env.horizon();
    let n_s = states.len();
    let n_a = actions.len();
    let mut dp = GridDP {
        horizon: h_total,
        state_dim: ds,
        m_s,
        m_a,
        states,
        actions,
        q: vec![Vec::new(); h_total],
        v: vec![vec![0.0; n_s]; h_total + 1],
    };
    for h in (1..=h_total).rev() {
        let q: Vec<f64> = (0..n_s)
            .into_par_iter()
            .flat_map_iter(|i| {
                let dp = &dp;
                (0..n_a).map(move |j| dp.backup(env, h, &dp.states[i], &dp.actions[j]))
            })
            .collect();
        let v: Vec<f64> = q.chunks_exact(n_a).map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
        dp.q[h - 1] = q;
        dp.v[h - 1] = v;
    }
    debug_assert_eq!(dp.state_dim, ds);
    Ok(dp)
}

/// Value of a deterministic policy from `s1`, by backward induction on the
/// same grid and quadrature as `dp`.
pub fn policy_value<E, P>(env: &E, dp: &GridDP, policy: P, s1: &[f64]) -> f64
where
    E: EnvironmentModel + ?Sized,
    P: Fn(usize, &[f64]) -> Vec<f64> + Sync,
{
    let h_total = dp.horizon;
    let mut next = vec![0.0; dp.states.len()];
    for h in (2..=h_total).rev() {
        next = dp
            .states
            .par_iter()
            .map(|s| {
                let a = policy(h, s);
                (env.reward_mean(h, s, &a) + dp.expectation(env, h, s, &a, &next)).clamp(0.0, 1.0)
            })
            .collect();
    }
    let a = policy(1, s1);
    (env.reward_mean(1, s1, &a) + dp.expectation(env, 1, s1, &a, &next)).clamp(0.0, 1.0)
}

/// Value from `s1` of the policy drawing actions uniformly from the grid.
pub fn random_policy_value<E: EnvironmentModel + ?Sized>(env: &E, dp: &GridDP, s1: &[f64]) -> f64 {
    let mean_q = |h: usize, s: &[f64], next: &[f64]| -> f64 {
        dp.actions
            .iter()
            .map(|a| (env.reward_mean(h, s, a) + dp.expectation(env, h, s, a, next)).clamp(0.0, 1.0))
            .sum::<f64>()
            / dp.actions.len() as f64
    };
    let mut next = vec![0.0; dp.states.len()];
    for h in (2..=dp.horizon).rev() {
        next = dp.states.par_iter().map(|s| mean_q(h, s, &next)).collect();
    }
    mean_q(1, s1, &next)
}

impl OracleReport {
    pub fn build<E: EnvironmentModel + ?Sized>(env: &E, dp: &GridDP, s1: &[f64]) -> Self {
        let (v_star, witness_action) = dp.value_at(env, 1, s1);
        let uniform = random_policy_value(env, dp, s1);
        Self {
            env: env.name().to_string(),
            horizon: dp.horizon,
            state_grid: dp.m_s,
            action_grid: dp.m_a,
            s1: s1.to_vec(),
            v_star,
            witness_action,
            uniform_policy_value: uniform,
            uniform_policy_gap: v_star - uniform,
        }
    }
}
