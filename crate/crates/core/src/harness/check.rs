use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cinderella::{Cinderella, LearnerConfig, PlannerKind};
use crate::envs::{run_episode, ExactLinear, RewardSpec, UniformShift};
use crate::error::{Error, Result};
use crate::features::{binomial, extend_features, region_linear_value, LocalFeatures, TaylorFeatureMap};
use crate::geometry::Partition;
use crate::oracle::{dp_solve, inherent_error_estimate, taylor_remainder_check, InherentErrorConfig};
use crate::regression::{cholesky_inverse, RidgeState};
use crate::rng::{stream, Purpose};
use crate::scalar::dot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckLevel {
    Quick,
    Full,
}

impl std::str::FromStr for CheckLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(CheckLevel::Quick),
            "full" => Ok(CheckLevel::Full),
            other => Err(Error::ConfigInvalid(format!("unknown check level {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckOptions {
    /// Bonus multiplier used by the optimism check.
    pub bonus_scale: f64,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { bonus_scale: 1.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub level: CheckLevel,
    pub passed: bool,
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    /// One JSON object per line: the entries, then a summary line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serializes"));
            out.push('\n');
        }
        let summary = serde_json::json!({ "level": self.level, "passed": self.passed, "checks": self.entries.len() });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }
}

/// Result of [`optimism_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimismReport {
    pub pairs: usize,
    pub optimistic: usize,
    pub rate: f64,
    pub v_star: f64,
    /// Smallest `V̄₁(s₁) − V*₁(s₁)` seen.
    pub worst_gap: f64,
}

/// Fraction of (seed, episode) pairs where the planned optimistic value at
/// `s1` is at least `V*₁(s1) − tol`. The environment is the constant-reward
/// linear bandit with a single region and a scalar feature.
pub fn optimism_rate(
    config: &LearnerConfig,
    seeds: usize,
    episodes: usize,
    base_seed: u64,
    tol: f64,
) -> Result<OptimismReport> {
    let env = ExactLinear::new(0, ExactLinear::default_thetas(0, 1)?, 0.1)?;
    let s1 = [0.0];
    let v_star = dp_solve(&env, 9, 9)?.value_at(&env, 1, &s1).0;
    let map = TaylorFeatureMap::new(Partition::new(2, 1.0)?, 0, false)?;
    let mut optimistic = 0;
    let mut worst_gap = f64::INFINITY;
    for seed in 0..seeds as u64 {
        let seed = base_seed.wrapping_add(seed);
        let mut learner = Cinderella::new(1, 1, 1, map.clone(), config.clone(), episodes)?;
        for k in 1..=episodes {
            learner.plan(&s1)?;
            let gap = learner.optimistic_value(1, &s1) - v_star;
            worst_gap = worst_gap.min(gap);
            if gap >= -tol {
                optimistic += 1;
            }
            let mut rng = stream(seed, k as u64, 0, Purpose::Environment);
            let ep = run_episode(&env, |h, s| learner.act(h, s), &s1, &mut rng)?;
            learner.absorb(&ep)?;
        }
    }
    let pairs = seeds * episodes;
    Ok(OptimismReport { pairs, optimistic, rate: optimistic as f64 / pairs as f64, v_star, worst_gap })
}

fn timed(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckEntry {
    let start = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckEntry { name: name.to_string(), passed, detail, ms: start.elapsed().as_secs_f64() * 1e3 }
}

fn check_partition(points: usize, seed: u64) -> Result<(bool, String)> {
    let mut rng = stream(seed, 0, 1, Purpose::Check);
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    for d in 1..=3 {
        for eps in [1.0, 0.5, 0.25] {
            let p = Partition::<f64>::new(d, eps)?;
            if p.len() as f64 > (2.0 / eps).powi(d as i32) {
                return Ok((false, format!("N = {} exceeds (2/ε)^d at d={d}, ε={eps}", p.len())));
            }
            for _ in 0..points {
                let z: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
                let r = p.assign(&z)?;
                let dist = |c: &[f64]| z.iter().zip(c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                worst = worst.max(dist(p.center(r)) / eps);
                // first nearest center by scanning
                let mut best = (0, f64::INFINITY);
                for (i, c) in p.centers().iter().enumerate() {
                    let dc = dist(c);
                    if dc < best.1 {
                        best = (i, dc);
                    }
                }
                if best.0 != r.0 {
                    mismatches += 1;
                }
            }
        }
    }
    Ok((worst <= 1.0 && mismatches == 0, format!("max dist/ε = {worst:.6}, scan mismatches = {mismatches}")))
}

fn check_features(queries: usize, seed: u64) -> Result<(bool, String)> {
    for d in 1..=4 {
        for degree in 0..=5 {
            let p = Partition::<f64>::new(d, 1.0)?;
            let map = TaylorFeatureMap::new(p, degree, false)?;
            let expect = binomial((degree + d) as u64, degree as u64) as usize;
            if map.feature_dim() != expect {
                return Ok((false, format!("d={d}, ν*={degree}: dim {} ≠ {expect}", map.feature_dim())));
            }
        }
    }
    let map = TaylorFeatureMap::new(Partition::new(2, 0.25)?, 2, false)?;
    let mut rng = stream(seed, 0, 2, Purpose::Check);
    let thetas: Vec<Vec<f64>> = (0..map.num_regions())
        .map(|_| (0..map.feature_dim()).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let stacked: Vec<f64> = thetas.concat();
    let mut worst: f64 = 0.0;
    for _ in 0..queries {
        let z = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
        let a = region_linear_value(&map, &thetas, &z)?;
        let b = dot(&extend_features(&map, &z)?, &stacked);
        worst = worst.max((a - b).abs());
    }
    Ok((worst <= 1e-12, format!("binomial dims ok; extension max diff {worst:.3e}")))
}

fn check_regression(updates: usize, seed: u64) -> Result<(bool, String)> {
    let mut rng = stream(seed, 0, 3, Purpose::Check);
    let mut worst: f64 = 0.0;
    for d in [1, 4, 16] {
        let mut state = RidgeState::<f64>::new(d, 1.0)?;
        for _ in 0..updates {
            let phi: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            state.update(&phi, rng.random_range(-1.0..1.0))?;
        }
        let direct = cholesky_inverse(state.design(), d).ok_or(Error::NonFiniteInput)?;
        for (a, b) in direct.iter().zip(state.design_inverse()) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok((worst <= 1e-8, format!("max |Λ⁻¹ − chol⁻¹| = {worst:.3e}")))
}

fn check_optimism(seeds: usize, episodes: usize, opts: &CheckOptions) -> Result<(bool, String)> {
    let config = LearnerConfig { bonus_scale: opts.bonus_scale, planner: PlannerKind::ExactGrid, ..Default::default() };
    let rep = optimism_rate(&config, seeds, episodes, opts.seed, 1e-6)?;
    Ok((
        rep.rate >= 0.9,
        format!("c_β = {}: {}/{} optimistic ({:.3}), worst gap {:.3e}", opts.bonus_scale, rep.optimistic, rep.pairs, rep.rate, rep.worst_gap),
    ))
}

fn check_taylor() -> Result<(bool, String)> {
    let f = |x: &[f64]| (2.0 * x[0]).sin();
    let df = |c: &[f64], a: &[usize]| {
        let k = a[0];
        let v = 2.0 * c[0];
        let base = match k % 4 {
            0 => v.sin(),
            1 => v.cos(),
            2 => -v.sin(),
            _ => -v.cos(),
        };
        2f64.powi(k as i32) * base
    };
    let mut errors = Vec::new();
    let mut ok = true;
    for eps in [0.5, 0.25, 0.125] {
        let c = taylor_remainder_check(f, df, 3.0, 8.0, eps, 1, 2001)?;
        ok &= c.passed;
        errors.push(c.max_error);
    }
    ok &= errors.windows(2).all(|w| w[0] >= 4.0 * w[1]);
    let shown: Vec<String> = errors.iter().map(|e| format!("{e:.3e}")).collect();
    Ok((ok, format!("sup errors [{}]", shown.join(", "))))
}

fn check_inherent(level: CheckLevel) -> Result<(bool, String)> {
    let cfg = InherentErrorConfig { eval_grid: 9, state_grid: 17, action_grid: 9, ..Default::default() };
    let env = ExactLinear::new(2, ExactLinear::default_thetas(2, 2)?, 0.1)?;
    let exact = inherent_error_estimate(&env, env.feature_map(), &cfg)?.estimate;
    let mut ok = exact <= 1e-6;
    let mut detail = format!("exact linear {exact:.3e}");
    if level == CheckLevel::Full {
        let env = UniformShift::new(0.5, RewardSpec::Default, 2, 0.1)?;
        let cfg = InherentErrorConfig { eval_grid: 33, state_grid: 33, action_grid: 17, ..Default::default() };
        let mut est = Vec::new();
        for eps in [0.5, 0.25] {
            let map = TaylorFeatureMap::new(Partition::new(2, eps)?, 0, false)?;
            est.push(inherent_error_estimate(&env, &map, &cfg)?.estimate);
        }
        ok &= est[1] < est[0];
        detail += &format!("; uniform shift ε=0.5 → {:.4}, ε=0.25 → {:.4}", est[0], est[1]);
    }
    Ok((ok, detail))
}

/// Runs the invariant checks and collects a report; failures are entries,
/// never errors.
pub fn check_suite(level: CheckLevel, opts: &CheckOptions) -> CheckReport {
    let (points, updates, seeds, episodes) = match level {
        CheckLevel::Quick => (2_000, 1_000, 20, 25),
        CheckLevel::Full => (10_000, 1_000, 50, 20),
    };
    let entries = vec![
        timed("partition", || check_partition(points, opts.seed)),
        timed("features", || check_features(points, opts.seed)),
        timed("regression", || check_regression(updates, opts.seed)),
        timed("optimism", || check_optimism(seeds, episodes, opts)),
        timed("taylor_remainder", check_taylor),
        timed("inherent_error", || check_inherent(level)),
    ];
    let passed = entries.iter().all(|e| e.passed);
    CheckReport { level, passed, entries }
}
