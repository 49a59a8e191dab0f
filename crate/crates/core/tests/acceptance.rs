//! Acceptance suite. Runs every criterion, prints one `ACCEPT <n> PASS|FAIL`
//! line per criterion with the measured quantities, and exits non-zero if
//! any criterion fails or overruns its time budget.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cinderella::cinderella::{LearnerConfig, PlannerKind};
use cinderella::envs::{EnvConfig, ExactLinear, RewardSpec, UniformShift};
use cinderella::features::{binomial, extend_features, LocalFeatures, TaylorFeatureMap};
use cinderella::geometry::Partition;
use cinderella::harness::{loglog_slope, optimism_rate, run_experiment, run_sweep, EpsilonSpec, RunConfig};
use cinderella::oracle::{inherent_error_estimate, taylor_remainder_check, InherentErrorConfig};
use cinderella::regression::RidgeState;

// Pinned tolerances and budgets.
const PARTITION_POINTS: usize = 10_000;
const INVERSE_TOL: f64 = 1e-8;
const RANK_ONE_UPDATES: usize = 1_000;
const EXTENSION_TOL: f64 = 1e-12;
const EXTENSION_QUERIES: usize = 10_000;
const OPTIMISM_TOL: f64 = 1e-6;
const OPTIMISM_RATE: f64 = 0.9;
const OPTIMISM_SEEDS: usize = 50;
const OPTIMISM_EPISODES: usize = 20;
const EXACT_LINEAR_TOL: f64 = 1e-6;
const TAYLOR_L3: f64 = 8.0;
const TAYLOR_HALVING_FACTOR: f64 = 4.0;
const SLOPE_MAX: f64 = 0.95;
const GAP_FRACTION: f64 = 0.5;
const REGRET_SEEDS: u64 = 5;
const COLLAPSE_RATIO: f64 = 0.2;

/// Counts `α ∈ ℕ^d` with `|α| ≤ k` by scanning the box `[0, k]^d`.
fn brute_count(d: usize, k: usize) -> usize {
    let mut count = 0;
    let mut digits = vec![0usize; d];
    loop {
        if digits.iter().sum::<usize>() <= k {
            count += 1;
        }
        let mut c = 0;
        loop {
            if c == d {
                return count;
            }
            digits[c] += 1;
            if digits[c] <= k {
                break;
            }
            digits[c] = 0;
            c += 1;
        }
    }
}

fn accept_01_combinatorics() -> (bool, String) {
    let mut bad = Vec::new();
    for d in 1..=4 {
        for k in 0..=5 {
            let map = TaylorFeatureMap::new(Partition::<f64>::new(d, 1.0).unwrap(), k, false).unwrap();
            let expect = brute_count(d, k);
            if map.feature_dim() != expect || binomial((k + d) as u64, k as u64) as usize != expect {
                bad.push((d, k, map.feature_dim(), expect));
            }
        }
    }
    (bad.is_empty(), format!("24 (d, ν*) pairs, mismatches {bad:?}"))
}

fn accept_02_partition() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_ratio: f64 = 0.0;
    let mut failures = 0;
    let mut size_ok = true;
    for d in 1..=3 {
        for eps in [1.0, 0.5, 0.25] {
            let p = Partition::<f64>::new(d, eps).unwrap();
            size_ok &= p.len() as f64 <= (2.0 / eps).powi(d as i32);
            for _ in 0..PARTITION_POINTS {
                let z: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
                let r = p.assign(&z).unwrap();
                let dist = |c: &[f64]| z.iter().zip(c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let mine = dist(p.center(r));
                let nearest = p.centers().iter().map(|c| dist(c)).fold(f64::INFINITY, f64::min);
                worst_ratio = worst_ratio.max(mine / eps);
                if r.0 >= p.len() || mine > eps || mine > nearest + 1e-15 {
                    failures += 1;
                }
            }
        }
    }
    let passed = failures == 0 && size_ok;
    let detail = format!("9 grids × {PARTITION_POINTS} points, failures {failures}, max dist/ε {worst_ratio:.4}, N ≤ (2/ε)^d: {size_ok}");
    (passed, detail)
}

fn accept_03_taylor_remainder() -> (bool, String) {
    let f = |x: &[f64]| (2.0 * x[0]).sin();
    let deriv = |c: &[f64], a: &[usize]| {
        let t = 2.0 * c[0];
        let v = [t.sin(), t.cos(), -t.sin(), -t.cos()][a[0] % 4];
        2f64.powi(a[0] as i32) * v
    };
    let grid = 8001;
    let mut errors = Vec::new();
    let mut passed = true;
    for eps in [0.5, 0.25, 0.125] {
        let check = taylor_remainder_check(f, deriv, 3.0, TAYLOR_L3, eps, 1, grid).unwrap();
        // independent scalar evaluation of the quadratic Taylor fit
        let m = (1.0f64 / eps).ceil() as usize;
        let mut direct: f64 = 0.0;
        for i in 0..grid {
            let x = -1.0 + 2.0 * i as f64 / (grid - 1) as f64;
            let cell = (((x + 1.0) * m as f64 / 2.0).ceil() as usize).clamp(1, m) - 1;
            let c = -1.0 + (2 * cell + 1) as f64 / m as f64;
            let u = x - c;
            let t = (2.0 * c).sin() + 2.0 * (2.0 * c).cos() * u - 2.0 * (2.0 * c).sin() * u * u;
            direct = direct.max((f(&[x]) - t).abs());
        }
        passed &= check.max_error <= TAYLOR_L3 * eps.powi(3) && (check.max_error - direct).abs() <= 1e-12;
        errors.push(check.max_error);
    }
    passed &= errors.windows(2).all(|w| w[0] >= TAYLOR_HALVING_FACTOR * w[1]);
    let detail = format!(
        "sup errors {:.4e} / {:.4e} / {:.4e} vs bounds 1.0 / 0.125 / 0.015625, ratios {:.2} / {:.2}",
        errors[0],
        errors[1],
        errors[2],
        errors[0] / errors[1],
        errors[1] / errors[2]
    );
    (passed, detail)
}

fn accept_04_incremental_inverse() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for d in [1, 2, 4, 8, 16] {
        let mut state = RidgeState::<f64>::new(d, 1.0).unwrap();
        for _ in 0..RANK_ONE_UPDATES {
            let phi: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            state.update(&phi, rng.random_range(-1.0..1.0)).unwrap();
        }
        let direct = DMatrix::from_row_slice(d, d, state.design()).try_inverse().unwrap();
        let inc = DMatrix::from_row_slice(d, d, state.design_inverse());
        worst = worst.max((direct - inc).abs().max());
    }
    let detail = format!("max-entry diff {worst:.3e} after {RANK_ONE_UPDATES} updates, d ∈ {{1,2,4,8,16}}");
    (worst <= INVERSE_TOL, detail)
}

fn accept_05_extension_equivalence() -> (bool, String) {
    let map = TaylorFeatureMap::new(Partition::<f64>::new(2, 0.25).unwrap(), 2, false).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let thetas: Vec<Vec<f64>> =
        (0..map.num_regions()).map(|_| (0..map.feature_dim()).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let stacked = thetas.concat();
    let mut worst: f64 = 0.0;
    for _ in 0..EXTENSION_QUERIES {
        let z = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
        let r = map.partition().assign(&z).unwrap();
        let c = map.partition().center(r);
        // region-wise value from explicit monomials
        let regionwise: f64 = map
            .index_set()
            .iter()
            .zip(&thetas[r.0])
            .map(|(a, t)| t * (z[0] - c[0]).powi(a[0] as i32) * (z[1] - c[1]).powi(a[1] as i32))
            .sum();
        let extended: f64 = extend_features(&map, &z).unwrap().iter().zip(&stacked).map(|(a, b)| a * b).sum();
        worst = worst.max((regionwise - extended).abs());
    }
    let detail = format!("{EXTENSION_QUERIES} queries, N = {}, d = {}, max diff {worst:.3e}", map.num_regions(), map.feature_dim());
    (worst <= EXTENSION_TOL, detail)
}

fn accept_06_optimism() -> (bool, String) {
    let config = LearnerConfig { delta: 0.1, bonus_scale: 1.0, planner: PlannerKind::ExactGrid, ..Default::default() };
    let rep = optimism_rate(&config, OPTIMISM_SEEDS, OPTIMISM_EPISODES, 6, OPTIMISM_TOL).unwrap();
    // the bandit pays a constant mean reward of 1/2
    let passed = rep.rate >= OPTIMISM_RATE && (rep.v_star - 0.5).abs() < 1e-12;
    let detail = format!(
        "{}/{} pairs optimistic (rate {:.3}), V* = {}, worst V̄ − V* {:.3e}",
        rep.optimistic, rep.pairs, rep.rate, rep.v_star, rep.worst_gap
    );
    (passed, detail)
}

fn accept_07_inherent_error() -> (bool, String) {
    let env = UniformShift::new(0.5, RewardSpec::Default, 2, 0.1).unwrap();
    let cfg = InherentErrorConfig { eval_grid: 65, state_grid: 65, action_grid: 33, ..Default::default() };
    let mut est = Vec::new();
    for eps in [0.5, 0.25] {
        let map = TaylorFeatureMap::new(Partition::new(2, eps).unwrap(), 0, false).unwrap();
        est.push(inherent_error_estimate(&env, &map, &cfg).unwrap().estimate);
    }
    let lin = ExactLinear::new(2, ExactLinear::default_thetas(2, 2).unwrap(), 0.1).unwrap();
    let exact = inherent_error_estimate(&lin, lin.feature_map(), &cfg).unwrap().estimate;
    let passed = est[1] < est[0] && exact <= EXACT_LINEAR_TOL;
    let detail = format!("uniform shift Î(ε=0.5) = {:.5}, Î(ε=0.25) = {:.5}; exact linear Î = {exact:.3e}", est[0], est[1]);
    (passed, detail)
}

fn accept_08_regret_sublinear() -> (bool, String) {
    let env = EnvConfig::UniformShift { beta: 0.5, reward: RewardSpec::Default, reward_sigma: 0.1 };
    let configs: Vec<RunConfig> = (0..REGRET_SEEDS)
        .map(|seed| {
            let mut c = RunConfig::new(env.clone(), 4096, 2);
            c.planner = PlannerKind::Relaxation;
            c.bonus_scale = 0.1;
            c.seed = seed;
            c
        })
        .collect();
    let traces = run_sweep(&configs, 0).unwrap();
    let k = traces[0].rows.len();
    let mean_cum: Vec<f64> = (0..k)
        .map(|i| traces.iter().map(|t| t.rows[i].cum_regret).sum::<f64>() / traces.len() as f64)
        .collect();
    let slope = loglog_slope(&mean_cum).unwrap_or(f64::INFINITY);
    let avg = mean_cum[k - 1] / k as f64;
    let gap = traces[0].meta.uniform_policy_gap;
    let passed = slope < SLOPE_MAX && avg <= GAP_FRACTION * gap;
    let detail = format!(
        "ε = {}, N = {}, slope {slope:.4}, R_K/K = {avg:.4}, uniform-policy gap {gap:.4}",
        traces[0].meta.epsilon, traces[0].meta.regions
    );
    (passed, detail)
}

fn accept_09_sanity_collapse() -> (bool, String) {
    let mut cfg = RunConfig::new(EnvConfig::ExactLinear { degree: 2, theta: None, reward_sigma: 0.1 }, 2000, 2);
    cfg.epsilon = EpsilonSpec::Value(1.0);
    let trace = run_experiment(&cfg).unwrap();
    let q = trace.rows.len() / 4;
    let regrets = trace.regrets();
    let first = regrets[..q].iter().sum::<f64>() / q as f64;
    let last = regrets[regrets.len() - q..].iter().sum::<f64>() / q as f64;
    let detail = format!("first-quartile {first:.4}, last-quartile {last:.4}, ratio {:.3}", last / first);
    (last <= COLLAPSE_RATIO * first, detail)
}

fn accept_10_determinism() -> (bool, String) {
    let mut cfg = RunConfig::new(EnvConfig::UniformShift { beta: 0.5, reward: RewardSpec::Default, reward_sigma: 0.1 }, 200, 2);
    cfg.seed = 10;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut stripped = Vec::new();
    for dir in &dirs {
        run_experiment(&cfg).unwrap().write_to(dir.path(), "run").unwrap();
        let csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
        stripped.push(csv.lines().map(|l| l.rsplit_once(',').unwrap().0.to_owned() + "\n").collect::<String>());
    }
    let metas: Vec<String> =
        dirs.iter().map(|d| std::fs::read_to_string(d.path().join("run.json")).unwrap()).collect();
    let passed = stripped[0] == stripped[1] && metas[0] == metas[1] && stripped[0].lines().count() == 201;
    let detail = format!("{} CSV bytes without timing, identical: {}", stripped[0].len(), stripped[0] == stripped[1]);
    (passed, detail)
}

type Criterion = fn() -> (bool, String);

const CRITERIA: [(u32, &str, Criterion, u64); 10] = [
    (1, "combinatorics", accept_01_combinatorics, 1),
    (2, "partition soundness", accept_02_partition, 5),
    (3, "taylor remainder", accept_03_taylor_remainder, 5),
    (4, "incremental inverse", accept_04_incremental_inverse, 10),
    (5, "feature extension", accept_05_extension_equivalence, 5),
    (6, "optimism", accept_06_optimism, 120),
    (7, "inherent error scaling", accept_07_inherent_error, 120),
    (8, "regret sublinearity", accept_08_regret_sublinear, 600),
    (9, "sanity collapse", accept_09_sanity_collapse, 300),
    (10, "determinism", accept_10_determinism, 60),
];

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (n, name, run, budget) in CRITERIA {
        let key = format!("accept_{n:02}");
        if !filter.is_empty() && !filter.iter().any(|f| key.contains(f.as_str()) || name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let (passed, detail) = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            (false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let budget = Duration::from_secs(budget);
        let ok = passed && elapsed <= budget;
        if !ok {
            failed += 1;
        }
        println!(
            "ACCEPT {n:>2} {} {name}: {detail} [{:.2}s / {}s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
