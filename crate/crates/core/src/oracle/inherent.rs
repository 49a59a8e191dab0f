use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dp::dp_solve;
use crate::envs::{linspace, product_grid, EnvironmentModel};
use crate::error::{Error, Result};
use crate::features::LocalFeatures;
use crate::regression::cholesky_inverse;
use crate::rng::{stream, Purpose};
use crate::scalar::dot;

/// Resolution and search settings for [`inherent_error_estimate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InherentErrorConfig {
    /// Points per axis of the state-action evaluation grid.
    pub eval_grid: usize,
    /// State grid of the quadrature for `E[max_a Q(s', a)]`.
    pub state_grid: usize,
    /// Action grid for the inner maximization.
    pub action_grid: usize,
    /// Per-coordinate radius of the box the next-step parameters are drawn from.
    pub theta_radius: f64,
    /// Per-coordinate radius of the box the fitted parameters may use. It
    /// must leave room for the reward plus the next-step level.
    pub fit_radius: f64,
    /// Levels per region used to enumerate next-step parameters.
    pub theta_levels: usize,
    /// Cap on enumerated next-step parameters; beyond it they are sampled.
    pub max_candidates: usize,
    pub seed: u64,
    /// Additional next-step parameter tables (flattened `N·d`) to include,
    /// e.g. parameters produced by a learner run.
    #[serde(default)]
    pub extra_candidates: Vec<Vec<f64>>,
}

impl Default for InherentErrorConfig {
    fn default() -> Self {
        Self {
            eval_grid: 33,
            state_grid: 65,
            action_grid: 33,
            theta_radius: 1.0,
            fit_radius: 4.0,
            theta_levels: 3,
            max_candidates: 81,
            seed: 0,
            extra_candidates: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub step: usize,
    pub z: Vec<f64>,
    /// Index of the next-step candidate attaining the step maximum.
    pub candidate: usize,
}

/// Grid estimate of the inherent Bellman error.
///
/// The sup over next-step parameters is taken over a finite candidate set, so
/// the estimate is a lower estimate of the true sup-inf quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InherentErrorReport {
    pub estimate: f64,
    pub witness: Witness,
    pub per_step: Vec<f64>,
    pub lower_estimate: bool,
}

/// Best uniform-norm fit of `targets` by `rows · θ` with `‖θ‖_∞ ≤ radius`.
///
/// Runs Lawson's iteratively reweighted least squares, and at every iterate
/// also re-centers the constant coordinate when the first feature is
/// constant. Returns the parameters and their max residual.
pub fn minimax_fit(rows: &[f64], targets: &[f64], d: usize, radius: f64) -> (Vec<f64>, f64) {
    let n = targets.len();
    if n == 0 {
        return (vec![0.0; d], 0.0);
    }
    let first = rows[0];
    let constant_first = first != 0.0 && (0..n).all(|i| rows[i * d] == first);
    let max_residual = |theta: &[f64]| -> (f64, f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let e = targets[i] - dot(&rows[i * d..(i + 1) * d], theta);
            lo = lo.min(e);
            hi = hi.max(e);
        }
        (lo.abs().max(hi.abs()), lo, hi)
    };
    let clamp = |theta: &mut Vec<f64>| theta.iter_mut().for_each(|t| *t = t.clamp(-radius, radius));

    let mut best = (vec![0.0; d], max_residual(&vec![0.0; d]).0);
    let consider = |mut theta: Vec<f64>, best: &mut (Vec<f64>, f64)| {
        clamp(&mut theta);
        let (err, lo, hi) = max_residual(&theta);
        if err < best.1 {
            *best = (theta.clone(), err);
        }
        if constant_first {
            theta[0] += 0.5 * (lo + hi) / first;
            clamp(&mut theta);
            let err = max_residual(&theta).0;
            if err < best.1 {
                *best = (theta, err);
            }
        }
    };

    let mut weights = vec![1.0 / n as f64; n];
    for _ in 0..200 {
        let mut gram = vec![0.0; d * d];
        let mut rhs = vec![0.0; d];
        for i in 0..n {
            let row = &rows[i * d..(i + 1) * d];
            for a in 0..d {
                rhs[a] += weights[i] * row[a] * targets[i];
                for b in 0..d {
                    gram[a * d + b] += weights[i] * row[a] * row[b];
                }
            }
        }
        let trace: f64 = (0..d).map(|a| gram[a * d + a]).sum();
        let jitter = 1e-13 * trace.max(1e-300);
        for a in 0..d {
            gram[a * d + a] += jitter;
        }
        let theta = match cholesky_inverse(&gram, d) {
            Some(inv) => inv.chunks_exact(d).map(|r| dot(r, &rhs)).collect(),
            None => vec![0.0; d],
        };
        let residuals: Vec<f64> =
            (0..n).map(|i| (targets[i] - dot(&rows[i * d..(i + 1) * d], &theta)).abs()).collect();
        consider(theta, &mut best);
        let total: f64 = weights.iter().zip(&residuals).map(|(w, r)| w * r).sum();
        if !(total > 1e-300) {
            break;
        }
        for (w, r) in weights.iter_mut().zip(&residuals) {
            *w = *w * r / total;
        }
    }
    best
}

/// Next-step parameter tables: piecewise constants on the partition (the
/// constant coordinate of each region set to a level in the box), plus any
/// caller-supplied tables.
fn candidates<F: LocalFeatures<f64> + ?Sized>(map: &F, cfg: &InherentErrorConfig) -> Vec<Vec<f64>> {
    let n = map.num_regions();
    let d = map.feature_dim();
    let levels = if cfg.theta_levels <= 1 {
        vec![0.0]
    } else {
        linspace(cfg.theta_levels).into_iter().map(|u| u * cfg.theta_radius).collect()
    };
    let mut out = vec![vec![0.0; n * d]];
    let full = (levels.len() as f64).powi(n as i32);
    if full <= cfg.max_candidates as f64 {
        let mut digits = vec![0usize; n];
        loop {
            let mut theta = vec![0.0; n * d];
            for (r, &i) in digits.iter().enumerate() {
                theta[r * d] = levels[i];
            }
            if theta.iter().any(|&x| x != 0.0) {
                out.push(theta);
            }
            let mut c = n;
            loop {
                if c == 0 {
                    return finish(out, cfg, n * d);
                }
                c -= 1;
                digits[c] += 1;
                if digits[c] < levels.len() {
                    break;
                }
                digits[c] = 0;
            }
        }
    }
    let mut rng = stream(cfg.seed, 0, 0, Purpose::Check);
    for _ in 0..cfg.max_candidates {
        let mut theta = vec![0.0; n * d];
        for r in 0..n {
            theta[r * d] = levels[rng.random_range(0..levels.len())];
        }
        out.push(theta);
    }
    finish(out, cfg, n * d)
}

fn finish(mut out: Vec<Vec<f64>>, cfg: &InherentErrorConfig, len: usize) -> Vec<Vec<f64>> {
    out.extend(cfg.extra_candidates.iter().filter(|t| t.len() == len).cloned());
    out
}

/// Grid estimate of `max_h sup_{θ'} inf_θ ‖Q_h[θ] − T_h Q_{h+1}[θ']‖_∞`.
///
/// The inner infimum decomposes over regions and is solved as a discrete
/// uniform-norm fit on the evaluation points of each region.
pub fn inherent_error_estimate<E, F>(env: &E, map: &F, cfg: &InherentErrorConfig) -> Result<InherentErrorReport>
where
    E: EnvironmentModel + ?Sized,
    F: LocalFeatures<f64> + Sync + ?Sized,
{
    if cfg.eval_grid < 2 || cfg.state_grid < 2 || cfg.action_grid < 2 {
        return Err(Error::ResolutionTooSmall("inherent error grids must have at least 2 points".into()));
    }
    for r in [cfg.theta_radius, cfg.fit_radius] {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::ConfigInvalid(format!("parameter box radius {r} must be finite and non-negative")));
        }
    }
    let ds = env.state_dim();
    let dz = ds + env.action_dim();
    if map.input_dim() != dz {
        return Err(Error::DimensionMismatch { expected: dz, got: map.input_dim() });
    }
    // reuse the DP grids for quadrature; the value tables themselves are unused
    let quad = dp_solve(env, cfg.state_grid, cfg.action_grid)?;
    let d = map.feature_dim();
    let n = map.num_regions();
    let eval = product_grid(cfg.eval_grid, dz);
    let mut rows_by_region: Vec<(Vec<f64>, Vec<usize>)> = vec![(Vec::new(), Vec::new()); n];
    for (idx, z) in eval.iter().enumerate() {
        let (region, phi) = map.features(z)?;
        rows_by_region[region.0].0.extend_from_slice(&phi);
        rows_by_region[region.0].1.push(idx);
    }
    let cands = candidates(map, cfg);

    let mut per_step = Vec::with_capacity(env.horizon());
    let mut witness = Witness { step: 1, z: eval[0].clone(), candidate: 0 };
    let mut estimate = f64::NEG_INFINITY;
    for h in 1..=env.horizon() {
        let step_cands: &[Vec<f64>] = if h == env.horizon() { &cands[..1] } else { &cands };
        let mut step_max = (f64::NEG_INFINITY, 0usize, 0usize);
        for (ci, theta) in step_cands.iter().enumerate() {
            // max_a' Q[θ'](s', a') on the quadrature states
            let next_max: Vec<f64> = quad
                .states()
                .iter()
                .map(|s| {
                    quad.actions()
                        .iter()
                        .map(|a| {
                            let z: Vec<f64> = s.iter().chain(a).copied().collect();
                            let (r, phi) = map.features(&z).expect("grid point inside the cube");
                            dot(&phi, &theta[r.0 * d..(r.0 + 1) * d])
                        })
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            let image: Vec<f64> = eval
                .iter()
                .map(|z| {
                    let (s, a) = z.split_at(ds);
                    env.reward_mean(h, s, a) + quad.expectation(env, h, s, a, &next_max)
                })
                .collect();
            for (rows, idx) in &rows_by_region {
                if idx.is_empty() {
                    continue;
                }
                let targets: Vec<f64> = idx.iter().map(|&i| image[i]).collect();
                let (theta_fit, err) = minimax_fit(rows, &targets, d, cfg.fit_radius);
                if err > step_max.0 {
                    let worst = idx
                        .iter()
                        .enumerate()
                        .map(|(k, &i)| (i, (targets[k] - dot(&rows[k * d..(k + 1) * d], &theta_fit)).abs()))
                        .fold((idx[0], f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
                    step_max = (err, worst.0, ci);
                }
            }
        }
        per_step.push(step_max.0);
        if step_max.0 > estimate {
            estimate = step_max.0;
            witness = Witness { step: h, z: eval[step_max.1].clone(), candidate: step_max.2 };
        }
    }
    Ok(InherentErrorReport { estimate, witness, per_step, lower_estimate: true })
}
