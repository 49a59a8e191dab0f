//! Exhaustive ε-grid solver for the joint optimistic program.
//!
//! For every (step, region) block the perturbation `ξ` ranges over a
//! `g`-point-per-coordinate grid of the box `‖ξ‖_∞ ≤ √α / sqrt(λ_min(Λ))`,
//! which contains the ellipsoid `‖ξ‖_Λ ≤ √α`. Each feasible joint choice is
//! scored by a full backward sweep, and the one maximizing the optimistic
//! value at `s1` wins.

use serde::{Deserialize, Serialize};

use super::learner::Cinderella;
use crate::envs::linspace;
use crate::error::{Error, Result};
use crate::features::LocalFeatures;
use crate::scalar::dot;

/// Largest `Σ_h N·d_h` the exhaustive solver accepts.
pub const MAX_EXACT_PARAMETERS: usize = 6;
/// Largest number of grid points per coordinate.
pub const MAX_EXACT_GRID: usize = 5;

const FEASIBILITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaEntry {
    pub theta_hat: Vec<f64>,
    pub theta_bar: Vec<f64>,
    /// `‖θ̄ - θ̂‖_Λ`.
    pub xi_norm: f64,
    /// Radius `√α` the perturbation had to respect.
    pub alpha: f64,
}

/// Optimistic parameters for every (step, region) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaTable {
    horizon: usize,
    regions: usize,
    entries: Vec<ThetaEntry>,
    /// Unclipped objective `max_a φ₁(s1, a)ᵀθ̄₁`.
    pub objective: f64,
    pub candidates: usize,
    pub feasible: usize,
}

impl ThetaTable {
    pub fn entry(&self, h: usize, region: usize) -> &ThetaEntry {
        &self.entries[(h - 1) * self.regions + region]
    }

    pub fn entries(&self) -> &[ThetaEntry] {
        &self.entries
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn regions(&self) -> usize {
        self.regions
    }
}

/// Runs the backward sweep for a fixed joint perturbation `xi` (flattened
/// per slot). Returns `(θ̂, θ̄)` per slot.
pub(crate) fn sweep_with_xi(learner: &Cinderella, xi: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let h_total = learner.horizon();
    let n = learner.regions();
    let d = learner.feature_dim();
    let ds = learner.state_dim();
    let clip = learner.config().target_clip;
    let map = learner.feature_map();
    let mut theta_hat = vec![vec![0.0; d]; h_total * n];
    let mut theta_bar = vec![vec![0.0; d]; h_total * n];
    let mut z = Vec::with_capacity(map.input_dim());
    let mut phi = vec![0.0; d];
    for h in (1..=h_total).rev() {
        for region in 0..n {
            let slot = learner.slot(h, region);
            let hist = &learner.history[slot];
            let mut b = vec![0.0; d];
            for t in 0..hist.len() {
                let v_next = if h < h_total {
                    let next = &hist.next_states[t * ds..(t + 1) * ds];
                    let mut best = f64::NEG_INFINITY;
                    for a in learner.action_grid() {
                        learner.join(next, a, &mut z);
                        let r = map.features_into(&z, &mut phi).expect("grid point inside the cube");
                        let q = dot(&phi, &theta_bar[learner.slot(h + 1, r.0)]).clamp(0.0, 1.0);
                        best = best.max(q);
                    }
                    best
                } else {
                    0.0
                };
                let target = (hist.rewards[t] + v_next).clamp(clip.lo, clip.hi);
                for (bi, &p) in b.iter_mut().zip(&hist.phis[t * d..(t + 1) * d]) {
                    *bi += p * target;
                }
            }
            let th = learner.ridge[slot].solve(&b);
            theta_bar[slot] = th.iter().zip(&xi[slot * d..(slot + 1) * d]).map(|(a, b)| a + b).collect();
            theta_hat[slot] = th;
        }
    }
    (theta_hat, theta_bar)
}

fn objective(learner: &Cinderella, theta_bar: &[Vec<f64>], s1: &[f64]) -> f64 {
    let map = learner.feature_map();
    let mut z = Vec::with_capacity(map.input_dim());
    let mut phi = vec![0.0; learner.feature_dim()];
    learner
        .action_grid()
        .iter()
        .map(|a| {
            learner.join(s1, a, &mut z);
            let r = map.features_into(&z, &mut phi).expect("grid point inside the cube");
            dot(&phi, &theta_bar[learner.slot(1, r.0)])
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn solve_exact_grid(learner: &Cinderella, s1: &[f64], g: usize) -> Result<ThetaTable> {
    let n = learner.regions();
    let d = learner.feature_dim();
    let slots = learner.horizon() * n;
    let total = slots * d;
    if total > MAX_EXACT_PARAMETERS || g > MAX_EXACT_GRID || g == 0 {
        return Err(Error::InstanceTooLarge(format!(
            "Σ N·d = {total} (max {MAX_EXACT_PARAMETERS}), grid {g} (allowed 1..={MAX_EXACT_GRID})"
        )));
    }
    let radii: Vec<f64> = (0..slots).map(|s| learner.alpha[s].max(0.0)).collect();
    let axes: Vec<Vec<f64>> = (0..slots)
        .map(|s| {
            let box_r = radii[s] / learner.ridge[s].min_eigenvalue().sqrt();
            if g == 1 { vec![0.0] } else { linspace(g).into_iter().map(|u| u * box_r).collect() }
        })
        .collect();

    let feasible = |xi: &[f64]| {
        (0..slots).all(|s| learner.ridge[s].norm(&xi[s * d..(s + 1) * d]) <= radii[s] + FEASIBILITY_SLACK)
    };

    // ξ = 0 first, so that ties keep the plain ridge solution
    let zero = vec![0.0; total];
    let (th0, tb0) = sweep_with_xi(learner, &zero);
    let mut best = (objective(learner, &tb0, s1), zero, th0, tb0);
    let mut candidates = 1;
    let mut n_feasible = 1;

    let mut digits = vec![0usize; total];
    let mut xi = vec![0.0; total];
    'outer: loop {
        for (c, &i) in digits.iter().enumerate() {
            xi[c] = axes[c / d][i];
        }
        candidates += 1;
        if feasible(&xi) {
            n_feasible += 1;
            let (th, tb) = sweep_with_xi(learner, &xi);
            let value = objective(learner, &tb, s1);
            if value > best.0 {
                best = (value, xi.clone(), th, tb);
            }
        }
        for c in (0..total).rev() {
            digits[c] += 1;
            if digits[c] < g {
                continue 'outer;
            }
            digits[c] = 0;
        }
        break;
    }

    let (value, xi, theta_hat, theta_bar) = best;
    let entries = (0..slots)
        .map(|s| ThetaEntry {
            xi_norm: learner.ridge[s].norm(&xi[s * d..(s + 1) * d]),
            theta_hat: theta_hat[s].clone(),
            theta_bar: theta_bar[s].clone(),
            alpha: radii[s],
        })
        .collect();
    Ok(ThetaTable { horizon: learner.horizon(), regions: n, entries, objective: value, candidates, feasible: n_feasible })
}

impl Cinderella {
    /// Exhaustive grid solution of the joint program from `s1` with `g`
    /// points per perturbation coordinate, using the radii of the upcoming
    /// episode.
    pub fn solve_exact_grid(&mut self, s1: &[f64], g: usize) -> Result<ThetaTable> {
        let k = self.episodes_completed() + 1;
        self.refresh_alphas(k);
        solve_exact_grid(self, s1, g)
    }

    /// Largest violation of the program constraints by `table`. `θ̂` must be
    /// the ridge fit of its own targets, and `ξ = θ̄ − θ̂` must satisfy
    /// `‖ξ‖_Λ ≤ √α`.
    pub fn program_violation(&self, table: &ThetaTable) -> f64 {
        let d = self.feature_dim();
        let slots = self.horizon() * self.regions();
        let mut xi = vec![0.0; slots * d];
        for s in 0..slots {
            let e = &table.entries()[s];
            for c in 0..d {
                xi[s * d + c] = e.theta_bar[c] - e.theta_hat[c];
            }
        }
        let (theta_hat, theta_bar) = sweep_with_xi(self, &xi);
        let mut worst: f64 = 0.0;
        for s in 0..slots {
            let e = &table.entries()[s];
            for c in 0..d {
                worst = worst.max((theta_hat[s][c] - e.theta_hat[c]).abs());
                worst = worst.max((theta_bar[s][c] - e.theta_bar[c]).abs());
            }
            let norm = self.ridge[s].norm(&xi[s * d..(s + 1) * d]);
            worst = worst.max((norm - e.xi_norm).abs());
            worst = worst.max(norm - e.alpha.max(0.0));
        }
        worst
    }
}
