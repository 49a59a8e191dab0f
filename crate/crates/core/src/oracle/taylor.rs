use serde::{Deserialize, Serialize};

use crate::envs::product_grid;
use crate::error::{Error, Result};
use crate::features::{nu_star, region_linear_value, TaylorFeatureMap};
use crate::geometry::Partition;

/// Result of comparing a function with its piecewise Taylor fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorCheck {
    pub degree: usize,
    pub epsilon: f64,
    pub max_error: f64,
    pub per_region: Vec<f64>,
    /// `L_ν · ε^ν`.
    pub bound: f64,
    pub passed: bool,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Fits `f` on every region of the ε-grid by its Taylor polynomial of degree
/// `ν*` at the region center (coefficients `D^α f(c) / α!`) and measures
/// the sup error on a `grid`-per-axis evaluation grid.
///
/// `deriv(c, α)` must return the partial derivative `D^α f` at `c`.
pub fn taylor_remainder_check<F, D>(
    f: F,
    deriv: D,
    nu: f64,
    l_nu: f64,
    epsilon: f64,
    dim: usize,
    grid: usize,
) -> Result<TaylorCheck>
where
    F: Fn(&[f64]) -> f64,
    D: Fn(&[f64], &[usize]) -> f64,
{
    if grid < 2 {
        return Err(Error::ResolutionTooSmall(format!("evaluation grid {grid} must be ≥ 2")));
    }
    let degree = nu_star(nu)?;
    let map = TaylorFeatureMap::new(Partition::new(dim, epsilon)?, degree, false)?;
    let thetas: Vec<Vec<f64>> = map
        .partition()
        .centers()
        .iter()
        .map(|c| {
            map.index_set()
                .iter()
                .map(|alpha| deriv(c, alpha) / alpha.iter().map(|&k| factorial(k)).product::<f64>())
                .collect()
        })
        .collect();
    let mut per_region = vec![0.0f64; map.partition().len()];
    for z in product_grid(grid, dim) {
        let region = map.partition().assign(&z)?;
        let err = (f(&z) - region_linear_value(&map, &thetas, &z)?).abs();
        per_region[region.0] = per_region[region.0].max(err);
    }
    let max_error = per_region.iter().copied().fold(0.0, f64::max);
    let bound = l_nu * epsilon.powf(nu);
    Ok(TaylorCheck { degree, epsilon, max_error, per_region, bound, passed: max_error <= bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sin2(x: &[f64]) -> f64 {
        (2.0 * x[0]).sin()
    }

    fn sin2_deriv(c: &[f64], alpha: &[usize]) -> f64 {
        let k = alpha[0] as i32;
        let phase = [f64::sin, f64::cos, |t: f64| -t.sin(), |t: f64| -t.cos()][(k % 4) as usize];
        2f64.powi(k) * phase(2.0 * c[0])
    }

    #[test]
    fn polynomial_reproduced() {
        // f = 1 + x - 2xy + y², degree 2
        let f = |z: &[f64]| 1.0 + z[0] - 2.0 * z[0] * z[1] + z[1] * z[1];
        let d = |c: &[f64], a: &[usize]| match (a[0], a[1]) {
            (0, 0) => f(c),
            (1, 0) => 1.0 - 2.0 * c[1],
            (0, 1) => -2.0 * c[0] + 2.0 * c[1],
            (1, 1) => -2.0,
            (0, 2) => 2.0,
            _ => 0.0,
        };
        let check = taylor_remainder_check(f, d, 3.0, 1.0, 0.25, 2, 41).unwrap();
        assert_eq!(check.degree, 2);
        assert!(check.max_error <= 1e-12, "{}", check.max_error);
    }

    #[test]
    fn sine_bound_and_rate() {
        let mut prev = None;
        for eps in [0.5, 0.25, 0.125] {
            let check = taylor_remainder_check(sin2, sin2_deriv, 3.0, 8.0, eps, 1, 4001).unwrap();
            assert!(check.passed, "eps {eps}: {} > {}", check.max_error, check.bound);
            if let Some(p) = prev {
                assert!(p >= 4.0 * check.max_error);
            }
            prev = Some(check.max_error);
        }
    }

    #[test]
    fn per_region_covers_partition() {
        let check = taylor_remainder_check(sin2, sin2_deriv, 3.0, 8.0, 0.25, 1, 101).unwrap();
        assert_eq!(check.per_region.len(), 4);
        assert_eq!(check.max_error, check.per_region.iter().copied().fold(0.0, f64::max));
    }
}
