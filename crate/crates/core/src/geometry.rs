//! Regular ε-cover of the cube `[-1, 1]^d` and the region map ρ.
//!
//! The cube is cut into `m = ceil(1/ε)` cells per axis. Each cell is an
//! axis-aligned box of half-width `1/m ≤ ε` around its center, and cells are
//! enumerated in row-major order (first axis most significant). A point on a
//! shared face belongs to the cell with the smaller index, which reproduces the
//! "first covering set wins" construction of a sequential cover.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Index of a region inside a [`Partition`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RegionIndex(pub usize);

impl RegionIndex {
    pub fn value(self) -> usize {
        self.0
    }
}

/// Serialized form of a partition: the centers are always recomputed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    pub dim: usize,
    pub epsilon: f64,
    pub cells_per_axis: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition<T: Scalar> {
    dim: usize,
    epsilon: T,
    cells_per_axis: usize,
    axis_centers: Vec<T>,
    centers: Vec<Vec<T>>,
}

/// Number of cells per axis for a covering radius `epsilon`.
fn cells_for(epsilon: f64) -> usize {
    // guard against 1/ε landing a hair above an integer
    let raw = 1.0 / epsilon;
    let rounded = raw.round();
    if (raw - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        rounded as usize
    } else {
        raw.ceil() as usize
    }
}

impl<T: Scalar> Partition<T> {
    /// Builds the regular grid cover with `ceil(1/epsilon)` cells per axis.
    pub fn new(dim: usize, epsilon: T) -> Result<Self> {
        if dim < 1 {
            return Err(Error::DimensionZero);
        }
        let eps = epsilon.to_f64_lossy();
        if !eps.is_finite() || eps <= 0.0 || eps > 1.0 {
            return Err(Error::InvalidEpsilon(eps));
        }
        let m = cells_for(eps);
        let axis_centers: Vec<T> = (0..m)
            .map(|i| -T::one() + T::from_usize_lossy(2 * i + 1) / T::from_usize_lossy(m))
            .collect();
        let n = m.pow(dim as u32);
        let mut centers = Vec::with_capacity(n);
        let mut digits = vec![0usize; dim];
        for _ in 0..n {
            centers.push(digits.iter().map(|&i| axis_centers[i]).collect());
            for k in (0..dim).rev() {
                digits[k] += 1;
                if digits[k] < m {
                    break;
                }
                digits[k] = 0;
            }
        }
        Ok(Self { dim, epsilon, cells_per_axis: m, axis_centers, centers })
    }

    pub fn from_spec(spec: &PartitionSpec) -> Result<Self> {
        let p = Self::new(spec.dim, T::lit(spec.epsilon))?;
        if p.cells_per_axis != spec.cells_per_axis {
            return Err(Error::ConfigInvalid(format!(
                "cells_per_axis {} inconsistent with epsilon {} (expected {})",
                spec.cells_per_axis, spec.epsilon, p.cells_per_axis
            )));
        }
        Ok(p)
    }

    pub fn spec(&self) -> PartitionSpec {
        PartitionSpec {
            dim: self.dim,
            epsilon: self.epsilon.to_f64_lossy(),
            cells_per_axis: self.cells_per_axis,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    /// Half-width `1/m` of every cell, never larger than ε.
    pub fn effective_radius(&self) -> T {
        T::one() / T::from_usize_lossy(self.cells_per_axis)
    }

    /// Number of regions `N = m^d`.
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Vec<T>] {
        &self.centers
    }

    pub fn center(&self, region: RegionIndex) -> &[T] {
        &self.centers[region.0]
    }

    /// Region of `z`: the ∞-nearest center, ties going to the smallest
    /// row-major index.
    pub fn assign(&self, z: &[T]) -> Result<RegionIndex> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: z.len() });
        }
        let m = self.cells_per_axis;
        let half_m = T::from_usize_lossy(m) / T::lit(2.0);
        let mut index = 0usize;
        for (axis, &x) in z.iter().enumerate() {
            if !(x >= -T::one() && x <= T::one()) {
                return Err(Error::OutOfDomain { axis, value: x.to_f64_lossy() });
            }
            // cell i covers (-1 + 2i/m, -1 + 2(i+1)/m]; the left face goes to i-1
            let t = (x + T::one()) * half_m;
            let cell = t.ceil().to_usize().unwrap_or(0).saturating_sub(1).min(m - 1);
            index = index * m + cell;
        }
        Ok(RegionIndex(index))
    }

    /// Per-axis cell centers `-1 + (2i+1)/m`.
    pub fn axis_centers(&self) -> &[T] {
        &self.axis_centers
    }
}

/// ε schedule `min(1, K^{-1/(2d + 2ν)})` balancing approximation bias
/// against the number of regions.
pub fn auto_epsilon(episodes: usize, dim: usize, nu: f64) -> Result<f64> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::NonPositiveNu(nu));
    }
    if dim < 1 {
        return Err(Error::DimensionZero);
    }
    let k = episodes.max(1) as f64;
    let exponent = -1.0 / (2.0 * dim as f64 + 2.0 * nu);
    Ok(k.powf(exponent).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_dim_half() {
        let p = Partition::<f64>::new(1, 0.5).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.centers(), &[vec![-0.5], vec![0.5]]);
    }

    #[test]
    fn single_cell() {
        let p = Partition::<f64>::new(2, 1.0).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.centers()[0], vec![0.0, 0.0]);
        for z in [[-1.0, -1.0], [1.0, 1.0], [0.3, -0.7]] {
            assert_eq!(p.assign(&z).unwrap(), RegionIndex(0));
        }
    }

    #[test]
    fn non_dyadic_epsilon() {
        let p = Partition::<f64>::new(1, 0.4).unwrap();
        assert_eq!(p.cells_per_axis(), 3);
        let c: Vec<f64> = p.centers().iter().map(|c| c[0]).collect();
        assert_relative_eq!(c[0], -2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(c[1], 0.0, epsilon = 1e-15);
        assert_relative_eq!(c[2], 2.0 / 3.0, epsilon = 1e-15);
        assert!((p.len() as f64) <= (2.0f64 / 0.4).powi(1));
    }

    #[test]
    fn nearest_and_ties() {
        let p = Partition::<f64>::new(1, 0.5).unwrap();
        assert_eq!(p.assign(&[0.2]).unwrap(), RegionIndex(1));
        assert_eq!(p.assign(&[0.0]).unwrap(), RegionIndex(0));
        assert_eq!(p.assign(&[-1.0]).unwrap(), RegionIndex(0));
        assert_eq!(p.assign(&[1.0]).unwrap(), RegionIndex(1));
    }

    #[test]
    fn row_major_order() {
        let p = Partition::<f64>::new(2, 0.5).unwrap();
        assert_eq!(p.centers()[1], vec![-0.5, 0.5]);
        assert_eq!(p.assign(&[-0.5, 0.6]).unwrap(), RegionIndex(1));
        assert_eq!(p.assign(&[0.6, -0.5]).unwrap(), RegionIndex(2));
    }

    #[test]
    fn errors() {
        assert!(matches!(Partition::<f64>::new(1, 0.0), Err(Error::InvalidEpsilon(_))));
        assert!(matches!(Partition::<f64>::new(1, 1.5), Err(Error::InvalidEpsilon(_))));
        assert!(matches!(Partition::<f64>::new(0, 0.5), Err(Error::DimensionZero)));
        let p = Partition::<f64>::new(1, 0.5).unwrap();
        assert!(matches!(p.assign(&[1.01]), Err(Error::OutOfDomain { .. })));
        assert!(matches!(p.assign(&[f64::NAN]), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn auto_epsilon_values() {
        assert_relative_eq!(auto_epsilon(4096, 1, 1.0).unwrap(), 0.125, epsilon = 1e-14);
        assert_eq!(auto_epsilon(1, 3, 0.5).unwrap(), 1.0);
        assert_relative_eq!(auto_epsilon(65536, 2, 2.0).unwrap(), 0.25, epsilon = 1e-14);
        assert!(matches!(auto_epsilon(10, 1, 0.0), Err(Error::NonPositiveNu(_))));
    }

    #[test]
    fn f32_partition() {
        let p = Partition::<f32>::new(2, 0.25).unwrap();
        assert_eq!(p.len(), 16);
        assert_eq!(p.assign(&[0.0f32, 0.0]).unwrap(), RegionIndex(5));
    }

    #[test]
    fn spec_roundtrip() {
        let p = Partition::<f64>::new(3, 0.3).unwrap();
        let json = serde_json::to_string(&p.spec()).unwrap();
        assert!(!json.contains("centers"));
        let back: PartitionSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(Partition::<f64>::from_spec(&back).unwrap(), p);
    }
}
