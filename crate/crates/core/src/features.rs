//! Piecewise Taylor feature maps.
//!
//! Inside region `n` with center `c`, the feature vector lists the monomials
//! `(z - c)^α` for every multi-index with `|α| ≤ ν*`. A region-wise linear
//! function `φ(z)ᵀθ_{ρ(z)}` is then a piecewise polynomial of degree `ν*`.

use crate::error::{Error, Result};
use crate::geometry::{Partition, RegionIndex};
use crate::scalar::Scalar;

/// Multi-indices of total degree at most `degree` in `dim` variables.
///
/// Ordered by total degree, then lexicographically descending inside a degree,
/// so the zero index comes first and `(1,0,..)` precedes `(0,1,..)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndexSet {
    dim: usize,
    degree: usize,
    indices: Vec<Vec<usize>>,
}

fn push_compositions(dim: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() + 1 == dim {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        push_compositions(dim, total - first, prefix, out);
        prefix.pop();
    }
}

impl MultiIndexSet {
    pub fn new(dim: usize, degree: usize) -> Result<Self> {
        if dim < 1 {
            return Err(Error::DimensionZero);
        }
        let mut indices = Vec::new();
        let mut prefix = Vec::with_capacity(dim);
        for total in 0..=degree {
            push_compositions(dim, total, &mut prefix, &mut indices);
        }
        Ok(Self { dim, degree, indices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.indices.iter().map(Vec::as_slice)
    }
}

/// `binomial(n, k)` in exact integer arithmetic.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Polynomial degree `ν* = ceil(ν - 1)` used for a `ν`-smooth target.
pub fn nu_star(nu: f64) -> Result<usize> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::NonPositiveNu(nu));
    }
    Ok((nu - 1.0).ceil().max(0.0) as usize)
}

/// A feature map that is linear inside each region of a finite partition.
pub trait LocalFeatures<T: Scalar> {
    fn input_dim(&self) -> usize;
    fn feature_dim(&self) -> usize;
    fn num_regions(&self) -> usize;
    /// Writes φ(z) into `out` (length `feature_dim`) and returns ρ(z).
    fn features_into(&self, z: &[T], out: &mut [T]) -> Result<RegionIndex>;

    fn features(&self, z: &[T]) -> Result<(RegionIndex, Vec<T>)> {
        let mut out = vec![T::zero(); self.feature_dim()];
        let region = self.features_into(z, &mut out)?;
        Ok((region, out))
    }
}

#[derive(Debug, Clone)]
pub struct TaylorFeatureMap<T: Scalar> {
    partition: Partition<T>,
    index_set: MultiIndexSet,
    normalize: bool,
}

impl<T: Scalar> TaylorFeatureMap<T> {
    pub fn new(partition: Partition<T>, degree: usize, normalize: bool) -> Result<Self> {
        let index_set = MultiIndexSet::new(partition.dim(), degree)?;
        Ok(Self { partition, index_set, normalize })
    }

    pub fn partition(&self) -> &Partition<T> {
        &self.partition
    }

    pub fn index_set(&self) -> &MultiIndexSet {
        &self.index_set
    }

    pub fn degree(&self) -> usize {
        self.index_set.degree()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalize
    }

    /// Worst-case Euclidean norm `1 + 2·sqrt(d_ν*)` of the raw map.
    pub fn raw_norm_bound(&self) -> T {
        T::one() + T::lit(2.0) * T::from_usize_lossy(self.index_set.len()).sqrt()
    }

    /// Norm bound of the map as configured (1 when normalized).
    pub fn norm_bound(&self) -> T {
        if self.normalize {
            T::one()
        } else {
            self.raw_norm_bound()
        }
    }

    /// Monomials `(z - c)^α` around an explicit center, without region lookup.
    pub fn monomials_into(&self, z: &[T], center: &[T], out: &mut [T]) {
        let d = self.partition.dim();
        let deg = self.index_set.degree();
        let mut powers = vec![T::one(); d * (deg + 1)];
        for axis in 0..d {
            let delta = z[axis] - center[axis];
            for p in 1..=deg {
                powers[axis * (deg + 1) + p] = powers[axis * (deg + 1) + p - 1] * delta;
            }
        }
        for (slot, alpha) in out.iter_mut().zip(self.index_set.iter()) {
            *slot = alpha
                .iter()
                .enumerate()
                .fold(T::one(), |acc, (axis, &e)| acc * powers[axis * (deg + 1) + e]);
        }
        if self.normalize {
            let scale = self.raw_norm_bound();
            out.iter_mut().for_each(|v| *v /= scale);
        }
    }
}

impl<T: Scalar> LocalFeatures<T> for TaylorFeatureMap<T> {
    fn input_dim(&self) -> usize {
        self.partition.dim()
    }

    fn feature_dim(&self) -> usize {
        self.index_set.len()
    }

    fn num_regions(&self) -> usize {
        self.partition.len()
    }

    fn features_into(&self, z: &[T], out: &mut [T]) -> Result<RegionIndex> {
        let region = self.partition.assign(z)?;
        self.monomials_into(z, self.partition.center(region), out);
        Ok(region)
    }
}

/// Block feature vector of length `N·d`: block `ρ(z)` holds φ(z), all
/// others are zero. Any region-wise linear function is a single linear
/// function of this lifted map.
pub fn extend_features<T: Scalar, F: LocalFeatures<T> + ?Sized>(map: &F, z: &[T]) -> Result<Vec<T>> {
    let d = map.feature_dim();
    let mut out = vec![T::zero(); d * map.num_regions()];
    let mut block = vec![T::zero(); d];
    let region = map.features_into(z, &mut block)?;
    out[region.0 * d..(region.0 + 1) * d].copy_from_slice(&block);
    Ok(out)
}

/// Evaluates `φ(z)ᵀθ_{ρ(z)}` for a table of per-region parameters.
pub fn region_linear_value<T: Scalar, F: LocalFeatures<T> + ?Sized>(
    map: &F,
    thetas: &[Vec<T>],
    z: &[T],
) -> Result<T> {
    let (region, phi) = map.features(z)?;
    Ok(crate::scalar::dot(&phi, &thetas[region.0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_dim_degree_two() {
        let s = MultiIndexSet::new(2, 2).unwrap();
        let expected: Vec<Vec<usize>> =
            vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2]];
        assert_eq!(s.indices(), expected.as_slice());
    }

    #[test]
    fn small_sets() {
        assert_eq!(MultiIndexSet::new(3, 0).unwrap().indices(), &[vec![0, 0, 0]]);
        assert_eq!(MultiIndexSet::new(1, 4).unwrap().len(), 5);
        assert!(MultiIndexSet::new(0, 2).is_err());
    }

    #[test]
    fn nu_star_values() {
        assert_eq!(nu_star(1.0).unwrap(), 0);
        assert_eq!(nu_star(2.5).unwrap(), 2);
        assert_eq!(nu_star(3.0).unwrap(), 2);
        assert_eq!(nu_star(0.5).unwrap(), 0);
        assert!(matches!(nu_star(0.0), Err(Error::NonPositiveNu(_))));
        assert!(matches!(nu_star(-1.0), Err(Error::NonPositiveNu(_))));
    }

    #[test]
    fn center_gives_unit_vector() {
        let p = Partition::<f64>::new(2, 0.5).unwrap();
        let map = TaylorFeatureMap::new(p.clone(), 2, false).unwrap();
        for c in p.centers() {
            let (_, phi) = map.features(c).unwrap();
            assert_eq!(phi, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn monomials_one_dim() {
        let map = TaylorFeatureMap::new(Partition::<f64>::new(1, 1.0).unwrap(), 2, false).unwrap();
        let (_, phi) = map.features(&[0.5]).unwrap();
        assert_eq!(phi, vec![1.0, 0.5, 0.25]);
    }

    #[test]
    fn monomials_two_dim() {
        let map = TaylorFeatureMap::new(Partition::<f64>::new(2, 1.0).unwrap(), 1, false).unwrap();
        let (_, phi) = map.features(&[0.1, 0.2]).unwrap();
        assert_eq!(phi, vec![1.0, 0.1, 0.2]);
    }

    #[test]
    fn normalized_map() {
        let map = TaylorFeatureMap::new(Partition::<f64>::new(1, 1.0).unwrap(), 2, true).unwrap();
        let (_, phi) = map.features(&[0.0]).unwrap();
        assert_relative_eq!(phi[0], 1.0 / (1.0 + 2.0 * 3f64.sqrt()), epsilon = 1e-15);
    }

    #[test]
    fn extension_blocks() {
        let map = TaylorFeatureMap::new(Partition::<f64>::new(1, 1.0).unwrap(), 2, false).unwrap();
        assert_eq!(extend_features(&map, &[0.3]).unwrap(), map.features(&[0.3]).unwrap().1);

        let map = TaylorFeatureMap::new(Partition::<f64>::new(1, 0.5).unwrap(), 1, false).unwrap();
        let ext = extend_features(&map, &[0.7]).unwrap();
        assert_eq!(ext.len(), 4);
        assert_eq!(&ext[..2], &[0.0, 0.0]);
        assert_relative_eq!(ext[2], 1.0);
        assert_relative_eq!(ext[3], 0.2, epsilon = 1e-15);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(9, 5), 126);
        assert_eq!(binomial(5, 0), 1);
    }
}
