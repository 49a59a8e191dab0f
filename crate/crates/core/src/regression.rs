//! Region-local ridge regression with an incrementally maintained inverse.

use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

/// Number of rank-one updates between full re-inversions of the design matrix.
pub const REFRESH_INTERVAL: usize = 512;

/// λ-regularized least squares state for one (step, region) pair.
///
/// `lam = λI + Σ φφᵀ` is kept together with its inverse; the inverse follows
/// rank-one Sherman–Morrison updates and is recomputed from scratch every
/// [`REFRESH_INTERVAL`] updates to bound round-off drift.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeState<T: Scalar> {
    dim: usize,
    lambda: T,
    lam: Vec<T>,
    lam_inv: Vec<T>,
    bvec: Vec<T>,
    count: usize,
    since_refresh: usize,
}

impl<T: Scalar> RidgeState<T> {
    pub fn new(dim: usize, lambda: T) -> Result<Self> {
        if dim < 1 {
            return Err(Error::DimensionZero);
        }
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::NonPositiveLambda(lambda.to_f64_lossy()));
        }
        let mut lam = vec![T::zero(); dim * dim];
        let mut lam_inv = vec![T::zero(); dim * dim];
        for i in 0..dim {
            lam[i * dim + i] = lambda;
            lam_inv[i * dim + i] = T::one() / lambda;
        }
        Ok(Self { dim, lambda, lam, lam_inv, bvec: vec![T::zero(); dim], count: 0, since_refresh: 0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// Number of absorbed samples `p`.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Row-major design matrix Λ.
    pub fn design(&self) -> &[T] {
        &self.lam
    }

    /// Row-major Λ⁻¹.
    pub fn design_inverse(&self) -> &[T] {
        &self.lam_inv
    }

    pub fn bvec(&self) -> &[T] {
        &self.bvec
    }

    fn check(&self, v: &[T]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(())
    }

    /// Adds `φφᵀ` to the design without touching the target accumulator.
    pub fn observe(&mut self, phi: &[T]) -> Result<()> {
        self.check(phi)?;
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                self.lam[i * d + j] += phi[i] * phi[j];
            }
        }
        let u = self.inv_apply(phi);
        let denom = T::one() + dot(phi, &u);
        for i in 0..d {
            for j in 0..d {
                self.lam_inv[i * d + j] -= u[i] * u[j] / denom;
            }
        }
        self.count += 1;
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_INTERVAL {
            self.refresh_inverse();
        }
        Ok(())
    }

    /// Absorbs one sample `(φ, target)`.
    pub fn update(&mut self, phi: &[T], target: T) -> Result<()> {
        if !target.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        self.observe(phi)?;
        for (b, &p) in self.bvec.iter_mut().zip(phi) {
            *b += p * target;
        }
        Ok(())
    }

    /// Recomputes Λ⁻¹ from Λ by Cholesky factorization.
    pub fn refresh_inverse(&mut self) {
        if let Some(inv) = cholesky_inverse(&self.lam, self.dim) {
            self.lam_inv = inv;
        }
        self.since_refresh = 0;
    }

    /// `Λ⁻¹ v`.
    pub fn inv_apply(&self, v: &[T]) -> Vec<T> {
        self.lam_inv.chunks_exact(self.dim).map(|row| dot(row, v)).collect()
    }

    /// Ridge estimate `θ̂ = Λ⁻¹ b` for the accumulated targets.
    pub fn theta_hat(&self) -> Vec<T> {
        self.inv_apply(&self.bvec)
    }

    /// Ridge estimate for an externally accumulated `b = Σ φ·target`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.inv_apply(b)
    }

    /// Dual norm `sqrt(φᵀ Λ⁻¹ φ)`, the width of the confidence band at φ.
    pub fn inv_norm(&self, phi: &[T]) -> T {
        let d = self.dim;
        let mut acc = T::zero();
        for i in 0..d {
            if phi[i] == T::zero() {
                continue;
            }
            let row = &self.lam_inv[i * d..(i + 1) * d];
            acc += phi[i] * dot(row, phi);
        }
        acc.max(T::zero()).sqrt()
    }

    /// Primal norm `sqrt(ξᵀ Λ ξ)`.
    pub fn norm(&self, xi: &[T]) -> T {
        let v: T = self.lam.chunks_exact(self.dim).zip(xi).map(|(row, &x)| x * dot(row, xi)).sum();
        v.max(T::zero()).sqrt()
    }

    /// Smallest eigenvalue of Λ (never below λ up to round-off).
    pub fn min_eigenvalue(&self) -> T {
        symmetric_eigenvalues(&self.lam, self.dim)
            .into_iter()
            .fold(T::infinity(), T::min)
    }
}

/// Inverse of a symmetric positive-definite row-major matrix.
pub fn cholesky_inverse<T: Scalar>(a: &[T], d: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if !(s > T::zero()) {
                    return None;
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    // invert L (lower triangular), then A⁻¹ = L⁻ᵀ L⁻¹
    let mut linv = vec![T::zero(); d * d];
    for i in 0..d {
        linv[i * d + i] = T::one() / l[i * d + i];
        for j in 0..i {
            let mut s = T::zero();
            for k in j..i {
                s += l[i * d + k] * linv[k * d + j];
            }
            linv[i * d + j] = -s / l[i * d + i];
        }
    }
    let mut inv = vec![T::zero(); d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = T::zero();
            for k in i..d {
                s += linv[k * d + i] * linv[k * d + j];
            }
            inv[i * d + j] = s;
            inv[j * d + i] = s;
        }
    }
    Some(inv)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues<T: Scalar>(a: &[T], d: usize) -> Vec<T> {
    let mut m = a.to_vec();
    let tol = T::epsilon() * T::lit(1e-2);
    for _sweep in 0..64 {
        let off: T = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * d + j] * m[i * d + j])
            .sum();
        let diag: T = (0..d).map(|i| m[i * d + i] * m[i * d + i]).sum();
        if off <= tol * diag || off == T::zero() {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = m[p * d + q];
                if apq == T::zero() {
                    continue;
                }
                let app = m[p * d + p];
                let aqq = m[q * d + q];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = m[k * d + p];
                    let akq = m[k * d + q];
                    m[k * d + p] = c * akp - s * akq;
                    m[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = m[p * d + k];
                    let aqk = m[q * d + k];
                    m[p * d + k] = c * apk - s * aqk;
                    m[q * d + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..d).map(|i| m[i * d + i]).collect()
}
