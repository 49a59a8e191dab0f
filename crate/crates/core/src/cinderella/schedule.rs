use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constants behind the confidence radii `√β` and `√α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BonusSchedule {
    pub delta: f64,
    pub lambda: f64,
    /// Bound on `‖φ(z)‖₂`.
    pub l_phi: f64,
    /// Radius of the per-region parameter set.
    pub r_max: f64,
    pub regions: usize,
    pub feature_dim: usize,
    pub episodes: usize,
    pub horizon: usize,
    /// User-supplied bound on the inherent Bellman error.
    pub inherent_bound: f64,
    /// Multiplier `c_β` on the whole `√β` radius.
    pub bonus_scale: f64,
}

impl BonusSchedule {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::ConfigInvalid(msg));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta {} must lie in (0, 1)", self.delta));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::NonPositiveLambda(self.lambda));
        }
        if !(self.l_phi > 0.0) || !self.l_phi.is_finite() {
            return fail(format!("feature norm bound {} must be positive", self.l_phi));
        }
        if !(self.r_max >= 0.0) || !self.r_max.is_finite() {
            return fail(format!("parameter radius {} must be non-negative", self.r_max));
        }
        if self.regions == 0 || self.feature_dim == 0 || self.episodes == 0 || self.horizon == 0 {
            return fail("regions, feature_dim, episodes and horizon must be positive".into());
        }
        if !(self.inherent_bound >= 0.0) || !self.inherent_bound.is_finite() {
            return fail(format!("inherent bound {} must be non-negative", self.inherent_bound));
        }
        if !self.bonus_scale.is_finite() {
            return fail("bonus scale must be finite".into());
        }
        Ok(())
    }

    /// Self-normalized concentration radius `√β` at episode `k`.
    ///
    /// `c_β·(sqrt(d·ln(1 + kL²/λ) + N·d·ln(3R·max(√k, 1)) + ln(HNK/δ)) + 2)`,
    /// where the middle term is the log-covering number of the value class at
    /// scale `1/√k` and is floored at zero.
    pub fn beta_radius(&self, k: usize, _count: usize) -> f64 {
        let k = k.max(1) as f64;
        let d = self.feature_dim as f64;
        let n = self.regions as f64;
        let det_term = d * (1.0 + k * self.l_phi * self.l_phi / self.lambda).ln();
        let cover_term = n * d * (3.0 * self.r_max * k.sqrt().max(1.0)).ln().max(0.0);
        let union_term = (self.horizon as f64 * n * self.episodes as f64 / self.delta).ln();
        self.bonus_scale * ((det_term + cover_term + union_term).max(0.0).sqrt() + 2.0)
    }

    /// Feasibility radius `√α = √β + √p·𝓘̂ + R/λ`.
    pub fn alpha_radius(&self, k: usize, count: usize) -> f64 {
        self.beta_radius(k, count) + (count as f64).sqrt() * self.inherent_bound + self.r_max / self.lambda
    }
}
