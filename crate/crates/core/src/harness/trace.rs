use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cinderella::PlanSummary;
use crate::error::Result;

pub const CSV_HEADER: &str = "k,ret,vstar,vpi,regret,cum_regret,ms";

/// Allowed negative regret per episode, from oracle grid error.
pub const EVAL_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRow {
    pub k: usize,
    pub ret: f64,
    pub vstar: f64,
    pub vpi: f64,
    pub regret: f64,
    pub cum_regret: f64,
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config_hash: String,
    pub env: String,
    pub planner: String,
    pub seed: u64,
    pub episodes: usize,
    pub horizon: usize,
    pub nu: f64,
    pub degree: usize,
    pub epsilon: f64,
    pub regions: usize,
    pub feature_dim: usize,
    /// Value of the uniform-random policy from the first initial state.
    pub uniform_policy_value: f64,
    /// `V*₁(s₁) − V^unif₁(s₁)` from the first initial state.
    pub uniform_policy_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub meta: RunMetadata,
    pub rows: Vec<RegretRow>,
    #[serde(default)]
    pub plans: Vec<PlanSummary>,
}

/// Formats `x` with nine significant digits, without exponent for the
/// magnitudes that occur in a trace.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..=9).contains(&mag) {
        return format!("{x:.8e}");
    }
    let decimals = (8 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

impl RegretTrace {
    pub fn cumulative_regret(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_regret)
    }

    pub fn average_regret(&self) -> f64 {
        if self.rows.is_empty() {
            0.0
        } else {
            self.cumulative_regret() / self.rows.len() as f64
        }
    }

    pub fn regrets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.regret).collect()
    }

    /// CSV text; with `timing = false` the `ms` column is left empty so that
    /// runs can be compared byte for byte.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let ms = if timing { sig9(r.ms) } else { String::new() };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.k,
                sig9(r.ret),
                sig9(r.vstar),
                sig9(r.vpi),
                sig9(r.regret),
                sig9(r.cum_regret),
                ms
            );
        }
        out
    }

    /// Writes `<stem>.csv`, `<stem>.json` (metadata) and `<stem>.plans.jsonl`
    /// into `dir`.
    pub fn write_to(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{stem}.csv")), self.to_csv(true))?;
        let meta = serde_json::to_string_pretty(&self.meta)?;
        std::fs::write(dir.join(format!("{stem}.json")), meta + "\n")?;
        let mut plans = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{stem}.plans.jsonl")))?);
        for p in &self.plans {
            serde_json::to_writer(&mut plans, p)?;
            plans.write_all(b"\n")?;
        }
        plans.flush()?;
        Ok(())
    }
}

/// Least-squares slope of `ln(cum)` against `ln(k)` over the last half of
/// the episodes, skipping non-positive cumulative values.
pub fn loglog_slope(cum: &[f64]) -> Option<f64> {
    let start = cum.len() / 2;
    let pts: Vec<(f64, f64)> = (start..cum.len())
        .filter(|&i| cum[i] > 0.0)
        .map(|i| (((i + 1) as f64).ln(), cum[i].ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
