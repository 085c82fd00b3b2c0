//! Delay and bandwidth models plus the CLEX-vs-torus comparison ratios.
//!
//! Everything here is pure arithmetic over measured per-level simulation
//! results ([`LevelMetrics`]); nothing draws random numbers or touches
//! topology state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::TorusTopology;

/// One per-level row of an experiment report.
///
/// * `max_rounds` — most rounds any single instance at this level took,
///   recursive calls excluded.
/// * `avg_rounds` — average total rounds a message spent at this level,
///   summed over every instance the message participated in (can exceed
///   `max_rounds` when messages pass through several instances).
/// * `max_avg_load` — maximum over instances of (messages handled / nodes in
///   the instance).
/// * `avg_hops` — average level-l edge traversals per message over the whole
///   run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelMetrics {
    pub level: u32,
    pub max_rounds: u64,
    pub avg_rounds: f64,
    pub max_avg_load: f64,
    pub avg_hops: f64,
}

/// Linear per-message delay model `d = c_h·h + c_p·p`: `h` relay hops at
/// `c_h` time units each, plus physical path length `p` at `c_p` time units
/// per unit distance.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DelayModel {
    pub c_h: f64,
    pub c_p: f64,
}

impl Default for DelayModel {
    /// A few time units per hop, one per unit distance — placeholder
    /// magnitudes (think nanoseconds and feet); always configurable.
    fn default() -> Self {
        DelayModel { c_h: 3.0, c_p: 1.0 }
    }
}

impl DelayModel {
    pub fn validate(&self) -> Result<()> {
        if self.c_h <= 0.0 || self.c_p <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "delay constants must be positive (c_h={}, c_p={})",
                self.c_h, self.c_p
            )));
        }
        Ok(())
    }

    /// `c_h·h + c_p·p`.
    pub fn delay(&self, hops: u64, path_length: f64) -> f64 {
        debug_assert!(path_length >= 0.0);
        self.c_h * hops as f64 + self.c_p * path_length
    }
}

/// Per-node bandwidth split across levels in proportion to the measured
/// average hop counts: levels whose links carry more traversals per message
/// get a proportionally larger share.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BandwidthModel {
    /// Total per-node bandwidth.
    pub total: f64,
    /// One weight per level, ascending level order, summing to 1.
    pub shares: Vec<f64>,
}

impl BandwidthModel {
    /// Builds shares proportional to each level's `avg_hops`.
    pub fn from_avg_hops(total: f64, metrics: &[LevelMetrics]) -> Result<Self> {
        if total <= 0.0 {
            return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {total}")));
        }
        let sum: f64 = metrics.iter().map(|m| m.avg_hops).sum();
        if sum.is_nan() || sum <= 0.0 {
            return Err(Error::InvalidParameter("avg_hops sum to zero; no traffic to weight".into()));
        }
        let shares = metrics.iter().map(|m| m.avg_hops / sum).collect();
        Ok(BandwidthModel { total, shares })
    }

    /// Bandwidth assigned to `level` (1-based, matching the metrics order).
    pub fn level_bandwidth(&self, level: u32) -> f64 {
        self.total * self.shares[level as usize - 1]
    }
}

/// Effective per-node all-to-all bandwidth of a torus with per-node
/// bandwidth `b`: the bisection cut shared by the n/2 nodes on one side,
/// each of the six per-node links carrying b/6. For a symmetric torus this
/// is the closed form `2b/(3·n^{1/3})`.
pub fn torus_effective_bandwidth(t: &TorusTopology, b: f64) -> f64 {
    let n = t.n();
    if n <= 1 {
        return b;
    }
    t.bisection_edges() as f64 * b / (3.0 * n as f64)
}

/// Ratio of CLEX to torus all-to-all bandwidth: `3·n^{1/3} / (2·Σ avg_hops)`.
///
/// CLEX serves a message in Σ avg_hops link traversals out of a per-node
/// budget proportional to 1, while the torus is capped by its bisection.
pub fn bandwidth_gain(metrics: &[LevelMetrics], n: u64) -> f64 {
    let sum: f64 = metrics.iter().map(|m| m.avg_hops).sum();
    3.0 * (n as f64).powf(1.0 / 3.0) / (2.0 * sum)
}

/// Same ratio with rounds in place of hops — the time-domain analogue of
/// [`bandwidth_gain`]: `3·n^{1/3} / (2·Σ avg_rounds)`.
pub fn hop_ratio(metrics: &[LevelMetrics], n: u64) -> f64 {
    let sum: f64 = metrics.iter().map(|m| m.avg_rounds).sum();
    3.0 * (n as f64).powf(1.0 / 3.0) / (2.0 * sum)
}

/// Propagation-weighted round sum `Σ_l avg_rounds_l / growth^(L−l)` where L
/// is the top level: rounds on lower levels are discounted by the physical
/// scale factor between adjacent levels (`growth` = base^{1/3} cuboid side
/// ratio), since their links are proportionally shorter.
pub fn propagation_ratio(metrics: &[LevelMetrics], growth: f64) -> f64 {
    let top = metrics.iter().map(|m| m.level).max().unwrap_or(0);
    metrics
        .iter()
        .map(|m| m.avg_rounds / growth.powi((top - m.level) as i32))
        .sum()
}
