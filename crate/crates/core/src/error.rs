//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by topology construction, routing, and the experiment engine.
#[derive(Debug, Error)]
pub enum Error {
    /// `base^levels` does not fit the node-id word.
    #[error("topology size overflow: {base}^{levels} exceeds the supported node-id range")]
    SizeOverflow { base: u32, levels: u32 },

    /// Parameter outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A level index outside 1..=levels.
    #[error("invalid level {level}: topology has levels 1..={levels}")]
    InvalidLevel { level: u32, levels: u32 },

    /// Exact computation refused because the instance is too large.
    #[error("size guard exceeded: n = {n} > {guard}; {hint}")]
    SizeGuard { n: u64, guard: u64, hint: &'static str },

    /// A clique-balancer message whose destination is not a clique member.
    #[error("message {id} destination {dst} lies outside the clique")]
    DestOutsideClique { id: u64, dst: u32 },

    /// A routed message whose endpoints are not inside the instance's copy.
    #[error("message {id} ({src} -> {dst}) lies outside the level-{level} instance")]
    OutsideInstance { id: u64, src: u32, dst: u32, level: u32 },

    /// Estimated working-set size exceeds the configured budget.
    #[error("memory estimate {need_mb} MB exceeds budget {budget_mb} MB; \
             reduce per-node messages or scale the topology down")]
    MemoryBudget { need_mb: u64, budget_mb: u64 },

    /// Malformed label string or digit out of range.
    #[error("invalid node label: {0}")]
    InvalidLabel(String),

    /// Report or comparison input is unusable.
    #[error("invalid report: {0}")]
    InvalidReport(String),
}

pub type Result<T> = std::result::Result<T, Error>;
