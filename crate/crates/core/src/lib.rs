//! Simulator and analysis toolkit for the CLEX recursive clique-expander
//! interconnect and its 3D-torus baseline.
//!
//! The crate is organized bottom-up:
//!
//! * [`topology`] — CLEX and torus graphs: label arithmetic, neighbor rules,
//!   diameter, physical embedding, edge export.
//! * [`rng`] — deterministic seeding: stateless per-entity hashing and small
//!   keyed generators, so every draw is a pure function of (seed, entity).
//! * [`clique`] — the randomized single-clique balancer: direct send, then
//!   copy/confirm balancing phases.
//! * [`router`] — the recursive point-to-point router over the full
//!   hierarchy, with optional traffic redistribution.
//! * [`engine`] — traffic generation and the synchronous executor that runs
//!   a whole experiment and collects per-level metrics.
//! * [`all_to_all`] — broadcast-everything collectives on both topologies in
//!   counting mode.
//! * [`metrics`] — delay/bandwidth models and comparison ratios.
//! * [`report`] — experiment reports: CSV/JSON serialization and table/plot
//!   rendering.

pub mod all_to_all;
pub mod clique;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod router;
pub mod topology;

pub use all_to_all::{
    clex_all_to_all, clex_flood_parent, clex_flood_tree, torus_all_to_all, torus_flood_parent,
    torus_flood_tree, AtaStats, FloodTree,
};
pub use engine::{
    estimate_memory_mb, generate_traffic, memory_budget_mb, run_experiment, EngineConfig,
    ExperimentReport, MessageSample, TrafficPattern, TrafficSpec, ValiantMode,
};
pub use error::{Error, Result};
pub use report::{render_ata_table, render_decay_svg, render_table, write_csv, CSV_HEADER};
pub use router::{relay_candidates, route, valiant_redistribute, Message, RouteOutcome};
pub use metrics::{
    bandwidth_gain, hop_ratio, propagation_ratio, torus_effective_bandwidth, BandwidthModel,
    DelayModel, LevelMetrics,
};
pub use topology::{
    build_clex, build_torus, ClexTopology, Embedding, NodeId, NodeLabel, TorusTopology,
};
