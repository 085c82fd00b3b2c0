//! Traffic generation and the synchronous experiment executor.
//!
//! The executor routes every message through the recursive hierarchy and
//! collects per-level measurements. Message state lives in parallel columns
//! (holder, per-level targets, per-level hop/round tallies) indexed by a
//! flight id that never changes, so sub-instances are plain index lists and
//! grouping is cheap counting sorts.
//!
//! Routing a batch at level l ≥ 2 has three steps:
//!
//! 1. every message picks a relay inside its holder's level-(l−1) copy whose
//!    level-l link leads to the destination copy (free digits drawn
//!    uniformly at random), and is delivered to that relay by a recursive
//!    level-(l−1) sub-instance;
//! 2. messages cross the level-l links, one aggregated link of capacity
//!    `base` per node per direction, queue order randomized — a queue of Q
//!    messages drains in ⌈Q/base⌉ rounds;
//! 3. a second recursive sub-instance delivers each message to its target
//!    inside the destination copy.
//!
//! A message whose target *is* its current holder flows through at zero
//! cost; everything else crosses exactly one level-l link per batch (the
//! link degenerates to a self-link when the two relevant digits agree), so
//! per-message level-l traversals are structurally fixed while rounds and
//! level-1 behavior are stochastic.
//!
//! Every random draw is keyed by (experiment seed, purpose tag, recursion
//! path, entity), so results are independent of execution order and the
//! whole report is a pure function of (topology, traffic spec, config).

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clique::{run_episodes, BalancerConfig, CliqueScratch};
use crate::error::{Error, Result};
use crate::metrics::LevelMetrics;
use crate::rng::{derive, SplitMix64, TAG_CLIQUE, TAG_RELAY, TAG_SAMPLE, TAG_TRAFFIC, TAG_VALIANT, TAG_XING};
use crate::topology::{ClexTopology, NodeId};

// ---------------------------------------------------------------------------
// Traffic
// ---------------------------------------------------------------------------

/// How destinations are chosen.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrafficPattern {
    /// Destinations form a seeded random permutation of the multiset
    /// {each node × per_node}: every node sends and receives exactly
    /// `per_node` messages.
    UniformPermutation,
    /// Each destination uniformly and independently at random.
    UirDestinations,
    /// Explicit (src, dst) pairs; `per_node` is ignored.
    Custom(Vec<(NodeId, NodeId)>),
}

impl TrafficPattern {
    pub fn name(&self) -> &'static str {
        match self {
            TrafficPattern::UniformPermutation => "uniform_permutation",
            TrafficPattern::UirDestinations => "uir_destinations",
            TrafficPattern::Custom(_) => "custom",
        }
    }
}

/// A complete traffic specification; `seed` doubles as the experiment seed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrafficSpec {
    pub pattern: TrafficPattern,
    pub per_node: u32,
    pub seed: u64,
}

/// Materializes the (src, dst) list for a topology of `n` nodes.
pub fn generate_traffic(spec: &TrafficSpec, n: u64) -> Result<Vec<(NodeId, NodeId)>> {
    match &spec.pattern {
        TrafficPattern::Custom(list) => {
            for &(s, d) in list {
                if (s as u64) >= n || (d as u64) >= n {
                    return Err(Error::InvalidParameter(format!(
                        "custom pair ({s}, {d}) outside 0..{n}"
                    )));
                }
            }
            Ok(list.clone())
        }
        TrafficPattern::UniformPermutation => {
            let flights = checked_flights(n, spec.per_node)?;
            let mut dst: Vec<NodeId> = Vec::with_capacity(flights);
            for v in 0..n as NodeId {
                dst.extend(std::iter::repeat_n(v, spec.per_node as usize));
            }
            SplitMix64::from_parts(&[spec.seed, TAG_TRAFFIC]).shuffle(&mut dst);
            Ok((0..flights).map(|i| ((i / spec.per_node as usize) as NodeId, dst[i])).collect())
        }
        TrafficPattern::UirDestinations => {
            let flights = checked_flights(n, spec.per_node)?;
            let mut rng = SplitMix64::from_parts(&[spec.seed, TAG_TRAFFIC]);
            Ok((0..flights)
                .map(|i| ((i / spec.per_node as usize) as NodeId, rng.below(n) as NodeId))
                .collect())
        }
    }
}

fn checked_flights(n: u64, per_node: u32) -> Result<usize> {
    let flights = n.saturating_mul(per_node as u64);
    if flights > u32::MAX as u64 {
        return Err(Error::InvalidParameter(format!(
            "{flights} messages exceed the 2^32−1 flight-id space"
        )));
    }
    Ok(flights as usize)
}

// ---------------------------------------------------------------------------
// Configuration and report
// ---------------------------------------------------------------------------

/// Traffic predistribution through random intermediates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValiantMode {
    /// Route directly.
    Off,
    /// First deliver every message to a uniformly random intermediate node,
    /// then route to the real destination (doubles the work).
    Full,
    /// Intermediate drawn uniformly within the destination's level-l
    /// cluster (nodes sharing all digits above l) — the lightweight variant.
    Cluster(u32),
}

impl ValiantMode {
    pub fn name(&self) -> String {
        match self {
            ValiantMode::Off => "off".into(),
            ValiantMode::Full => "full".into(),
            ValiantMode::Cluster(l) => format!("cluster:{l}"),
        }
    }
}

/// Executor configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EngineConfig {
    pub balancer: BalancerConfig,
    pub valiant: ValiantMode,
    /// Extension (off by default, and off in all reference scenarios):
    /// messages whose destination already lies in their holder's sub-copy
    /// skip relay selection and the level crossing instead of using the
    /// degenerate self-link.
    pub same_copy_bypass: bool,
    /// Pool each node's level-l rule edges into one link of capacity `base`
    /// toward its swap partner (default). When off, each crossing lands on
    /// a uniformly drawn rule edge instead; drain timing is identical.
    pub aggregated_links: bool,
    /// At most this many clique-instance decay series are kept.
    pub sample_series: usize,
    /// At most this many per-message hop/round samples are kept.
    pub sample_messages: usize,
    /// Memory gate override in MiB; `None` reads CLEXSIM_MEM_BUDGET_MB or
    /// probes the machine.
    pub mem_budget_mb: Option<u64>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            balancer: BalancerConfig::default(),
            valiant: ValiantMode::Off,
            same_copy_bypass: false,
            aggregated_links: true,
            sample_series: 64,
            sample_messages: 1024,
            mem_budget_mb: None,
        }
    }
}

/// One sampled message's full per-level record.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MessageSample {
    pub src: NodeId,
    pub dst: NodeId,
    pub hops: Vec<u32>,
    pub rounds: Vec<u32>,
}

/// Everything a point-to-point experiment produces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub base: u32,
    pub levels: u32,
    pub n: u64,
    pub per_node: u32,
    pub pattern: String,
    pub seed: u64,
    pub valiant: String,
    pub direct_first: bool,
    pub request_ack: bool,
    pub injected: u64,
    pub delivered: u64,
    /// One row per level, ascending.
    pub level_metrics: Vec<LevelMetrics>,
    /// Index = phase count of a clique instance, value = how many instances
    /// used exactly that many phases.
    pub phase_histogram: Vec<u64>,
    /// Largest per-node load any single clique instance imposed.
    pub clique_max_node_load: u64,
    /// Remaining-message counts after each phase for the first sampled
    /// clique instances (decay curves).
    pub decay_series: Vec<Vec<u64>>,
    pub message_samples: Vec<MessageSample>,
}

// ---------------------------------------------------------------------------
// Memory gate
// ---------------------------------------------------------------------------

/// Rough peak-memory estimate for a point-to-point run, in MiB: the flight
/// columns (8 + 12·levels bytes each) plus grouping transients.
pub fn estimate_memory_mb(n: u64, per_node: u32, levels: u32) -> u64 {
    let flights = n.saturating_mul(per_node as u64);
    let per_flight = 24 + 12 * levels as u64;
    (flights.saturating_mul(per_flight) + 4 * n) / (1024 * 1024) + 64
}

/// Memory budget in MiB: the CLEXSIM_MEM_BUDGET_MB override, else 70% of
/// the machine's available memory, else a conservative 4 GiB.
pub fn memory_budget_mb() -> u64 {
    if let Ok(v) = std::env::var("CLEXSIM_MEM_BUDGET_MB") {
        if let Ok(mb) = v.trim().parse::<u64>() {
            return mb;
        }
    }
    if let Ok(text) = std::fs::read_to_string("/proc/meminfo") {
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("MemAvailable:") {
                if let Some(kb) = rest.split_whitespace().next().and_then(|v| v.parse::<u64>().ok())
                {
                    return kb * 7 / 10 / 1024;
                }
            }
        }
    }
    4096
}

/// Honors the CLEXSIM_THREADS cap once per process.
fn init_thread_pool() {
    static INIT: OnceLock<()> = OnceLock::new();
    INIT.get_or_init(|| {
        if let Ok(v) = std::env::var("CLEXSIM_THREADS") {
            if let Ok(k) = v.trim().parse::<usize>() {
                if k >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------
// Executor internals
// ---------------------------------------------------------------------------

/// Per-level accumulators, filled instance by instance and cross-checked
/// against the flight columns when the report is assembled.
#[derive(Clone, Default)]
pub(crate) struct LevelAccum {
    pub(crate) max_entered: u64,
    pub(crate) max_rounds: u64,
    pub(crate) acc_rounds: u64,
    pub(crate) acc_hops: u64,
    // level-1 extras
    pub(crate) phase_hist: Vec<u64>,
    pub(crate) series: Vec<Vec<u64>>,
    pub(crate) max_node_load: u64,
}

pub(crate) struct Sim<'a> {
    t: &'a ClexTopology,
    cfg: &'a EngineConfig,
    seed: u64,
    // flight columns
    pub(crate) src: Vec<NodeId>,
    pub(crate) holder: Vec<NodeId>,
    /// tgt[l−1][f]: the flight's target during level-l routing; the top
    /// column holds the final destination and is never overwritten.
    pub(crate) tgt: Vec<Vec<NodeId>>,
    pub(crate) hops: Vec<Vec<u32>>,
    pub(crate) rounds: Vec<Vec<u32>>,
    // grouping scratch
    counts: Vec<u32>,
    pub(crate) accum: Vec<LevelAccum>,
}

/// Stable counting sort of `input` by `key`, returning the sorted copy and
/// the (key, start, end) run per nonempty bucket in ascending key order.
/// `counts` must be zeroed on entry and is re-zeroed before returning.
fn bucket_sort(
    input: &[u32],
    counts: &mut [u32],
    key: impl Fn(u32) -> u32,
) -> (Vec<u32>, Vec<(u32, u32, u32)>) {
    let mut touched: Vec<u32> = Vec::new();
    for &f in input {
        let k = key(f);
        if counts[k as usize] == 0 {
            touched.push(k);
        }
        counts[k as usize] += 1;
    }
    touched.sort_unstable();
    let mut groups = Vec::with_capacity(touched.len());
    let mut running = 0u32;
    for &k in &touched {
        let c = counts[k as usize];
        groups.push((k, running, running + c));
        counts[k as usize] = running; // repurpose as write cursor
        running += c;
    }
    let mut sorted = vec![0u32; input.len()];
    for &f in input {
        let k = key(f) as usize;
        sorted[counts[k] as usize] = f;
        counts[k] += 1;
    }
    for &k in &touched {
        counts[k as usize] = 0;
    }
    (sorted, groups)
}

/// Result of one clique instance processed off the shared columns.
struct BatchResult {
    start: u32,
    end: u32,
    ep_rounds: Vec<u16>,
    ep_hops: Vec<u8>,
    entered: u64,
    duration: u32,
    phases: u32,
    max_node_load: u32,
    remaining: Vec<u64>,
}

impl<'a> Sim<'a> {
    /// `levels_used`: how many levels of columns the run needs — the full
    /// hierarchy for experiments, `level` for a single-instance route.
    pub(crate) fn new(
        t: &'a ClexTopology,
        cfg: &'a EngineConfig,
        seed: u64,
        flights: usize,
        levels_used: u32,
    ) -> Self {
        let levels = levels_used as usize;
        Sim {
            t,
            cfg,
            seed,
            src: vec![0; flights],
            holder: vec![0; flights],
            tgt: vec![vec![0; flights]; levels],
            hops: vec![vec![0; flights]; levels],
            rounds: vec![vec![0; flights]; levels],
            counts: vec![0; t.n() as usize],
            accum: vec![LevelAccum::default(); levels],
        }
    }

    /// Per-level metric rows, with the double-entry cross-check between the
    /// instance accumulators and the flight columns.
    pub(crate) fn level_metrics(&self) -> Vec<LevelMetrics> {
        let flights = self.src.len() as u64;
        let mut out = Vec::with_capacity(self.accum.len());
        for (lv, acc) in self.accum.iter().enumerate() {
            let l = lv as u32 + 1;
            let col_rounds: u64 = self.rounds[lv].iter().map(|&r| r as u64).sum();
            let col_hops: u64 = self.hops[lv].iter().map(|&h| h as u64).sum();
            assert_eq!(col_rounds, acc.acc_rounds, "round ledger mismatch at level {l}");
            assert_eq!(col_hops, acc.acc_hops, "hop ledger mismatch at level {l}");
            let denom = flights.max(1) as f64;
            let copy_size = (self.t.base() as u64).pow(l) as f64;
            out.push(LevelMetrics {
                level: l,
                max_rounds: acc.max_rounds,
                avg_rounds: col_rounds as f64 / denom,
                max_avg_load: acc.max_entered as f64 / copy_size,
                avg_hops: col_hops as f64 / denom,
            });
        }
        out
    }

    /// Routes one batch (all flights in `my` sit in one level-`l` copy and
    /// carry their target in column l−1). On return every flight's holder
    /// equals that target.
    pub(crate) fn route_level(&mut self, l: u32, my: &[u32], stage: u64) {
        let lv = l as usize - 1;
        if l == 1 {
            // Only reachable as the top call of a one-level (pure clique)
            // topology; deeper recursions enter through recurse_groups.
            self.run_clique_batches(&[(0, 0, my.len() as u32)], my, stage, 0);
            return;
        }
        self.accum[lv].max_entered = self.accum[lv].max_entered.max(my.len() as u64);
        let b = self.t.base();

        // Step 1: pick relays and deliver messages to them recursively.
        // A message whose holder *is* its target on entry flows through at
        // zero cost; every other message crosses exactly once in step 2,
        // even when its relay coincides with the target (self-link).
        let mut step1: Vec<u32> = Vec::with_capacity(my.len());
        let mut active: Vec<u32> = Vec::with_capacity(my.len());
        {
            let t = self.t;
            let bypass = self.cfg.same_copy_bypass;
            for &f in my {
                let fu = f as usize;
                let target = self.tgt[lv][fu];
                let h = self.holder[fu];
                if h == target {
                    continue; // already home: zero cost at this level
                }
                if bypass && t.digit(h, l) == t.digit(target, l) {
                    continue; // extension: skip relay + crossing entirely
                }
                active.push(f);
                // Relay: digit l−1 points at the destination copy, digits
                // below l−1 are uniform, digits ≥ l stay the holder's.
                let mut r = t.with_digit(h, l - 1, t.digit(target, l));
                if l >= 3 {
                    let mut rng = SplitMix64(derive(&[self.seed, TAG_RELAY, stage, f as u64]));
                    for m in 1..=l - 2 {
                        r = t.with_digit(r, m, rng.below(b as u64) as u32);
                    }
                }
                self.tgt[lv - 1][fu] = r;
                if r != h {
                    step1.push(f);
                }
            }
        }
        self.recurse_groups(l, &step1, stage, 1);

        // Step 2: cross the level-l links. Per-holder queues drain at
        // `base` messages per round; queue order is randomized, and the
        // overflow therefore lands on uniformly random messages.
        {
            let t = self.t;
            let holder_col = &self.holder;
            let (queues, runs) =
                bucket_sort(&active, &mut self.counts, |f| holder_col[f as usize]);
            let mut drain_max = 0u64;
            for &(holder0, start, end) in &runs {
                let q = &queues[start as usize..end as usize];
                let mut order: Vec<u32> = q.to_vec();
                let mut rng = SplitMix64(derive(&[self.seed, TAG_XING, stage, holder0 as u64]));
                rng.shuffle(&mut order);
                // Non-aggregated landing: a shuffled rule-edge order, reused
                // cyclically, keeps per-edge counts within one of each other.
                let mut edge_perm: Vec<u32> = (0..b).collect();
                if !self.cfg.aggregated_links {
                    rng.shuffle(&mut edge_perm);
                }
                for (p, &f) in order.iter().enumerate() {
                    let fu = f as usize;
                    let cost = (p / b as usize) as u32 + 1;
                    self.rounds[lv][fu] += cost;
                    self.hops[lv][fu] += 1;
                    self.accum[lv].acc_rounds += cost as u64;
                    self.accum[lv].acc_hops += 1;
                    let swap = t.swap_partner(self.holder[fu], l);
                    self.holder[fu] = if self.cfg.aggregated_links {
                        swap
                    } else {
                        t.with_digit(swap, l - 1, edge_perm[p % b as usize])
                    };
                }
                drain_max = drain_max.max((q.len() as u64).div_ceil(b as u64));
            }
            self.accum[lv].max_rounds = self.accum[lv].max_rounds.max(drain_max);
        }

        // Step 3: deliver inside the destination copies.
        let mut step3: Vec<u32> = Vec::with_capacity(my.len());
        for &f in my {
            let fu = f as usize;
            let target = self.tgt[lv][fu];
            if self.holder[fu] != target {
                self.tgt[lv - 1][fu] = target;
                step3.push(f);
            }
        }
        self.recurse_groups(l, &step3, stage, 3);

        #[cfg(debug_assertions)]
        for &f in my {
            debug_assert_eq!(self.holder[f as usize], self.tgt[lv][f as usize]);
        }
    }

    /// Groups `flights` by their holder's level-`l` digit and runs each
    /// group as a level-(l−1) sub-instance.
    fn recurse_groups(&mut self, l: u32, flights: &[u32], stage: u64, step: u64) {
        if flights.is_empty() {
            return;
        }
        let t = self.t;
        let holder = &self.holder;
        let (sorted, groups) = bucket_sort(flights, &mut self.counts, |f| t.digit(holder[f as usize], l));
        if l == 2 {
            // The children are clique instances; run them as one batch set.
            self.run_clique_batches(&groups, &sorted, stage, step);
        } else {
            for &(key, start, end) in &groups {
                let child = derive(&[stage, step, key as u64]);
                self.route_level(l - 1, &sorted[start as usize..end as usize], child);
            }
        }
    }

    /// Runs a set of independent clique instances (level-1 batches) and
    /// merges their results deterministically in batch order.
    fn run_clique_batches(&mut self, groups: &[(u32, u32, u32)], sorted: &[u32], stage: u64, step: u64) {
        let b = self.t.base();
        let results: Vec<BatchResult> = {
            let holder = &self.holder;
            let tgt0 = &self.tgt[0];
            let balancer = &self.cfg.balancer;
            let seed = self.seed;
            let t = self.t;
            groups
                .par_iter()
                .map_init(
                    || (CliqueScratch::default(), Vec::new(), Vec::new()),
                    |(scratch, src_l, dst_l), &(key, start, end)| {
                        let idx = &sorted[start as usize..end as usize];
                        src_l.clear();
                        dst_l.clear();
                        for &f in idx {
                            src_l.push(t.digit(holder[f as usize], 1));
                            dst_l.push(t.digit(tgt0[f as usize], 1));
                        }
                        let mut rng =
                            SplitMix64(derive(&[seed, TAG_CLIQUE, stage, step, key as u64]));
                        let summary = run_episodes(b, src_l, dst_l, balancer, &mut rng, scratch);
                        BatchResult {
                            start,
                            end,
                            ep_rounds: scratch.ep_rounds.clone(),
                            ep_hops: scratch.ep_hops.clone(),
                            entered: idx.len() as u64,
                            duration: summary.duration,
                            phases: summary.phases,
                            max_node_load: summary.max_node_load,
                            remaining: scratch.remaining.clone(),
                        }
                    },
                )
                .collect()
        };
        for r in results {
            let idx = &sorted[r.start as usize..r.end as usize];
            let acc = &mut self.accum[0];
            acc.max_entered = acc.max_entered.max(r.entered);
            acc.max_rounds = acc.max_rounds.max(r.duration as u64);
            acc.max_node_load = acc.max_node_load.max(r.max_node_load as u64);
            if acc.phase_hist.len() <= r.phases as usize {
                acc.phase_hist.resize(r.phases as usize + 1, 0);
            }
            acc.phase_hist[r.phases as usize] += 1;
            if acc.series.len() < self.cfg.sample_series && !r.remaining.is_empty() {
                acc.series.push(r.remaining);
            }
            for (j, &f) in idx.iter().enumerate() {
                let fu = f as usize;
                self.rounds[0][fu] += r.ep_rounds[j] as u32;
                self.hops[0][fu] += r.ep_hops[j] as u32;
                self.accum[0].acc_rounds += r.ep_rounds[j] as u64;
                self.accum[0].acc_hops += r.ep_hops[j] as u64;
                self.holder[fu] = self.tgt[0][fu];
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Public entry point
// ---------------------------------------------------------------------------

/// Runs a complete point-to-point experiment and returns its report.
pub fn run_experiment(
    t: &ClexTopology,
    traffic: &TrafficSpec,
    cfg: &EngineConfig,
) -> Result<ExperimentReport> {
    init_thread_pool();
    let n = t.n();
    let pairs = generate_traffic(traffic, n)?;
    let flights = pairs.len();

    let need = estimate_memory_mb(n, traffic.per_node, t.levels());
    let budget = cfg.mem_budget_mb.unwrap_or_else(memory_budget_mb);
    if need > budget {
        return Err(Error::MemoryBudget { need_mb: need, budget_mb: budget });
    }

    let mut sim = Sim::new(t, cfg, traffic.seed, flights, t.levels());
    let top = t.levels() as usize - 1;
    for (f, &(s, d)) in pairs.iter().enumerate() {
        sim.src[f] = s;
        sim.holder[f] = s;
        sim.tgt[top][f] = d;
    }
    drop(pairs);

    let all: Vec<u32> = (0..flights as u32).collect();
    match cfg.valiant {
        ValiantMode::Off => {
            sim.route_level(t.levels(), &all, derive(&[traffic.seed, 0]));
        }
        mode => {
            // Pass 1: reroute everything through random intermediates.
            let dst_backup: Vec<NodeId> = sim.tgt[top].clone();
            let mut rng = SplitMix64(derive(&[traffic.seed, TAG_VALIANT]));
            for (slot, &dst) in sim.tgt[top].iter_mut().zip(&dst_backup) {
                *slot = intermediate_for(t, dst, mode, &mut rng);
            }
            sim.route_level(t.levels(), &all, derive(&[traffic.seed, 1]));
            // Pass 2: from the intermediates to the real destinations.
            sim.tgt[top].copy_from_slice(&dst_backup);
            sim.route_level(t.levels(), &all, derive(&[traffic.seed, 2]));
        }
    }

    // Conservation: nothing lost, nothing duplicated, everything home.
    for f in 0..flights {
        assert_eq!(
            sim.holder[f], sim.tgt[top][f],
            "flight {f} ended at {} instead of {}",
            sim.holder[f], sim.tgt[top][f]
        );
    }
    if traffic.pattern == TrafficPattern::UniformPermutation {
        let mut in_counts = vec![0u64; n as usize];
        for f in 0..flights {
            in_counts[sim.tgt[top][f] as usize] += 1;
        }
        assert!(
            in_counts.iter().all(|&c| c == traffic.per_node as u64),
            "permutation traffic must deliver exactly per_node messages to every node"
        );
    }

    Ok(assemble_report(t, traffic, cfg, sim, flights as u64))
}

/// Draws the first-pass destination for `dst` under a redistribution mode.
pub(crate) fn intermediate_for(
    t: &ClexTopology,
    dst: NodeId,
    mode: ValiantMode,
    rng: &mut SplitMix64,
) -> NodeId {
    match mode {
        ValiantMode::Off => dst,
        ValiantMode::Full => rng.below(t.n()) as NodeId,
        ValiantMode::Cluster(lc) => {
            let mut v = dst;
            for m in 1..=lc.min(t.levels()) {
                v = t.with_digit(v, m, rng.below(t.base() as u64) as u32);
            }
            v
        }
    }
}

fn assemble_report(
    t: &ClexTopology,
    traffic: &TrafficSpec,
    cfg: &EngineConfig,
    sim: Sim,
    flights: u64,
) -> ExperimentReport {
    let level_metrics = sim.level_metrics();

    // Reservoir sample of per-message records.
    let k = cfg.sample_messages.min(flights as usize);
    let mut picks: Vec<u32> = (0..k as u32).collect();
    let mut rng = SplitMix64(derive(&[traffic.seed, TAG_SAMPLE]));
    for f in k as u64..flights {
        let j = rng.below(f + 1);
        if (j as usize) < k {
            picks[j as usize] = f as u32;
        }
    }
    let message_samples = picks
        .iter()
        .map(|&f| {
            let fu = f as usize;
            MessageSample {
                src: sim.src[fu],
                dst: sim.tgt[t.levels() as usize - 1][fu],
                hops: sim.hops.iter().map(|col| col[fu]).collect(),
                rounds: sim.rounds.iter().map(|col| col[fu]).collect(),
            }
        })
        .collect();

    ExperimentReport {
        kind: "clex_point_to_point".into(),
        base: t.base(),
        levels: t.levels(),
        n: t.n(),
        per_node: traffic.per_node,
        pattern: traffic.pattern.name().into(),
        seed: traffic.seed,
        valiant: cfg.valiant.name(),
        direct_first: cfg.balancer.direct_first,
        request_ack: cfg.balancer.request_ack,
        injected: flights,
        delivered: flights,
        level_metrics,
        phase_histogram: sim.accum[0].phase_hist.clone(),
        clique_max_node_load: sim.accum[0].max_node_load,
        decay_series: sim.accum[0].series.clone(),
        message_samples,
    }
}
