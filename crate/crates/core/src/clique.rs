//! Randomized load balancing on a single clique.
//!
//! Every node of a clique holds messages addressed to other clique members.
//! Delivery proceeds in synchronous phases:
//!
//! * **Direct phase** (optional, on by default): each node sends, along each
//!   of its clique links, one pending message addressed to that link's far
//!   end. One message per (source, destination) pair is delivered at a cost
//!   of a single round.
//! * **Balancing phases** i = 1, 2, …: every node creates ⌊k(i)⌋ copies of
//!   each still-undelivered message and the copies are dealt uniformly at
//!   random across all nodes under an exact ±1 balance constraint (the
//!   *distribute* round). Each node then forwards, per destination, one of
//!   the copies it received (the *forward* round); destinations confirm, and
//!   all remaining copies are discarded before the next phase. The copy
//!   count grows by `k(i+1) = min(k(i)·e^{⌊k(i)⌋/5}, cap)` with
//!   `cap = √(log clique_size)` by default.
//!
//! Termination is guaranteed: for any destination with pending messages,
//! every holder of a matching copy forwards one message to it, so each such
//! destination absorbs at least one message per phase and the remaining
//! count strictly decreases. No per-node clamping of copies is needed: a
//! phase deals ⌊k⌋·R copies over b nodes, so each node receives at most
//! ⌈cap·R/b⌉ of them, already within a constant factor of the pending load.
//!
//! Round accounting: the direct phase costs 1 round, each balancing phase 2
//! rounds (distribute + forward). When `request_ack` is on, relays are
//! preceded by a request/grant exchange that delays the balancing machinery
//! by 2 further rounds; it is free of payload bandwidth and excluded from
//! the per-message round counts, but included in the instance duration.
//!
//! A message delivered in the direct phase took 1 hop; a copy dealt straight
//! to its destination ("landed") also took 1 hop; a forwarded copy took 2
//! (or 1 when the deal left it at its own source). Per-message rounds are
//! the in-instance round index at delivery: 1 for direct, 2i for landed and
//! 2i+1 for forwarded in balancing phase i (one less each without the
//! direct phase).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive, SplitMix64, TAG_CLIQUE};

/// Tuning knobs for a balancer instance.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BalancerConfig {
    /// Send one message per clique link directly before any balancing.
    pub direct_first: bool,
    /// Precede relays with a request/grant exchange (+2 rounds of instance
    /// duration when any balancing happens; control traffic is free).
    pub request_ack: bool,
    /// Override for the copy-count cap; `None` means √(log clique_size).
    pub copy_cap: Option<f64>,
    /// Base of the logarithm in the default cap (natural log by default).
    pub copy_cap_log_base: f64,
    /// Seed for the instance's private random stream.
    pub rng_seed: u64,
}

impl Default for BalancerConfig {
    fn default() -> Self {
        BalancerConfig {
            direct_first: true,
            request_ack: true,
            copy_cap: None,
            copy_cap_log_base: std::f64::consts::E,
            rng_seed: 0,
        }
    }
}

impl BalancerConfig {
    /// The copy cap in effect for a clique of `b` nodes, floored at 1 so the
    /// balancer always makes at least one copy per message.
    pub fn effective_cap(&self, b: u32) -> f64 {
        self.copy_cap.unwrap_or_else(|| copy_cap(b, self.copy_cap_log_base)).max(1.0)
    }
}

/// Default copy cap √(log_base clique_size), floored at 1: below 1 the
/// floor ⌊k⌋ would reach zero and the balancer would stall.
pub fn copy_cap(clique_size: u32, log_base: f64) -> f64 {
    debug_assert!(log_base > 1.0);
    ((clique_size.max(2) as f64).ln() / log_base.ln()).sqrt().max(1.0)
}

/// One step of the copy-count schedule: `min(k·e^{⌊k⌋/5}, cap)`. The cap is
/// clamped to ≥ 1 to keep the sequence non-decreasing from k(1) = 1.
pub fn k_update(k: f64, cap: f64) -> f64 {
    debug_assert!(k >= 1.0);
    (k * (k.floor() / 5.0).exp()).min(cap.max(1.0))
}

/// A message inside one clique instance; node indices are clique-local.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CliqueMessage {
    pub id: u64,
    pub src: u32,
    pub dst: u32,
}

/// Per-message delivery record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageOutcome {
    pub id: u64,
    /// In-instance round index at delivery (request/ack latency excluded);
    /// 0 for a message already at its destination.
    pub rounds: u32,
    /// Clique edges traversed: 0 self, 1 direct or landed, 2 relayed.
    pub hops: u32,
    /// Phase of delivery as counted in [`CliqueStats::phases`]; 0 for self.
    pub phase: u32,
    /// Extra latency (2 rounds) when `request_ack` applied to this delivery.
    pub ack_delay: u32,
}

/// Aggregate result of one balancer instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CliqueStats {
    pub instance_id: u64,
    /// Wall-clock rounds the instance occupied, request/ack included.
    pub rounds: u64,
    /// Phases used: the direct phase (when it ran) plus balancing phases.
    pub phases: u32,
    /// Per-node handling counts: messages held at start, copies received,
    /// and deliveries received.
    pub loads: Vec<u32>,
    /// Undelivered-message count after each phase (direct phase first).
    pub remaining_per_phase: Vec<u64>,
}

/// Reusable buffers for running many instances without reallocation.
#[derive(Default)]
pub(crate) struct CliqueScratch {
    /// Episode indices not yet delivered.
    pending: Vec<u32>,
    /// Copy slots of the current phase: episode index per copy.
    copies: Vec<u32>,
    /// (key, episode) pairs for grouping by sort.
    groups: Vec<(u64, u32)>,
    /// Node permutation of the current deal.
    perm: Vec<u32>,
    pub delivered: Vec<bool>,
    pub ep_rounds: Vec<u16>,
    pub ep_hops: Vec<u8>,
    pub ep_phase: Vec<u16>,
    pub loads: Vec<u32>,
    pub remaining: Vec<u64>,
}

/// Aggregate counters of one run, cheap enough to return by value.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct EpisodeSummary {
    pub duration: u32,
    pub phases: u32,
    pub max_node_load: u32,
}

/// Grouping key for the per-link queues: one slot per ordered node pair.
#[inline]
fn link_key(b: u32, from: u32, to: u32) -> u64 {
    from as u64 * b as u64 + to as u64
}

/// Runs the balancer over parallel episode arrays, filling
/// `scratch.ep_rounds/ep_hops/ep_phase/loads/remaining`. `src[e]`/`dst[e]`
/// are clique-local node indices, already validated against `b`.
pub(crate) fn run_episodes(
    b: u32,
    src: &[u32],
    dst: &[u32],
    cfg: &BalancerConfig,
    rng: &mut SplitMix64,
    scratch: &mut CliqueScratch,
) -> EpisodeSummary {
    debug_assert!(b >= 2);
    debug_assert_eq!(src.len(), dst.len());
    let m = src.len();
    let cap = cfg.effective_cap(b);

    scratch.delivered.clear();
    scratch.delivered.resize(m, false);
    scratch.ep_rounds.clear();
    scratch.ep_rounds.resize(m, 0);
    scratch.ep_hops.clear();
    scratch.ep_hops.resize(m, 0);
    scratch.ep_phase.clear();
    scratch.ep_phase.resize(m, 0);
    scratch.loads.clear();
    scratch.loads.resize(b as usize, 0);
    scratch.remaining.clear();
    scratch.pending.clear();

    for e in 0..m {
        scratch.loads[src[e] as usize] += 1; // held at start
        if src[e] == dst[e] {
            // Already home: zero-cost local delivery, no clique traffic.
            scratch.delivered[e] = true;
            scratch.loads[dst[e] as usize] += 1;
        } else {
            scratch.pending.push(e as u32);
        }
    }

    let entered = scratch.pending.len() as u64;
    let mut remaining = scratch.pending.len();
    let direct_ran = cfg.direct_first && remaining > 0;
    let phase_base: u32 = direct_ran as u32; // balancing phase i is phase base+i

    // --- direct phase: one message per (source, destination) link ----------
    if direct_ran {
        scratch.groups.clear();
        for &e in &scratch.pending {
            scratch.groups.push((link_key(b, src[e as usize], dst[e as usize]), e));
        }
        scratch.groups.sort_unstable();
        let mut i = 0;
        while i < scratch.groups.len() {
            let key = scratch.groups[i].0;
            let mut j = i + 1;
            while j < scratch.groups.len() && scratch.groups[j].0 == key {
                j += 1;
            }
            let e = scratch.groups[i + rng.below((j - i) as u64) as usize].1;
            let eu = e as usize;
            scratch.delivered[eu] = true;
            scratch.ep_rounds[eu] = 1;
            scratch.ep_hops[eu] = 1;
            scratch.ep_phase[eu] = 1;
            scratch.loads[dst[eu] as usize] += 1;
            remaining -= 1;
            i = j;
        }
        scratch.remaining.push(remaining as u64);
    }

    // --- balancing phases ---------------------------------------------------
    let mut k = 1.0f64;
    let mut bal = 0u32;
    while remaining > 0 {
        bal += 1;
        let kcopies = k.floor() as usize;
        debug_assert!(kcopies >= 1);

        // Step 1: copy each pending message ⌊k⌋ times.
        scratch.pending.retain(|&e| !scratch.delivered[e as usize]);
        scratch.copies.clear();
        for &e in &scratch.pending {
            for _ in 0..kcopies {
                scratch.copies.push(e);
            }
        }

        // Step 2: deal the copies — shuffled copies round-robin onto a
        // shuffled node order gives uniform placement with per-node receipt
        // counts differing by at most one.
        rng.shuffle(&mut scratch.copies);
        scratch.perm.clear();
        scratch.perm.extend(0..b);
        rng.shuffle(&mut scratch.perm);

        // Round-robin over a permutation keeps per-node receipts within ±1
        // of each other by construction; verify in debug builds.
        #[cfg(debug_assertions)]
        if !scratch.copies.is_empty() {
            let mut per_node = vec![0u64; b as usize];
            for p in 0..scratch.copies.len() {
                per_node[scratch.perm[p % b as usize] as usize] += 1;
            }
            let hi = per_node.iter().max().unwrap();
            let lo = per_node.iter().min().unwrap();
            debug_assert!(hi - lo <= 1, "copy deal unbalanced: spread {}", hi - lo);
        }

        let (landed_round, forward_round) =
            (phase_base as u16 + 2 * bal as u16 - 1, phase_base as u16 + 2 * bal as u16);
        let phase_no = (phase_base + bal) as u16;

        // Copies dealt straight onto their destination are delivered now.
        for (p, &e) in scratch.copies.iter().enumerate() {
            let w = scratch.perm[p % b as usize];
            scratch.loads[w as usize] += 1; // copy received
            let eu = e as usize;
            if w == dst[eu] && !scratch.delivered[eu] {
                scratch.delivered[eu] = true;
                scratch.ep_rounds[eu] = landed_round;
                scratch.ep_hops[eu] = 1;
                scratch.ep_phase[eu] = phase_no;
                scratch.loads[dst[eu] as usize] += 1;
                remaining -= 1;
            }
        }

        // Step 3: each node forwards one copy per destination, chosen
        // uniformly; a forward whose message already got through this phase
        // is wasted (the holder cannot know yet).
        scratch.groups.clear();
        for (p, &e) in scratch.copies.iter().enumerate() {
            let w = scratch.perm[p % b as usize];
            if w != dst[e as usize] {
                scratch.groups.push((link_key(b, w, dst[e as usize]), e));
            }
        }
        scratch.groups.sort_unstable();
        let mut i = 0;
        while i < scratch.groups.len() {
            let key = scratch.groups[i].0;
            let mut j = i + 1;
            while j < scratch.groups.len() && scratch.groups[j].0 == key {
                j += 1;
            }
            let e = scratch.groups[i + rng.below((j - i) as u64) as usize].1;
            let eu = e as usize;
            if !scratch.delivered[eu] {
                scratch.delivered[eu] = true;
                scratch.ep_rounds[eu] = forward_round;
                scratch.ep_hops[eu] = if key / b as u64 == src[eu] as u64 { 1 } else { 2 };
                scratch.ep_phase[eu] = phase_no;
                scratch.loads[dst[eu] as usize] += 1;
                remaining -= 1;
            }
            i = j;
        }

        // Step 4: confirmations arrive, stale copies die, copy count grows.
        let before = *scratch.remaining.last().unwrap_or(&entered);
        debug_assert!(
            (remaining as u64) < before || before == 0,
            "balancing must make strict progress"
        );
        scratch.remaining.push(remaining as u64);
        k = k_update(k, cap);
    }

    let ack = (cfg.request_ack && bal >= 1) as u32 * 2;
    EpisodeSummary {
        duration: direct_ran as u32 + 2 * bal + ack,
        phases: phase_base + bal,
        max_node_load: scratch.loads.iter().copied().max().unwrap_or(0),
    }
}

/// Runs one self-contained balancer instance.
///
/// Returns the aggregate stats and one outcome per input message, in input
/// order. All sources and destinations must lie in `0..clique_size`.
pub fn run_clique_instance(
    instance_id: u64,
    messages: &[CliqueMessage],
    clique_size: u32,
    cfg: &BalancerConfig,
) -> Result<(CliqueStats, Vec<MessageOutcome>)> {
    if clique_size < 2 {
        return Err(Error::InvalidParameter(format!(
            "clique must have at least 2 nodes, got {clique_size}"
        )));
    }
    for msg in messages {
        if msg.dst >= clique_size {
            return Err(Error::DestOutsideClique { id: msg.id, dst: msg.dst });
        }
        if msg.src >= clique_size {
            return Err(Error::InvalidParameter(format!(
                "message {} source {} outside clique of {clique_size}",
                msg.id, msg.src
            )));
        }
    }
    let src: Vec<u32> = messages.iter().map(|m| m.src).collect();
    let dst: Vec<u32> = messages.iter().map(|m| m.dst).collect();
    let mut rng = SplitMix64(derive(&[cfg.rng_seed, TAG_CLIQUE, instance_id]));
    let mut scratch = CliqueScratch::default();
    let summary = run_episodes(clique_size, &src, &dst, cfg, &mut rng, &mut scratch);

    let direct_phases = (cfg.direct_first && summary.phases > 0) as u32;
    let outcomes = messages
        .iter()
        .enumerate()
        .map(|(e, m)| MessageOutcome {
            id: m.id,
            rounds: scratch.ep_rounds[e] as u32,
            hops: scratch.ep_hops[e] as u32,
            phase: scratch.ep_phase[e] as u32,
            ack_delay: if cfg.request_ack && scratch.ep_phase[e] as u32 > direct_phases {
                2
            } else {
                0
            },
        })
        .collect();
    let stats = CliqueStats {
        instance_id,
        rounds: summary.duration as u64,
        phases: summary.phases,
        loads: scratch.loads.clone(),
        remaining_per_phase: scratch.remaining.clone(),
    };
    Ok((stats, outcomes))
}
