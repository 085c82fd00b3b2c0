//! Message-level interface to the recursive router.
//!
//! [`route`] runs one routing instance at a chosen level over an explicit
//! message list and returns the updated messages together with per-level
//! metrics — the unit the experiment executor composes millions of times.
//! [`relay_candidates`] enumerates the relay set the router draws from, and
//! [`valiant_redistribute`] rewrites destinations for the two-pass
//! redistribution schemes.

use serde::{Deserialize, Serialize};

use crate::engine::{intermediate_for, EngineConfig, Sim, ValiantMode};
use crate::error::{Error, Result};
use crate::metrics::LevelMetrics;
use crate::rng::{derive, SplitMix64, TAG_VALIANT};
use crate::topology::{ClexTopology, NodeId};

/// One routed message. `holder` is its current position; the per-level
/// vectors accumulate link traversals and rounds (index 0 = level 1) and
/// grow to the routed level on the first [`route`] call.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub id: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub holder: NodeId,
    pub hops_per_level: Vec<u32>,
    pub rounds_per_level: Vec<u32>,
}

impl Message {
    pub fn new(id: u64, src: NodeId, dst: NodeId) -> Self {
        Message { id, src, dst, holder: src, hops_per_level: Vec::new(), rounds_per_level: Vec::new() }
    }
}

/// Result of routing one instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RouteOutcome {
    pub messages: Vec<Message>,
    /// Rows for levels 1..=routed level.
    pub level_metrics: Vec<LevelMetrics>,
}

/// Routes `messages` as one level-`level` instance: every holder and
/// destination must lie in the same level-`level` copy. On return each
/// message's holder equals its destination and its per-level tallies have
/// grown by this instance's work. Randomness is keyed off
/// `cfg.balancer.rng_seed`.
pub fn route(
    t: &ClexTopology,
    level: u32,
    messages: Vec<Message>,
    cfg: &EngineConfig,
) -> Result<RouteOutcome> {
    if level == 0 || level > t.levels() {
        return Err(Error::InvalidParameter(format!(
            "level {level} outside 1..={}",
            t.levels()
        )));
    }
    let copy = messages.first().map(|m| t.copy_id(m.holder, level));
    for m in &messages {
        let ok = (m.holder as u64) < t.n()
            && (m.dst as u64) < t.n()
            && t.copy_id(m.holder, level) == copy.unwrap()
            && t.copy_id(m.dst, level) == copy.unwrap();
        if !ok {
            return Err(Error::OutsideInstance { id: m.id, src: m.holder, dst: m.dst, level });
        }
    }

    let mut sim = Sim::new(t, cfg, cfg.balancer.rng_seed, messages.len(), level);
    let lv = level as usize - 1;
    for (f, m) in messages.iter().enumerate() {
        sim.src[f] = m.holder;
        sim.holder[f] = m.holder;
        sim.tgt[lv][f] = m.dst;
    }
    let all: Vec<u32> = (0..messages.len() as u32).collect();
    sim.route_level(level, &all, derive(&[cfg.balancer.rng_seed, 0]));

    let level_metrics = sim.level_metrics();
    let mut messages = messages;
    for (f, m) in messages.iter_mut().enumerate() {
        m.holder = sim.holder[f];
        if m.hops_per_level.len() < level as usize {
            m.hops_per_level.resize(level as usize, 0);
            m.rounds_per_level.resize(level as usize, 0);
        }
        for l in 0..level as usize {
            m.hops_per_level[l] += sim.hops[l][f];
            m.rounds_per_level[l] += sim.rounds[l][f];
        }
    }
    Ok(RouteOutcome { messages, level_metrics })
}

/// The nodes of level-(level−1) copy `copy_i` whose level-`level` link
/// leads into sibling copy `copy_j` — the relay set for that direction.
/// Copy ids are global: node / base^(level−1).
pub fn relay_candidates(
    t: &ClexTopology,
    copy_i: u64,
    copy_j: u64,
    level: u32,
) -> Result<Vec<NodeId>> {
    if level < 2 || level > t.levels() {
        return Err(Error::InvalidParameter(format!(
            "relays exist only for levels 2..={}, got {level}",
            t.levels()
        )));
    }
    let copy_size = (t.base() as u64).pow(level - 1);
    let copies = t.n() / copy_size;
    if copy_i >= copies || copy_j >= copies {
        return Err(Error::InvalidParameter(format!(
            "copy ids {copy_i}, {copy_j} outside 0..{copies} at level {level}"
        )));
    }
    if copy_i == copy_j {
        return Err(Error::InvalidParameter(
            "relay candidates are defined between two distinct copies".into(),
        ));
    }
    if copy_i / t.base() as u64 != copy_j / t.base() as u64 {
        return Err(Error::InvalidParameter(format!(
            "copies {copy_i} and {copy_j} lie in different level-{level} parents"
        )));
    }
    // Fix digit level−1 to copy_j's index within the parent; digits below
    // are free, digits above are copy_i's.
    let j = copy_j % t.base() as u64;
    let stride = copy_size / t.base() as u64; // base^(level−2)
    let first = copy_i * copy_size + j * stride;
    Ok((0..stride).map(|k| (first + k) as NodeId).collect())
}

/// Rewrites each message's destination to its first-pass intermediate under
/// the given redistribution mode (identity for [`ValiantMode::Off`]). The
/// caller routes, restores the true destinations, and routes again.
pub fn valiant_redistribute(
    t: &ClexTopology,
    messages: &[Message],
    mode: ValiantMode,
    seed: u64,
) -> Vec<Message> {
    let mut rng = SplitMix64(derive(&[seed, TAG_VALIANT]));
    messages
        .iter()
        .map(|m| {
            let mut out = m.clone();
            out.dst = intermediate_for(t, m.dst, mode, &mut rng);
            out
        })
        .collect()
}
