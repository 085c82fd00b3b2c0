//! CLEX and torus topologies: construction, neighbor queries, diameter,
//! physical embedding, and edge-list export.
//!
//! A CLEX graph with clique size `base` and `levels` recursion depth is built
//! as follows: level 1 is the complete graph on `base` nodes; the level-l
//! graph consists of `base` disjoint copies of the level-(l−1) graph plus,
//! for every node, `base` directed level-l edges given by a digit rule on
//! node labels. A node is identified with its digit vector
//! (v_1, …, v_levels), digit l being the index of the copy chosen at level l.
//! Node u = (u_1, …, u_L) has level-l out-edges (l ≥ 2) to every
//!
//! ```text
//! w = (u_1, …, u_{l−2}, j, u_{l−1}, u_{l+1}, …, u_L)    for all j
//! ```
//!
//! that is: digit l−1 becomes free, digit l receives u's old digit l−1, and
//! everything else is preserved. All `base` targets lie in the sub-copy
//! indexed by u_{l−1}, so a node's level-l edges can be pooled into a single
//! aggregated link of capacity `base` to its *swap partner* (digits l−1 and l
//! exchanged) — the variant preferred for real systems and used by the
//! router's crossing step.
//!
//! When u_{l−1} = u_l the rule produces one pair with w = u. That self-pair
//! is a real edge of the rule (the closed-form count
//! `base^levels · (base−1 + (levels−1)·base)` requires it) and degenerates
//! the aggregated link into a self-link; routing still schedules crossings
//! over it. Level-1 self-loops, by contrast, are modeled as zero-cost local
//! delivery and are not edges.
//!
//! Externally labels are 1-based dot-separated strings ("2.1.3", v_1 first);
//! internally a label is packed into a flat id in mixed radix with digit 1
//! least significant.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flat node identifier: mixed-radix packing of the digit vector.
pub type NodeId = u32;

/// Guard for exact all-pairs computations such as [`ClexTopology::diameter`].
pub const DIAMETER_GUARD: u64 = 100_000;

// ---------------------------------------------------------------------------
// CLEX
// ---------------------------------------------------------------------------

/// Parametric description of the recursive clique-expander.
///
/// Immutable after construction; all queries are label arithmetic, edges are
/// never materialized as lists.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClexTopology {
    base: u32,
    levels: u32,
    n: u64,
    /// base^0 ..= base^levels, for digit extraction.
    pow: Vec<u64>,
}

/// Builds the topology, validating that `base^levels` fits a node id.
pub fn build_clex(base: u32, levels: u32) -> Result<ClexTopology> {
    if base < 2 {
        return Err(Error::InvalidParameter(format!("base must be ≥ 2, got {base}")));
    }
    if levels < 1 {
        return Err(Error::InvalidParameter("levels must be ≥ 1".into()));
    }
    let mut pow = Vec::with_capacity(levels as usize + 1);
    let mut p: u64 = 1;
    pow.push(p);
    for _ in 0..levels {
        p = p
            .checked_mul(base as u64)
            .filter(|&v| v <= NodeId::MAX as u64 + 1)
            .ok_or(Error::SizeOverflow { base, levels })?;
        pow.push(p);
    }
    Ok(ClexTopology { base, levels, n: p, pow })
}

impl ClexTopology {
    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Total node count `base^levels`.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// The level parameter s with 1/s = levels.
    pub fn s(&self) -> f64 {
        1.0 / self.levels as f64
    }

    /// Uniform out-counting degree: (base−1) level-1 edges plus base edges on
    /// each of the levels 2..=levels, i.e. base·levels − 1.
    pub fn uniform_degree(&self) -> u64 {
        self.base as u64 * self.levels as u64 - 1
    }

    /// Total directed edge count: n · (base−1 + (levels−1)·base), self-pairs
    /// included.
    pub fn edge_count(&self) -> u64 {
        self.n * (self.base as u64 - 1 + (self.levels as u64 - 1) * self.base as u64)
    }

    /// 0-based digit at level `l` (1-based level index).
    #[inline]
    pub fn digit(&self, u: NodeId, l: u32) -> u32 {
        debug_assert!((1..=self.levels).contains(&l));
        ((u as u64 / self.pow[l as usize - 1]) % self.base as u64) as u32
    }

    /// Replaces the 0-based digit at level `l`.
    #[inline]
    pub fn with_digit(&self, u: NodeId, l: u32, d: u32) -> NodeId {
        debug_assert!(d < self.base);
        let p = self.pow[l as usize - 1];
        let old = self.digit(u, l) as u64;
        (u as u64 - old * p + d as u64 * p) as NodeId
    }

    /// Index of the level-`l` copy containing `u` (digits above l).
    #[inline]
    pub fn copy_id(&self, u: NodeId, l: u32) -> u32 {
        (u as u64 / self.pow[l as usize]) as u32
    }

    /// Swap partner at level `l` (digits l−1 and l exchanged, l ≥ 2): the far
    /// end of u's aggregated level-l link. Equals `u` when the digits agree.
    #[inline]
    pub fn swap_partner(&self, u: NodeId, l: u32) -> NodeId {
        debug_assert!(l >= 2);
        let a = self.digit(u, l - 1);
        let b = self.digit(u, l);
        self.with_digit(self.with_digit(u, l - 1, b), l, a)
    }

    /// 1-based digit vector for external use.
    pub fn label_of(&self, u: NodeId) -> NodeLabel {
        let digits = (1..=self.levels).map(|l| self.digit(u, l) + 1).collect();
        NodeLabel { digits }
    }

    /// Packs a 1-based label into its id, validating length and digit range.
    pub fn id_of(&self, label: &NodeLabel) -> Result<NodeId> {
        if label.digits.len() != self.levels as usize {
            return Err(Error::InvalidLabel(format!(
                "label {label} has {} digits, topology has {} levels",
                label.digits.len(),
                self.levels
            )));
        }
        let mut id: u64 = 0;
        for (i, &d) in label.digits.iter().enumerate() {
            if d < 1 || d > self.base {
                return Err(Error::InvalidLabel(format!(
                    "digit {d} of {label} outside 1..={}",
                    self.base
                )));
            }
            id += (d as u64 - 1) * self.pow[i];
        }
        Ok(id as NodeId)
    }

    /// Out-neighbors of `v` on level `l`, in deterministic (ascending-j)
    /// order. Level 1: the base−1 other members of v's clique. Level ≥ 2:
    /// the `base` digit-rule targets, self-pair included when it arises.
    pub fn level_out_neighbors(&self, v: &NodeLabel, l: u32) -> Result<Vec<NodeLabel>> {
        let id = self.id_of(v)?;
        let ids = self.level_out_neighbor_ids(id, l)?;
        Ok(ids.into_iter().map(|w| self.label_of(w)).collect())
    }

    /// Id-based variant of [`Self::level_out_neighbors`].
    pub fn level_out_neighbor_ids(&self, u: NodeId, l: u32) -> Result<Vec<NodeId>> {
        if l < 1 || l > self.levels {
            return Err(Error::InvalidLevel { level: l, levels: self.levels });
        }
        let mut out = Vec::with_capacity(self.base as usize);
        if l == 1 {
            let own = self.digit(u, 1);
            for j in 0..self.base {
                if j != own {
                    out.push(self.with_digit(u, 1, j));
                }
            }
        } else {
            // digit l−1 free, digit l receives the old digit l−1
            let moved = self.with_digit(u, l, self.digit(u, l - 1));
            for j in 0..self.base {
                out.push(self.with_digit(moved, l - 1, j));
            }
        }
        Ok(out)
    }

    /// In-neighbors of `u` on level `l`: nodes whose level-l edge targets u.
    /// For l ≥ 2 these carry digit l−1 := u's digit l, digit l free.
    pub fn level_in_neighbor_ids(&self, u: NodeId, l: u32) -> Result<Vec<NodeId>> {
        if l < 1 || l > self.levels {
            return Err(Error::InvalidLevel { level: l, levels: self.levels });
        }
        if l == 1 {
            return self.level_out_neighbor_ids(u, 1); // clique: symmetric
        }
        let moved = self.with_digit(u, l - 1, self.digit(u, l));
        let mut out = Vec::with_capacity(self.base as usize);
        for i in 0..self.base {
            out.push(self.with_digit(moved, l, i));
        }
        Ok(out)
    }

    /// All neighbors under the bidirectional-usage convention (level-l links
    /// usable both ways), deduplicated; the working set for BFS.
    fn undirected_neighbors(&self, u: NodeId, buf: &mut Vec<NodeId>) {
        buf.clear();
        let own = self.digit(u, 1);
        for j in 0..self.base {
            if j != own {
                buf.push(self.with_digit(u, 1, j));
            }
        }
        for l in 2..=self.levels {
            let fwd = self.with_digit(u, l, self.digit(u, l - 1));
            let back = self.with_digit(u, l - 1, self.digit(u, l));
            for j in 0..self.base {
                buf.push(self.with_digit(fwd, l - 1, j));
                buf.push(self.with_digit(back, l, j));
            }
        }
        buf.sort_unstable();
        buf.dedup();
    }

    /// Exact hop diameter by all-pairs BFS, edges usable in both directions.
    ///
    /// Refuses instances above [`DIAMETER_GUARD`] nodes; use
    /// [`Self::diameter_bound`] there.
    pub fn diameter(&self) -> Result<u32> {
        if self.n > DIAMETER_GUARD {
            return Err(Error::SizeGuard {
                n: self.n,
                guard: DIAMETER_GUARD,
                hint: "use diameter_bound() for large instances",
            });
        }
        let n = self.n as usize;
        let mut dist = vec![u32::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        let mut nbrs = Vec::new();
        let mut diameter = 0;
        for s in 0..n as NodeId {
            dist.fill(u32::MAX);
            dist[s as usize] = 0;
            queue.clear();
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                let du = dist[u as usize];
                diameter = diameter.max(du);
                self.undirected_neighbors(u, &mut nbrs);
                for &w in &nbrs {
                    if dist[w as usize] == u32::MAX {
                        dist[w as usize] = du + 1;
                        queue.push_back(w);
                    }
                }
            }
            debug_assert!(dist.iter().all(|&d| d != u32::MAX), "graph must be connected");
        }
        Ok(diameter)
    }

    /// The recursive bound 2^levels − 1 (D(l+1) ≤ 2·D(l) + 1, D(1) = 1).
    pub fn diameter_bound(&self) -> u64 {
        (1u64 << self.levels) - 1
    }

    /// Writes the directed edge list as `src<TAB>dst<TAB>level` lines with
    /// dot-separated 1-based labels, ordered by source digit tuple
    /// (v_1 most significant), then level, then destination tuple.
    pub fn export_edges<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in 0..self.n {
            let u = self.tuple_unrank(r);
            let src = self.label_of(u);
            for l in 1..=self.levels {
                let nbrs = self
                    .level_out_neighbor_ids(u, l)
                    .expect("level within range");
                // Ascending j is ascending destination tuple: targets differ
                // only in digit l−1 (l ≥ 2) or digit 1 (l = 1), and deeper
                // digits tie, so the free digit decides the tuple order.
                for t in nbrs {
                    writeln!(w, "{}\t{}\t{}", src, self.label_of(t), l)?;
                }
            }
        }
        Ok(())
    }

    /// The id whose digit tuple has lexicographic rank `r` (v_1 most
    /// significant) — the export iteration order. Tuple-lex rank is the
    /// digit-reversed id, so unranking reverses the digits of `r`.
    fn tuple_unrank(&self, mut r: u64) -> NodeId {
        let mut id: u64 = 0;
        for l in (1..=self.levels).rev() {
            let d = r / self.pow[l as usize - 1];
            r %= self.pow[l as usize - 1];
            id += d * self.pow[(self.levels - l) as usize];
        }
        id as NodeId
    }
}

// ---------------------------------------------------------------------------
// Node labels
// ---------------------------------------------------------------------------

/// External node name: 1-based digit vector, printed "v1.v2.…".
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeLabel {
    pub digits: Vec<u32>,
}

impl NodeLabel {
    pub fn new(digits: Vec<u32>) -> Self {
        NodeLabel { digits }
    }
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for d in &self.digits {
            if !first {
                write!(f, ".")?;
            }
            write!(f, "{d}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for NodeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .split('.')
            .map(|p| {
                p.parse::<u32>()
                    .map_err(|_| Error::InvalidLabel(format!("bad digit {p:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if digits.is_empty() {
            return Err(Error::InvalidLabel("empty label".into()));
        }
        Ok(NodeLabel { digits })
    }
}

// ---------------------------------------------------------------------------
// Torus
// ---------------------------------------------------------------------------

/// k1×k2×k3 torus baseline with wraparound links; every node has exactly six
/// incident links (counted with multiplicity when a dimension has length ≤ 2).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TorusTopology {
    pub k1: u32,
    pub k2: u32,
    pub k3: u32,
}

pub fn build_torus(k1: u32, k2: u32, k3: u32) -> Result<TorusTopology> {
    if k1 == 0 || k2 == 0 || k3 == 0 {
        return Err(Error::InvalidParameter("torus dimensions must be ≥ 1".into()));
    }
    let n = k1 as u64 * k2 as u64 * k3 as u64;
    if n > NodeId::MAX as u64 + 1 {
        return Err(Error::InvalidParameter(format!("torus size {n} overflows node ids")));
    }
    Ok(TorusTopology { k1, k2, k3 })
}

impl TorusTopology {
    pub fn n(&self) -> u64 {
        self.k1 as u64 * self.k2 as u64 * self.k3 as u64
    }

    pub fn dims(&self) -> [u32; 3] {
        [self.k1, self.k2, self.k3]
    }

    /// Coordinates of node `u` under row-major packing (x fastest).
    pub fn coords(&self, u: NodeId) -> [u32; 3] {
        let x = u % self.k1;
        let y = (u / self.k1) % self.k2;
        let z = u / (self.k1 * self.k2);
        [x, y, z]
    }

    pub fn id(&self, [x, y, z]: [u32; 3]) -> NodeId {
        x + self.k1 * (y + self.k2 * z)
    }

    /// Minimum axis-orthogonal bisection: 2 · (product of the two other
    /// dimension sizes), minimized over the cut dimension.
    pub fn bisection_edges(&self) -> u64 {
        let [k1, k2, k3] = [self.k1 as u64, self.k2 as u64, self.k3 as u64];
        (2 * k2 * k3).min(2 * k1 * k3).min(2 * k1 * k2)
    }
}

// ---------------------------------------------------------------------------
// Embedding
// ---------------------------------------------------------------------------

/// Physical placement in units of the minimal processor spacing.
///
/// CLEX copies pack recursively into cuboids (cubes whenever `base` is a
/// perfect cube; otherwise the tightest enclosing cuboid — an extension the
/// acceptance runs avoid), arranged row-major at every level. Torus nodes
/// sit on the unit grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Embedding {
    /// Position per node id.
    pub positions: Vec<[f64; 3]>,
    /// Maximal physical link length per level (index 0 = level 1). For CLEX
    /// level l this is √3·base^{l/3}/2; torus links have length 1.
    pub link_length: Vec<f64>,
    /// Side lengths of the enclosing cuboid.
    pub extent: [f64; 3],
}

/// Smallest cuboid (by volume, then max side) holding `m` unit cells,
/// returned with sides descending.
fn minimal_cuboid(m: u32) -> [u32; 3] {
    let mut best = [m, 1, 1];
    let mut best_vol = m as u64;
    let mut best_side = m;
    let cap = (m as f64).cbrt().ceil() as u32 + 1;
    for cz in 1..=cap {
        for cy in cz..=m {
            let cx = m.div_ceil(cz * cy);
            if cx < cy {
                break;
            }
            let vol = cx as u64 * cy as u64 * cz as u64;
            let side = cx;
            if vol < best_vol || (vol == best_vol && side < best_side) {
                best = [cx, cy, cz];
                best_vol = vol;
                best_side = side;
            }
        }
    }
    best
}

/// Row-major coordinates of cell `d` inside a cuboid (x fastest).
fn unrank_cell(d: u32, [cx, cy, _cz]: [u32; 3]) -> [u32; 3] {
    [d % cx, (d / cx) % cy, d / (cx * cy)]
}

impl ClexTopology {
    /// Recursive cube packing of the whole machine.
    pub fn embedding(&self) -> Embedding {
        let cell = minimal_cuboid(self.base);
        // Block dimensions per level: level-0 block is one node.
        let mut block = [1u64; 3];
        let mut blocks = Vec::with_capacity(self.levels as usize + 1);
        blocks.push(block);
        for _ in 0..self.levels {
            block = [
                block[0] * cell[0] as u64,
                block[1] * cell[1] as u64,
                block[2] * cell[2] as u64,
            ];
            blocks.push(block);
        }
        let mut positions = Vec::with_capacity(self.n as usize);
        for u in 0..self.n as NodeId {
            let mut pos = [0u64; 3];
            for l in 1..=self.levels {
                let c = unrank_cell(self.digit(u, l), cell);
                let inner = blocks[l as usize - 1];
                for a in 0..3 {
                    pos[a] += c[a] as u64 * inner[a];
                }
            }
            positions.push([pos[0] as f64, pos[1] as f64, pos[2] as f64]);
        }
        let link_length = (1..=self.levels)
            .map(|l| 3f64.sqrt() * (self.base as f64).powf(l as f64 / 3.0) / 2.0)
            .collect();
        let top = blocks[self.levels as usize];
        Embedding {
            positions,
            link_length,
            extent: [top[0] as f64, top[1] as f64, top[2] as f64],
        }
    }
}

impl TorusTopology {
    /// Unit-grid placement; all links have length 1.
    pub fn embedding(&self) -> Embedding {
        let mut positions = Vec::with_capacity(self.n() as usize);
        for u in 0..self.n() as NodeId {
            let [x, y, z] = self.coords(u);
            positions.push([x as f64, y as f64, z as f64]);
        }
        Embedding {
            positions,
            link_length: vec![1.0],
            extent: [self.k1 as f64, self.k2 as f64, self.k3 as f64],
        }
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
