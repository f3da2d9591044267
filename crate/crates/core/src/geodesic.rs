//! Exact FPP shortest paths on the lazily generated infinite graph.
//!
//! The production engine ([`shortest_path`]) is bidirectional best-first
//! settlement with decrease-key-free heaps and the consistent potential
//! pair derived from the distribution floor `c`:
//! `P(v) = c/2 * (hops(v, target) - hops(v, source))`, where `hops` counts
//! tree distance plus `|z|` displacement. Both directions run plain
//! Dijkstra on the (nonnegative) reduced weights, so the returned distance
//! is the exact minimum; the potential and the two-sided frontier only cut
//! down how much of the exponentially growing graph gets settled. For
//! floorless families the potential vanishes and the search degenerates to
//! plain bidirectional Dijkstra.
//!
//! Two independent cross-checks live alongside it:
//! [`shortest_path_unidirectional`], a one-sided A* with the full-strength
//! goal potential, and `oracle_shortest_path`, which materializes a finite
//! ball explicitly and runs exhaustive Bellman-Ford relaxation.

use crate::num::{real, Real};
use crate::rng;
use crate::topology::{
    canonical_edge_key, straight_path, tree_route, EdgeKey, EdgeKind, Topology, TopologyError,
    TreeWord, Vertex,
};
use crate::weights::WeightOracle;
use indexmap::IndexSet;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet, VecDeque};
use std::hash::{BuildHasherDefault, Hasher};
use thiserror::Error;

/// Hard cap on settled vertices; floorless weights can make exploration
/// explode, and we fail loudly instead of approximating.
pub const DEFAULT_BUDGET: usize = 20_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesicError {
    #[error("budget exceeded after settling {settled} vertices")]
    BudgetExceeded { settled: usize },
    #[error("brute-force oracle requires a distribution floor > 0")]
    FloorRequired,
    #[error("vertex {0} is outside the materialized ball")]
    OutsideBall(Vertex),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// Knobs for one search. `watch_words` are tree words whose visitation by
/// the geodesic's tree projection is audited (event-B bookkeeping).
#[derive(Debug, Clone, Default)]
pub struct SearchOptions {
    pub budget: Option<usize>,
    pub watch_words: Vec<TreeWord>,
}

/// Statistics of the returned geodesic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathStats {
    /// `|gamma|`, the number of edges on the path.
    pub edge_count: usize,
    /// `|V_gamma|`, distinct tree words among the path's vertices.
    pub tree_projection_size: usize,
    /// For each watched word: does some path vertex project into its subtree
    /// (i.e. have it as a prefix)?
    pub visits_word: BTreeMap<TreeWord, bool>,
}

/// Exact FPP distance with the minimizing path and search diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicResult<R> {
    pub distance: R,
    /// Source to target inclusive.
    pub path: Vec<Vertex>,
    /// Settled vertices.
    pub explored: usize,
    pub stats: PathStats,
    /// With floor `c > 0`: the combinatorial radius `ceil(U/c)` within which
    /// the search provably terminates, `U` the weight of the canonical
    /// feasible path. `None` for floorless specs.
    pub ball_radius_bound: Option<u64>,
}

/// Canonical feasible path between any two vertices: the unique tree route
/// at the source height, then a straight Z run in the target column.
pub fn canonical_route(source: &Vertex, target: &Vertex) -> Vec<EdgeKey> {
    let mut edges = tree_route(source.z, &source.word, &target.word);
    edges.extend(straight_path(source.z, target.z, &target.word));
    edges
}

fn route_in_topology(topo: &Topology, route: &[EdgeKey]) -> bool {
    route.iter().all(|e| {
        let (a, b) = e.endpoints();
        topo.contains(&a) && topo.contains(&b)
    })
}

const NONE: u32 = u32::MAX;

/// One interned tree word. Everything the search needs per word — topology
/// membership, tree distance to the target word, the letter-hash fold — is
/// derived from the parent node in O(1) at creation time, so the hot loop
/// never touches letter vectors.
struct WordNode {
    parent: u32,
    letter: u8,
    depth: u32,
    /// Word-level membership in the search topology.
    in_topo: bool,
    /// Is this word a prefix of the target (resp. source) word?
    is_target_prefix: bool,
    is_source_prefix: bool,
    /// For pruned/restricted variants: does this word still agree with the
    /// excised/anchor word on their overlap?
    on_line: bool,
    /// `tree_distance(word, target.word)` and `tree_distance(word, source.word)`.
    dist_to_target: u32,
    dist_to_source: u32,
    /// Letter fold over complete 8-letter chunks (see `weights::fold_letters`).
    acc_prefix: u64,
    partial_bits: u64,
    partial_count: u8,
    /// Full fold including the trailing partial chunk; feeds `weight_raw`.
    acc_final: u64,
    /// Child word ids by letter, `NONE` until created.
    children: Box<[u32]>,
}

enum ArenaKind {
    Plain,
    Pruned(TreeWord),
    Restricted(TreeWord),
}

/// Lazily grown tree-word table anchored at the tree root, specialized to
/// one (topology, target word) pair.
struct WordArena {
    d: u8,
    root_full_degree: bool,
    kind: ArenaKind,
    source: TreeWord,
    target: TreeWord,
    nodes: Vec<WordNode>,
}

impl WordArena {
    fn new(topo: &Topology, source: &TreeWord, target: &TreeWord) -> Self {
        let (kind, root_full_degree) = match topo {
            Topology::Full { .. } => (ArenaKind::Plain, true),
            Topology::DAry { .. } => (ArenaKind::Plain, false),
            Topology::Pruned { excised, .. } => (ArenaKind::Pruned(excised.clone()), true),
            Topology::Restricted { anchor, .. } => (ArenaKind::Restricted(anchor.clone()), false),
        };
        let d = topo.d();
        let root = WordNode {
            parent: NONE,
            letter: 0,
            depth: 0,
            in_topo: topo.contains_word(&TreeWord::root()),
            is_target_prefix: true,
            is_source_prefix: true,
            on_line: true,
            dist_to_target: target.len() as u32,
            dist_to_source: source.len() as u32,
            acc_prefix: 0,
            partial_bits: 0,
            partial_count: 0,
            acc_final: 0,
            children: vec![NONE; d as usize].into_boxed_slice(),
        };
        WordArena {
            d,
            root_full_degree,
            kind,
            source: source.clone(),
            target: target.clone(),
            nodes: vec![root],
        }
    }

    /// Child slots enumerated below a word of this depth (the membership
    /// filter is applied separately via `in_topo`).
    fn child_count(&self, depth: u32) -> u8 {
        if depth == 0 && self.root_full_degree {
            self.d
        } else {
            self.d - 1
        }
    }

    fn ensure_child(&mut self, pid: u32, letter: u8) -> u32 {
        let existing = self.nodes[pid as usize].children[letter as usize];
        if existing != NONE {
            return existing;
        }
        let p = &self.nodes[pid as usize];
        let p_depth = p.depth as usize;
        let depth = p.depth + 1;
        let is_target_prefix = p.is_target_prefix
            && p_depth < self.target.len()
            && self.target.letters()[p_depth] == letter;
        let dist_to_target = if is_target_prefix {
            p.dist_to_target - 1
        } else {
            p.dist_to_target + 1
        };
        let is_source_prefix = p.is_source_prefix
            && p_depth < self.source.len()
            && self.source.letters()[p_depth] == letter;
        let dist_to_source = if is_source_prefix {
            p.dist_to_source - 1
        } else {
            p.dist_to_source + 1
        };
        let (on_line, in_topo) = match &self.kind {
            ArenaKind::Plain => (true, true),
            ArenaKind::Pruned(x) => {
                let on = p.on_line && (p_depth >= x.len() || x.letters()[p_depth] == letter);
                (on, !(on && depth as usize >= x.len()))
            }
            ArenaKind::Restricted(a) => {
                let on = p.on_line && (p_depth >= a.len() || a.letters()[p_depth] == letter);
                (on, on && depth as usize >= a.len())
            }
        };
        let (mut acc_prefix, mut bits, mut cnt) = (p.acc_prefix, p.partial_bits, p.partial_count);
        bits |= (letter as u64) << (8 * cnt);
        cnt += 1;
        if cnt == 8 {
            acc_prefix = rng::mix64(acc_prefix ^ bits);
            bits = 0;
            cnt = 0;
        }
        let acc_final = if cnt > 0 {
            rng::mix64(acc_prefix ^ bits)
        } else {
            acc_prefix
        };
        let id = self.nodes.len() as u32;
        self.nodes.push(WordNode {
            parent: pid,
            letter,
            depth,
            in_topo,
            is_target_prefix,
            is_source_prefix,
            on_line,
            dist_to_target,
            dist_to_source,
            acc_prefix,
            partial_bits: bits,
            partial_count: cnt,
            acc_final,
            children: vec![NONE; self.d as usize].into_boxed_slice(),
        });
        self.nodes[pid as usize].children[letter as usize] = id;
        id
    }

    /// Interns a full word by walking its ancestor chain from the root.
    fn intern(&mut self, w: &TreeWord) -> u32 {
        let mut id = 0u32;
        for &letter in w.letters() {
            id = self.ensure_child(id, letter);
        }
        id
    }

    fn word_of(&self, mut id: u32) -> TreeWord {
        let mut letters = Vec::new();
        while self.nodes[id as usize].parent != NONE {
            letters.push(self.nodes[id as usize].letter);
            id = self.nodes[id as usize].parent;
        }
        letters.reverse();
        TreeWord::from_letters(&letters)
    }
}

/// Hasher for pre-mixed 64-bit state keys.
#[derive(Default)]
struct Mix64Hasher(u64);

impl Hasher for Mix64Hasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = rng::mix64(self.0 ^ b as u64);
        }
    }

    fn write_u64(&mut self, x: u64) {
        self.0 = rng::mix64(self.0 ^ x);
    }
}

fn pack_state(wid: u32, z: i64) -> u64 {
    debug_assert!(i32::try_from(z).is_ok(), "z coordinate out of packed range");
    ((wid as u64) << 32) | (z as i32 as u32 as u64)
}

/// Packs (priority, discovery id) into one integer whose natural order is
/// the heap order. Distances and potentials are nonnegative and finite, so
/// the IEEE-754 bit pattern of the f64 priority is order-preserving; ids
/// break ties deterministically. Works for f32 scalars too because the
/// widening conversion to f64 is exact and monotone.
fn pack_heap_entry<R: Real>(priority: R, id: u32) -> u128 {
    // clamp away sub-ulp negatives that rounding of reduced weights can
    // produce; a negative bit pattern would invert the integer order
    let bits = priority.to_f64().expect("priority is finite").max(0.0).to_bits();
    ((bits as u128) << 32) | id as u128
}

/// Reference engine: one-sided best-first settlement from the source.
///
/// Exactness is guaranteed by settlement order with nonnegative reduced
/// weights; the search stops the moment the target settles. Kept alongside
/// the bidirectional engine as an independent cross-check; prefer
/// [`shortest_path`], whose frontier grows roughly as the square root of
/// this one's.
pub fn shortest_path_unidirectional<R: Real>(
    topo: &Topology,
    oracle: &WeightOracle<R>,
    source: &Vertex,
    target: &Vertex,
    opts: &SearchOptions,
) -> Result<GeodesicResult<R>, GeodesicError> {
    for v in [source, target] {
        if !topo.contains(v) {
            return Err(TopologyError::VertexNotInTopology(v.clone()).into());
        }
    }
    let budget = opts.budget.unwrap_or(DEFAULT_BUDGET);
    let floor = oracle.spec().floor();

    let route = canonical_route(source, target);
    let ball_radius_bound = if floor > R::zero() && route_in_topology(topo, &route) {
        let u = oracle.path_weight(&route);
        Some((u / floor).ceil().to_u64().unwrap_or(u64::MAX))
    } else {
        None
    };

    let mut arena = WordArena::new(topo, &source.word, &target.word);
    let src_wid = arena.intern(&source.word);
    let tgt_wid = arena.intern(&target.word);
    let tgt_z = target.z;

    // States are (word id, z) pairs numbered in discovery order; equal-
    // priority heap ties break on that number, so runs are reproducible.
    let mut key_of: HashMap<u64, u32, BuildHasherDefault<Mix64Hasher>> = HashMap::default();
    let mut states: Vec<(u32, i64)> = Vec::new();
    let mut dist: Vec<R> = Vec::new();
    let mut pred: Vec<u32> = Vec::new();
    let mut settled: Vec<bool> = Vec::new();
    let mut heap: BinaryHeap<Reverse<u128>> = BinaryHeap::new();

    let potential = |node_dist_to_target: u32, z: i64| -> R {
        if floor > R::zero() {
            let hops = node_dist_to_target as u64 + (z - tgt_z).unsigned_abs();
            floor * real(hops as f64)
        } else {
            R::zero()
        }
    };

    key_of.insert(pack_state(src_wid, source.z), 0);
    states.push((src_wid, source.z));
    dist.push(R::zero());
    pred.push(NONE);
    settled.push(false);
    heap.push(Reverse(pack_heap_entry(
        potential(arena.nodes[src_wid as usize].dist_to_target, source.z),
        0,
    )));

    let mut settled_count = 0usize;
    let target_id = loop {
        let Some(Reverse(entry)) = heap.pop() else {
            // all variants are connected, so an empty heap means the budget
            // logic is broken; treat as exhaustion
            return Err(GeodesicError::BudgetExceeded {
                settled: settled_count,
            });
        };
        let vid = (entry & u32::MAX as u128) as usize;
        if settled[vid] {
            continue;
        }
        settled[vid] = true;
        settled_count += 1;
        let (wid, z) = states[vid];
        if wid == tgt_wid && z == tgt_z {
            break vid;
        }
        if settled_count >= budget {
            return Err(GeodesicError::BudgetExceeded {
                settled: settled_count,
            });
        }
        let g = dist[vid];
        let (depth, parent_wid, acc_self) = {
            let n = &arena.nodes[wid as usize];
            (n.depth, n.parent, n.acc_final)
        };

        let relax = |arena: &WordArena,
                         states: &mut Vec<(u32, i64)>,
                         dist: &mut Vec<R>,
                         pred: &mut Vec<u32>,
                         settled: &mut Vec<bool>,
                         heap: &mut BinaryHeap<Reverse<u128>>,
                         key_of: &mut HashMap<u64, u32, BuildHasherDefault<Mix64Hasher>>,
                         uwid: u32,
                         uz: i64,
                         cand: R| {
            let next = states.len() as u32;
            let uid = *key_of.entry(pack_state(uwid, uz)).or_insert(next);
            let uid_usize = uid as usize;
            if uid == next {
                states.push((uwid, uz));
                dist.push(cand);
                pred.push(vid as u32);
                settled.push(false);
            } else {
                if settled[uid_usize] || cand >= dist[uid_usize] {
                    return;
                }
                dist[uid_usize] = cand;
                pred[uid_usize] = vid as u32;
            }
            heap.push(Reverse(pack_heap_entry(
                cand + potential(arena.nodes[uwid as usize].dist_to_target, uz),
                uid,
            )));
        };

        // tree parent (the edge anchors at the deeper endpoint: this word)
        if parent_wid != NONE && arena.nodes[parent_wid as usize].in_topo {
            let w = oracle.weight_raw(EdgeKind::Tree, z, depth as u64, acc_self);
            relax(
                &arena, &mut states, &mut dist, &mut pred, &mut settled, &mut heap, &mut key_of,
                parent_wid, z, g + w,
            );
        }
        // tree children by ascending letter
        for letter in 0..arena.child_count(depth) {
            let cid = arena.ensure_child(wid, letter);
            if arena.nodes[cid as usize].in_topo {
                let w = oracle.weight_raw(
                    EdgeKind::Tree,
                    z,
                    (depth + 1) as u64,
                    arena.nodes[cid as usize].acc_final,
                );
                relax(
                    &arena, &mut states, &mut dist, &mut pred, &mut settled, &mut heap,
                    &mut key_of, cid, z, g + w,
                );
            }
        }
        // z-1 then z+1 (the z-edge anchors at its lower endpoint)
        let w_down = oracle.weight_raw(EdgeKind::Z, z - 1, depth as u64, acc_self);
        relax(
            &arena, &mut states, &mut dist, &mut pred, &mut settled, &mut heap, &mut key_of,
            wid, z - 1, g + w_down,
        );
        let w_up = oracle.weight_raw(EdgeKind::Z, z, depth as u64, acc_self);
        relax(
            &arena, &mut states, &mut dist, &mut pred, &mut settled, &mut heap, &mut key_of,
            wid, z + 1, g + w_up,
        );
    };

    // reconstruct source -> target
    let mut path = Vec::new();
    let mut cur = target_id;
    loop {
        let (wid, z) = states[cur];
        path.push(Vertex::new(arena.word_of(wid), z));
        if pred[cur] == NONE {
            break;
        }
        cur = pred[cur] as usize;
    }
    path.reverse();

    let stats = path_stats(&path, &opts.watch_words);
    Ok(GeodesicResult {
        distance: dist[target_id],
        path,
        explored: settled_count,
        stats,
        ball_radius_bound,
    })
}

/// One direction of the bidirectional search: its own state interner,
/// label arrays and queue. Distances are stored in *reduced* units (true
/// cost shifted by the potential), in which both directions run plain
/// nonnegative Dijkstra.
struct Side<R> {
    key_of: HashMap<u64, u32, BuildHasherDefault<Mix64Hasher>>,
    states: Vec<(u32, i64)>,
    dist: Vec<R>,
    pred: Vec<u32>,
    settled: Vec<bool>,
    heap: BinaryHeap<Reverse<u128>>,
    settled_count: usize,
}

impl<R: Real> Side<R> {
    fn seeded(wid: u32, z: i64) -> Self {
        let mut side = Side {
            key_of: HashMap::default(),
            states: Vec::new(),
            dist: Vec::new(),
            pred: Vec::new(),
            settled: Vec::new(),
            heap: BinaryHeap::new(),
            settled_count: 0,
        };
        side.key_of.insert(pack_state(wid, z), 0);
        side.states.push((wid, z));
        side.dist.push(R::zero());
        side.pred.push(NONE);
        side.settled.push(false);
        side.heap.push(Reverse(pack_heap_entry(R::zero(), 0)));
        side
    }

    /// Smallest queued priority (possibly of a stale entry, which is still
    /// a valid lower bound on every future settlement).
    fn top(&self) -> Option<f64> {
        self.heap
            .peek()
            .map(|Reverse(e)| f64::from_bits((e >> 32) as u64))
    }

    /// Walks the predecessor chain from `id` back to this side's seed.
    fn chain_to_seed(&self, arena: &WordArena, id: u32) -> Vec<Vertex> {
        let mut out = Vec::new();
        let mut cur = id as usize;
        loop {
            let (wid, z) = self.states[cur];
            out.push(Vertex::new(arena.word_of(wid), z));
            if self.pred[cur] == NONE {
                break;
            }
            cur = self.pred[cur] as usize;
        }
        out
    }
}

/// The average potential `P(v) = c/2 * (hops(v, target) - hops(v, source))`
/// with `c` the distribution floor; the consistent pair `(P, -P)` keeps
/// both directions' reduced weights nonnegative because adjacent vertices
/// change each hop count by exactly one.
fn pot<R: Real>(arena: &WordArena, wid: u32, z: i64, sz: i64, tz: i64, c2: R) -> R {
    let n = &arena.nodes[wid as usize];
    let ht = n.dist_to_target as i64 + (z - tz).abs();
    let hs = n.dist_to_source as i64 + (z - sz).abs();
    c2 * real((ht - hs) as f64)
}

/// Settles state `vid` on `this` side and relaxes its neighbors. `best`
/// tracks the cheapest meeting seen so far as
/// `(reduced cost sum, forward state id, backward state id)`.
#[allow(clippy::too_many_arguments)]
fn expand_side<R: Real>(
    arena: &mut WordArena,
    oracle: &WeightOracle<R>,
    this: &mut Side<R>,
    other: &Side<R>,
    vid: usize,
    forward: bool,
    sz: i64,
    tz: i64,
    c2: R,
    best: &mut Option<(R, u32, u32)>,
) {
    let (wid, z) = this.states[vid];
    let g = this.dist[vid];
    let (depth, parent_wid, acc_self) = {
        let n = &arena.nodes[wid as usize];
        (n.depth, n.parent, n.acc_final)
    };
    let px = pot(arena, wid, z, sz, tz, c2);

    let mut relax = |arena: &WordArena, this: &mut Side<R>, uwid: u32, uz: i64, w: R| {
        let py = pot(arena, uwid, uz, sz, tz, c2);
        // forward reduced weight w + P(y) - P(x); backward flips the sign
        let cand = if forward {
            g + (w + (py - px))
        } else {
            g + (w - (py - px))
        };
        let key = pack_state(uwid, uz);
        let next = this.states.len() as u32;
        let uid = *this.key_of.entry(key).or_insert(next);
        let uix = uid as usize;
        if uid == next {
            this.states.push((uwid, uz));
            this.dist.push(cand);
            this.pred.push(vid as u32);
            this.settled.push(false);
        } else {
            if this.settled[uix] || cand >= this.dist[uix] {
                return;
            }
            this.dist[uix] = cand;
            this.pred[uix] = vid as u32;
        }
        this.heap.push(Reverse(pack_heap_entry(cand, uid)));
        if let Some(&oid) = other.key_of.get(&key) {
            let m = cand + other.dist[oid as usize];
            if best.as_ref().map_or(true, |b| m < b.0) {
                *best = Some(if forward {
                    (m, uid, oid)
                } else {
                    (m, oid, uid)
                });
            }
        }
    };

    if parent_wid != NONE && arena.nodes[parent_wid as usize].in_topo {
        let w = oracle.weight_raw(EdgeKind::Tree, z, depth as u64, acc_self);
        relax(arena, this, parent_wid, z, w);
    }
    for letter in 0..arena.child_count(depth) {
        let cid = arena.ensure_child(wid, letter);
        if arena.nodes[cid as usize].in_topo {
            let w = oracle.weight_raw(
                EdgeKind::Tree,
                z,
                (depth + 1) as u64,
                arena.nodes[cid as usize].acc_final,
            );
            relax(arena, this, cid, z, w);
        }
    }
    let w_down = oracle.weight_raw(EdgeKind::Z, z - 1, depth as u64, acc_self);
    relax(arena, this, wid, z - 1, w_down);
    let w_up = oracle.weight_raw(EdgeKind::Z, z, depth as u64, acc_self);
    relax(arena, this, wid, z + 1, w_up);
}

/// Exact FPP distance `d_X(source, target)` in `topo` under `oracle`.
///
/// Bidirectional best-first settlement: two Dijkstra frontiers grow from
/// the endpoints in reduced weights derived from the consistent potential
/// pair `(P, -P)` (see [`pot`]), and the run stops once the two queue tops
/// prove no unseen meeting can beat the best one recorded. Exactness is
/// the classical bidirectional-Dijkstra argument; the payoff on this graph
/// family is drastic, since one-sided frontiers grow exponentially in the
/// distance while the two half-frontiers grow exponentially in half of it.
/// Errors with `BudgetExceeded` when the combined settled count passes the
/// budget.
pub fn shortest_path<R: Real>(
    topo: &Topology,
    oracle: &WeightOracle<R>,
    source: &Vertex,
    target: &Vertex,
    opts: &SearchOptions,
) -> Result<GeodesicResult<R>, GeodesicError> {
    for v in [source, target] {
        if !topo.contains(v) {
            return Err(TopologyError::VertexNotInTopology(v.clone()).into());
        }
    }
    let budget = opts.budget.unwrap_or(DEFAULT_BUDGET);
    let floor = oracle.spec().floor();

    let route = canonical_route(source, target);
    let ball_radius_bound = if floor > R::zero() && route_in_topology(topo, &route) {
        let u = oracle.path_weight(&route);
        Some((u / floor).ceil().to_u64().unwrap_or(u64::MAX))
    } else {
        None
    };

    let mut arena = WordArena::new(topo, &source.word, &target.word);
    let src_wid = arena.intern(&source.word);
    let tgt_wid = arena.intern(&target.word);
    let (sz, tz) = (source.z, target.z);
    let c2 = floor * real(0.5);

    let mut fwd: Side<R> = Side::seeded(src_wid, sz);
    let mut bwd: Side<R> = Side::seeded(tgt_wid, tz);
    // (reduced meeting cost, forward state id, backward state id); seeds
    // meet immediately iff source == target
    let mut best: Option<(R, u32, u32)> = None;
    if src_wid == tgt_wid && sz == tz {
        best = Some((R::zero(), 0, 0));
    }

    loop {
        let t0 = fwd.top();
        let t1 = bwd.top();
        if let Some((mu, _, _)) = best {
            let sum = t0.unwrap_or(f64::INFINITY) + t1.unwrap_or(f64::INFINITY);
            if sum >= mu.to_f64().expect("reduced costs are finite") {
                break;
            }
        }
        let use_fwd = match (t0, t1) {
            (None, None) => {
                // all variants are connected, so two drained queues without
                // a proven meeting mean the budget logic is broken
                return Err(GeodesicError::BudgetExceeded {
                    settled: fwd.settled_count + bwd.settled_count,
                });
            }
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => a <= b,
        };
        let vid = {
            let this = if use_fwd { &mut fwd } else { &mut bwd };
            let Reverse(entry) = this.heap.pop().expect("peeked top exists");
            let vid = (entry & u32::MAX as u128) as usize;
            if this.settled[vid] {
                continue;
            }
            this.settled[vid] = true;
            this.settled_count += 1;
            vid
        };
        if fwd.settled_count + bwd.settled_count >= budget {
            return Err(GeodesicError::BudgetExceeded {
                settled: fwd.settled_count + bwd.settled_count,
            });
        }
        let (this, other) = if use_fwd {
            (&mut fwd, &bwd)
        } else {
            (&mut bwd, &fwd)
        };
        expand_side(
            &mut arena, oracle, this, other, vid, use_fwd, sz, tz, c2, &mut best,
        );
    }

    let (mu, fid, bid) = best.expect("loop breaks only with a meeting");
    // undo the potential shift: reduced sums exceed the true cost by
    // P(target) - P(source)
    let p_s = pot(&arena, src_wid, sz, sz, tz, c2);
    let p_t = pot(&arena, tgt_wid, tz, sz, tz, c2);
    let distance = mu + (p_s - p_t);

    let mut path = fwd.chain_to_seed(&arena, fid);
    path.reverse();
    let back = bwd.chain_to_seed(&arena, bid);
    debug_assert_eq!(path.last(), back.first());
    path.extend(back.into_iter().skip(1));

    let stats = path_stats(&path, &opts.watch_words);
    Ok(GeodesicResult {
        distance,
        path,
        explored: fwd.settled_count + bwd.settled_count,
        stats,
        ball_radius_bound,
    })
}

fn path_stats(path: &[Vertex], watch_words: &[TreeWord]) -> PathStats {
    let words: HashSet<&TreeWord> = path.iter().map(|v| &v.word).collect();
    let visits_word = watch_words
        .iter()
        .map(|w| {
            let hit = path.iter().any(|v| v.word.is_descendant_of(w));
            (w.clone(), hit)
        })
        .collect();
    PathStats {
        edge_count: path.len().saturating_sub(1),
        tree_projection_size: words.len(),
        visits_word,
    }
}

/// Explicit finite graph with realized weights; the playground of the
/// brute-force oracle. Fields are public so tests can build tiny instances
/// by hand.
#[derive(Debug, Clone)]
pub struct MaterializedBall<R> {
    pub vertices: Vec<Vertex>,
    /// Undirected edges as index pairs with realized weights.
    pub edges: Vec<(usize, usize, R)>,
}

impl<R> MaterializedBall<R> {
    pub fn index_of(&self, v: &Vertex) -> Option<usize> {
        self.vertices.iter().position(|u| u == v)
    }
}

/// Materializes the combinatorial ball of the given hop radius around
/// `center`, with every edge weight realized from the oracle.
pub fn materialize_ball<R: Real>(
    topo: &Topology,
    oracle: &WeightOracle<R>,
    center: &Vertex,
    radius: usize,
) -> Result<MaterializedBall<R>, GeodesicError> {
    let mut ids: IndexSet<Vertex> = IndexSet::new();
    let mut depth: Vec<usize> = Vec::new();
    let mut edges: Vec<(usize, usize, R)> = Vec::new();
    let mut seen_edges: HashSet<EdgeKey> = HashSet::new();
    let mut queue = VecDeque::new();

    ids.insert(center.clone());
    depth.push(0);
    queue.push_back(0usize);
    while let Some(vid) = queue.pop_front() {
        if depth[vid] == radius {
            continue;
        }
        let v = ids.get_index(vid).unwrap().clone();
        for (u, key) in topo.neighbors(&v)? {
            let (uid, fresh) = ids.insert_full(u);
            if fresh {
                depth.push(depth[vid] + 1);
                queue.push_back(uid);
            }
            if seen_edges.insert(key.clone()) {
                edges.push((vid, uid, oracle.weight(&key)));
            }
        }
    }
    Ok(MaterializedBall {
        vertices: ids.into_iter().collect(),
        edges,
    })
}

/// Exact distance on an explicit finite graph by exhaustive relaxation
/// (Bellman-Ford over the undirected edge list, early exit when a full
/// round makes no update).
pub fn oracle_shortest_path<R: Real>(
    ball: &MaterializedBall<R>,
    source: &Vertex,
    target: &Vertex,
) -> Result<R, GeodesicError> {
    let s = ball
        .index_of(source)
        .ok_or_else(|| GeodesicError::OutsideBall(source.clone()))?;
    let t = ball
        .index_of(target)
        .ok_or_else(|| GeodesicError::OutsideBall(target.clone()))?;
    let inf = R::infinity();
    let mut dist = vec![inf; ball.vertices.len()];
    dist[s] = R::zero();
    for _round in 0..ball.vertices.len().saturating_sub(1) {
        let mut changed = false;
        for &(a, b, w) in &ball.edges {
            if dist[a] + w < dist[b] {
                dist[b] = dist[a] + w;
                changed = true;
            }
            if dist[b] + w < dist[a] {
                dist[a] = dist[b] + w;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(dist[t])
}

/// Full brute-force pipeline: weight the canonical feasible path, size the
/// ball as `ceil(U/floor)`, materialize it and relax exhaustively. Requires
/// a distribution floor so the geodesic provably cannot exit the ball.
pub fn oracle_distance<R: Real>(
    topo: &Topology,
    oracle: &WeightOracle<R>,
    source: &Vertex,
    target: &Vertex,
) -> Result<R, GeodesicError> {
    let floor = oracle.spec().floor();
    if floor <= R::zero() {
        return Err(GeodesicError::FloorRequired);
    }
    let route = canonical_route(source, target);
    if !route_in_topology(topo, &route) {
        return Err(GeodesicError::FloorRequired);
    }
    let u = oracle.path_weight(&route);
    let radius = (u / floor).ceil().to_usize().unwrap();
    let ball = materialize_ball(topo, oracle, source, radius)?;
    oracle_shortest_path(&ball, source, target)
}

/// `|gamma|_X` for an explicit edge list.
pub fn path_weight<R: Real>(oracle: &WeightOracle<R>, edges: &[EdgeKey]) -> R {
    oracle.path_weight(edges)
}

/// Realized weight of the edge between two adjacent vertices.
pub fn edge_weight_between<R: Real>(
    oracle: &WeightOracle<R>,
    u: &Vertex,
    v: &Vertex,
) -> Result<R, TopologyError> {
    Ok(oracle.weight(&canonical_edge_key(u, v)?))
}

#[allow(dead_code)]
fn _assert_send<R: Real>(r: GeodesicResult<R>) -> impl Send {
    r
}
