//! Vertex and edge addressing for the four graph variants, with lazy
//! neighbor enumeration. No global graph is ever built: a vertex is a tree
//! word (path of child indices from the root) plus a Z coordinate, and the
//! topology is a predicate plus a child-count rule.
//!
//! Conventions:
//! - In the d-regular tree `T_d` the root has `d` children (indices `0..d`)
//!   and every other vertex has `d-1` children (indices `0..d-1`), so every
//!   vertex has tree-degree `d`.
//! - In the d-ary tree `T_{d-1,d}` the root has `d-1` children and every
//!   other vertex has `d-1` children plus its parent.
//! - Words are canonical: two vertices are equal iff word and z agree.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("vertex {0} is not in the topology")]
    VertexNotInTopology(Vertex),
    #[error("vertices {0} and {1} are not adjacent")]
    NotAdjacent(Vertex, Vertex),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("cannot parse {0:?} as a vertex")]
    ParseVertex(String),
}

/// Path of child indices from the root; the empty word is the root itself.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct TreeWord(Vec<u8>);

impl TreeWord {
    pub fn root() -> Self {
        TreeWord(Vec::new())
    }

    pub fn from_letters(letters: &[u8]) -> Self {
        TreeWord(letters.to_vec())
    }

    /// All-zero word of the given depth (the canonical descendant line).
    pub fn zeros(depth: usize) -> Self {
        TreeWord(vec![0; depth])
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, letter: u8) -> Self {
        let mut w = self.0.clone();
        w.push(letter);
        TreeWord(w)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.0.is_empty() {
            None
        } else {
            Some(TreeWord(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// Prefix of the given length.
    pub fn prefix(&self, len: usize) -> Self {
        TreeWord(self.0[..len].to_vec())
    }

    /// True iff `self` is a descendant of `v`, i.e. `v` is a prefix of
    /// `self`. Every word is a descendant of itself.
    pub fn is_descendant_of(&self, v: &TreeWord) -> bool {
        self.0.len() >= v.0.len() && self.0[..v.0.len()] == v.0[..]
    }

    /// Length of the longest common prefix with `other`.
    pub fn common_prefix_len(&self, other: &TreeWord) -> usize {
        self.0
            .iter()
            .zip(other.0.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }

    /// Number of edges on the unique tree path between two words.
    pub fn tree_distance(&self, other: &TreeWord) -> usize {
        let lcp = self.common_prefix_len(other);
        self.len() + other.len() - 2 * lcp
    }
}

impl Serialize for TreeWord {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TreeWord {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for TreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.0 {
            let c = char::from_digit(l as u32, 36).ok_or(fmt::Error)?;
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for TreeWord {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut letters = Vec::with_capacity(s.len());
        for c in s.chars() {
            let l = c
                .to_digit(36)
                .ok_or_else(|| TopologyError::ParseVertex(s.to_string()))?;
            letters.push(l as u8);
        }
        Ok(TreeWord(letters))
    }
}

/// A point of `T x Z`: tree word plus Z coordinate.
///
/// The text encoding is `word@z`, e.g. `012@-3`; the root word is empty
/// (`@5` is the root column at height 5). `Ord` is word-lexicographic, then
/// by z; the search engine relies on it only for reproducible tie-breaking.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    pub word: TreeWord,
    pub z: i64,
}

impl Vertex {
    pub fn new(word: TreeWord, z: i64) -> Self {
        Vertex { word, z }
    }

    pub fn root(z: i64) -> Self {
        Vertex::new(TreeWord::root(), z)
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.word, self.z)
    }
}

impl FromStr for Vertex {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (word, z) = s
            .rsplit_once('@')
            .ok_or_else(|| TopologyError::ParseVertex(s.to_string()))?;
        let z = z
            .parse::<i64>()
            .map_err(|_| TopologyError::ParseVertex(s.to_string()))?;
        Ok(Vertex::new(word.parse()?, z))
    }
}

impl Serialize for Vertex {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Vertex {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeKind {
    /// Parent-child edge in the tree factor; anchored at the child endpoint.
    Tree,
    /// Unit step in the Z factor; anchored at the endpoint with smaller z.
    Z,
}

/// Canonical identity of an undirected edge, the key the weight oracle hashes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeKey {
    pub kind: EdgeKind,
    pub anchor: Vertex,
}

impl EdgeKey {
    pub fn tree(anchor: Vertex) -> Self {
        EdgeKey {
            kind: EdgeKind::Tree,
            anchor,
        }
    }

    pub fn z(anchor: Vertex) -> Self {
        EdgeKey {
            kind: EdgeKind::Z,
            anchor,
        }
    }

    /// The two endpoints of the edge, anchor first.
    pub fn endpoints(&self) -> (Vertex, Vertex) {
        match self.kind {
            EdgeKind::Tree => {
                let parent = Vertex::new(
                    self.anchor.word.parent().expect("tree edge anchor is a child"),
                    self.anchor.z,
                );
                (self.anchor.clone(), parent)
            }
            EdgeKind::Z => (
                self.anchor.clone(),
                Vertex::new(self.anchor.word.clone(), self.anchor.z + 1),
            ),
        }
    }
}

/// Symmetric, injective key for an adjacent pair in the ambient full graph.
pub fn canonical_edge_key(u: &Vertex, v: &Vertex) -> Result<EdgeKey, TopologyError> {
    if u.word == v.word && (u.z - v.z).abs() == 1 {
        let anchor = if u.z < v.z { u.clone() } else { v.clone() };
        return Ok(EdgeKey::z(anchor));
    }
    if u.z == v.z {
        if u.word.parent().as_ref() == Some(&v.word) {
            return Ok(EdgeKey::tree(u.clone()));
        }
        if v.word.parent().as_ref() == Some(&u.word) {
            return Ok(EdgeKey::tree(v.clone()));
        }
    }
    Err(TopologyError::NotAdjacent(u.clone(), v.clone()))
}

/// Which graph is in force. All variants are connected and vertex-transitive
/// enough for the experiments; `d >= 3` always.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    /// `T_d x Z`, root of tree-degree d.
    Full { d: u8 },
    /// `T_{d-1,d} x Z`, root with d-1 children.
    DAry { d: u8 },
    /// `T' x Z` where `T' = T_d` minus the whole subtree rooted at `excised`.
    Pruned { d: u8, excised: TreeWord },
    /// `T|_anchor x Z`: only words with `anchor` as prefix.
    Restricted { d: u8, anchor: TreeWord },
}

impl Topology {
    pub fn full(d: u8) -> Self {
        Topology::Full { d }
    }

    pub fn dary(d: u8) -> Self {
        Topology::DAry { d }
    }

    pub fn pruned(d: u8, excised: TreeWord) -> Self {
        Topology::Pruned { d, excised }
    }

    pub fn restricted(d: u8, anchor: TreeWord) -> Self {
        Topology::Restricted { d, anchor }
    }

    pub fn d(&self) -> u8 {
        match self {
            Topology::Full { d }
            | Topology::DAry { d }
            | Topology::Pruned { d, .. }
            | Topology::Restricted { d, .. } => *d,
        }
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        let d = self.d();
        if !(3..=36).contains(&d) {
            return Err(TopologyError::InvalidTopology(format!(
                "d must be in 3..=36, got {d}"
            )));
        }
        match self {
            Topology::Pruned { excised, .. } => {
                if excised.is_root() {
                    return Err(TopologyError::InvalidTopology(
                        "excised word must have depth >= 1".into(),
                    ));
                }
                if !valid_full_word(d, excised) {
                    return Err(TopologyError::InvalidTopology(format!(
                        "excised word {excised} has letters out of range for d={d}"
                    )));
                }
            }
            Topology::Restricted { anchor, .. } => {
                if anchor.is_root() {
                    return Err(TopologyError::InvalidTopology(
                        "restriction anchor must have depth >= 1".into(),
                    ));
                }
                if !valid_full_word(d, anchor) {
                    return Err(TopologyError::InvalidTopology(format!(
                        "anchor word {anchor} has letters out of range for d={d}"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Word-level membership; the Z coordinate never matters.
    pub fn contains_word(&self, w: &TreeWord) -> bool {
        match self {
            Topology::Full { d } => valid_full_word(*d, w),
            Topology::DAry { d } => valid_dary_word(*d, w),
            Topology::Pruned { d, excised } => {
                valid_full_word(*d, w) && !w.is_descendant_of(excised)
            }
            Topology::Restricted { d, anchor } => {
                w.is_descendant_of(anchor)
                    && w.letters()[anchor.len()..].iter().all(|&l| l < d - 1)
            }
        }
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        self.contains_word(&v.word)
    }

    /// Number of child slots below `w` (before pruning/restriction filters).
    fn child_count(&self, w: &TreeWord) -> u8 {
        let d = self.d();
        match self {
            Topology::Full { .. } | Topology::Pruned { .. } => {
                if w.is_root() {
                    d
                } else {
                    d - 1
                }
            }
            // the d-ary root and every non-root word have d-1 children, and
            // a restriction anchor is never the root
            Topology::DAry { .. } | Topology::Restricted { .. } => d - 1,
        }
    }

    /// Adjacent in-topology vertices in fixed order: tree parent (if any),
    /// tree children by ascending index, then `z-1`, `z+1`.
    pub fn neighbors(&self, v: &Vertex) -> Result<Vec<(Vertex, EdgeKey)>, TopologyError> {
        if !self.contains(v) {
            return Err(TopologyError::VertexNotInTopology(v.clone()));
        }
        let mut out = Vec::with_capacity(self.d() as usize + 2);
        if let Some(pw) = v.word.parent() {
            if self.contains_word(&pw) {
                out.push((Vertex::new(pw, v.z), EdgeKey::tree(v.clone())));
            }
        }
        for letter in 0..self.child_count(&v.word) {
            let cw = v.word.child(letter);
            if self.contains_word(&cw) {
                let child = Vertex::new(cw, v.z);
                let key = EdgeKey::tree(child.clone());
                out.push((child, key));
            }
        }
        let below = Vertex::new(v.word.clone(), v.z - 1);
        out.push((below.clone(), EdgeKey::z(below)));
        out.push((
            Vertex::new(v.word.clone(), v.z + 1),
            EdgeKey::z(v.clone()),
        ));
        Ok(out)
    }
}

fn valid_full_word(d: u8, w: &TreeWord) -> bool {
    let letters = w.letters();
    match letters.split_first() {
        None => true,
        Some((&first, rest)) => first < d && rest.iter().all(|&l| l < d - 1),
    }
}

fn valid_dary_word(d: u8, w: &TreeWord) -> bool {
    w.letters().iter().all(|&l| l < d - 1)
}

/// Z-edges walking a fixed column from `from_z` to `to_z`.
pub fn straight_path(from_z: i64, to_z: i64, word: &TreeWord) -> Vec<EdgeKey> {
    let (lo, hi) = (from_z.min(to_z), from_z.max(to_z));
    (lo..hi)
        .map(|z| EdgeKey::z(Vertex::new(word.clone(), z)))
        .collect()
}

/// Tree edges descending from the root to `to_word` at a fixed height.
pub fn tree_path(level_z: i64, to_word: &TreeWord) -> Vec<EdgeKey> {
    (1..=to_word.len())
        .map(|len| EdgeKey::tree(Vertex::new(to_word.prefix(len), level_z)))
        .collect()
}

/// Tree edges along the unique tree path from `from_word` to `to_word` at a
/// fixed height: up to the longest common prefix, then down.
pub fn tree_route(level_z: i64, from_word: &TreeWord, to_word: &TreeWord) -> Vec<EdgeKey> {
    let lcp = from_word.common_prefix_len(to_word);
    let mut edges = Vec::with_capacity(from_word.len() + to_word.len() - 2 * lcp);
    // each upward step is the tree edge anchored at the deeper endpoint
    for len in (lcp + 1..=from_word.len()).rev() {
        edges.push(EdgeKey::tree(Vertex::new(from_word.prefix(len), level_z)));
    }
    for len in lcp + 1..=to_word.len() {
        edges.push(EdgeKey::tree(Vertex::new(to_word.prefix(len), level_z)));
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(word: &str, z: i64) -> Vertex {
        Vertex::new(word.parse().unwrap(), z)
    }

    #[test]
    fn full_root_has_d_plus_2_neighbors() {
        let topo = Topology::full(3);
        let ns = topo.neighbors(&Vertex::root(0)).unwrap();
        assert_eq!(ns.len(), 5);
        let expected = [v("0", 0), v("1", 0), v("2", 0), v("", -1), v("", 1)];
        let got: Vec<Vertex> = ns.into_iter().map(|(u, _)| u).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn dary_root_has_d_plus_1_neighbors() {
        let topo = Topology::dary(3);
        let ns = topo.neighbors(&Vertex::root(0)).unwrap();
        assert_eq!(ns.len(), 4);
        let got: Vec<Vertex> = ns.into_iter().map(|(u, _)| u).collect();
        assert_eq!(got, [v("0", 0), v("1", 0), v("", -1), v("", 1)]);
    }

    #[test]
    fn pruned_root_skips_excised_child() {
        let topo = Topology::pruned(3, "0".parse().unwrap());
        let ns = topo.neighbors(&Vertex::root(0)).unwrap();
        assert_eq!(ns.len(), 4);
        let got: Vec<Vertex> = ns.into_iter().map(|(u, _)| u).collect();
        assert_eq!(got, [v("1", 0), v("2", 0), v("", -1), v("", 1)]);
    }

    #[test]
    fn non_root_degree_in_full() {
        let topo = Topology::full(3);
        // parent + d-1 children + two z moves = d + 2
        let ns = topo.neighbors(&v("20", 4)).unwrap();
        assert_eq!(ns.len(), 5);
        assert_eq!(ns[0].0, v("2", 4));
        assert_eq!(ns[1].0, v("200", 4));
        assert_eq!(ns[2].0, v("201", 4));
    }

    #[test]
    fn restricted_membership() {
        let topo = Topology::restricted(3, "1".parse().unwrap());
        assert!(topo.contains(&v("1", 0)));
        assert!(topo.contains(&v("10", -5)));
        assert!(!topo.contains(&v("2", 0)));
        assert!(!topo.contains(&Vertex::root(0)));
        // subtree root keeps its children but loses the tree parent
        let ns = topo.neighbors(&v("1", 0)).unwrap();
        let got: Vec<Vertex> = ns.into_iter().map(|(u, _)| u).collect();
        assert_eq!(got, [v("10", 0), v("11", 0), v("1", -1), v("1", 1)]);
    }

    #[test]
    fn edge_key_examples() {
        let k = canonical_edge_key(&Vertex::root(0), &Vertex::root(1)).unwrap();
        assert_eq!(k, EdgeKey::z(Vertex::root(0)));
        let k = canonical_edge_key(&Vertex::root(0), &v("2", 0)).unwrap();
        assert_eq!(k, EdgeKey::tree(v("2", 0)));
        assert_eq!(
            canonical_edge_key(&Vertex::root(1), &Vertex::root(0)).unwrap(),
            canonical_edge_key(&Vertex::root(0), &Vertex::root(1)).unwrap()
        );
        assert!(canonical_edge_key(&Vertex::root(0), &v("01", 0)).is_err());
        assert!(canonical_edge_key(&Vertex::root(0), &Vertex::root(2)).is_err());
    }

    #[test]
    fn descendant_is_prefix() {
        let w01: TreeWord = "01".parse().unwrap();
        let w0: TreeWord = "0".parse().unwrap();
        let w1: TreeWord = "1".parse().unwrap();
        assert!(w01.is_descendant_of(&w0));
        assert!(!w0.is_descendant_of(&w01));
        assert!(w1.is_descendant_of(&w1));
    }

    #[test]
    fn straight_path_examples() {
        let root = TreeWord::root();
        let p = straight_path(0, 3, &root);
        assert_eq!(
            p,
            vec![
                EdgeKey::z(Vertex::root(0)),
                EdgeKey::z(Vertex::root(1)),
                EdgeKey::z(Vertex::root(2)),
            ]
        );
        assert!(straight_path(0, 0, &root).is_empty());
        let w1: TreeWord = "1".parse().unwrap();
        let p = straight_path(2, 0, &w1);
        assert_eq!(p, vec![EdgeKey::z(v("1", 0)), EdgeKey::z(v("1", 1))]);
    }

    #[test]
    fn tree_path_examples() {
        let w01: TreeWord = "01".parse().unwrap();
        assert_eq!(
            tree_path(0, &w01),
            vec![EdgeKey::tree(v("0", 0)), EdgeKey::tree(v("01", 0))]
        );
        assert!(tree_path(5, &TreeWord::root()).is_empty());
        let w2: TreeWord = "2".parse().unwrap();
        assert_eq!(tree_path(-1, &w2), vec![EdgeKey::tree(v("2", -1))]);
    }

    #[test]
    fn tree_route_goes_through_common_prefix() {
        let a: TreeWord = "01".parse().unwrap();
        let b: TreeWord = "1".parse().unwrap();
        let route = tree_route(0, &a, &b);
        assert_eq!(
            route,
            vec![
                EdgeKey::tree(v("01", 0)),
                EdgeKey::tree(v("0", 0)),
                EdgeKey::tree(v("1", 0)),
            ]
        );
        assert_eq!(a.tree_distance(&b), 3);
        assert!(tree_route(0, &a, &a).is_empty());
    }

    #[test]
    fn vertex_codec_roundtrip() {
        for s in ["@0", "012@-3", "2@17", "@-1"] {
            let v: Vertex = s.parse().unwrap();
            assert_eq!(v.to_string(), s);
        }
        assert!("nonsense".parse::<Vertex>().is_err());
        assert!("01@x".parse::<Vertex>().is_err());
    }

    #[test]
    fn validation_rejects_bad_topologies() {
        assert!(Topology::full(2).validate().is_err());
        assert!(Topology::pruned(3, TreeWord::root()).validate().is_err());
        assert!(Topology::pruned(3, "7".parse().unwrap()).validate().is_err());
        assert!(Topology::full(3).validate().is_ok());
    }

    #[test]
    fn neighbors_rejects_foreign_vertex() {
        let topo = Topology::pruned(3, "0".parse().unwrap());
        assert!(matches!(
            topo.neighbors(&v("01", 0)),
            Err(TopologyError::VertexNotInTopology(_))
        ));
    }
}
