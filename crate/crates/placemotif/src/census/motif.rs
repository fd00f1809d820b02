//! The nine motif classes: all connected simple graphs on 2–4 vertices up to
//! isomorphism, and their classification from labeled adjacency.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Motif class labels. `M4-1`/`M4-2` name the two dense four-node graphs (the
/// complete graph and the diamond); which label means which is a convention
/// switch, see [`M4Convention`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MotifClass {
    M2_1,
    M3_1,
    M3_2,
    M4_1,
    M4_2,
    M4_3,
    M4_4,
    M4_5,
    M4_6,
}

/// Naming convention for the two densely interconnected four-node motifs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum M4Convention {
    /// M4-1 = complete four-node graph, M4-2 = diamond.
    #[default]
    K4First,
    /// M4-1 = diamond, M4-2 = complete four-node graph.
    DiamondFirst,
}

/// Structural identity of a motif, independent of the naming convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Shape {
    Edge,
    Path3,
    Triangle,
    Complete4,
    Diamond,
    Cycle4,
    Paw,
    Path4,
    Star4,
}

pub const ALL_CLASSES: [MotifClass; 9] = [
    MotifClass::M2_1,
    MotifClass::M3_1,
    MotifClass::M3_2,
    MotifClass::M4_1,
    MotifClass::M4_2,
    MotifClass::M4_3,
    MotifClass::M4_4,
    MotifClass::M4_5,
    MotifClass::M4_6,
];

/// Unordered vertex pairs of a k-vertex graph in bit order. Bit i of an
/// adjacency bit string refers to `pair_list(k)[i]`, most significant first.
pub(crate) fn pair_list(k: usize) -> &'static [(usize, usize)] {
    match k {
        2 => &[(0, 1)],
        3 => &[(0, 1), (0, 2), (1, 2)],
        4 => &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
        _ => unreachable!("motif size {k}"),
    }
}

pub(crate) fn pair_count(k: usize) -> usize {
    k * (k - 1) / 2
}

/// Packs an adjacency predicate over vertex indices `0..k` into a bit string
/// (pair 0 is the most significant bit).
pub(crate) fn pack_bits(k: usize, mut adjacent: impl FnMut(usize, usize) -> bool) -> u8 {
    let pairs = pair_list(k);
    let mut bits = 0u8;
    for (idx, &(i, j)) in pairs.iter().enumerate() {
        if adjacent(i, j) {
            bits |= 1 << (pairs.len() - 1 - idx);
        }
    }
    bits
}

impl Shape {
    /// Classifies a *connected* simple graph on `k` vertices from its packed
    /// adjacency bits. Degree profiles separate the equal-edge-count cases.
    pub(crate) fn classify_connected(k: usize, bits: u8) -> Shape {
        let e = bits.count_ones();
        match (k, e) {
            (2, 1) => Shape::Edge,
            (3, 2) => Shape::Path3,
            (3, 3) => Shape::Triangle,
            (4, 6) => Shape::Complete4,
            (4, 5) => Shape::Diamond,
            (4, 4) => {
                if max_degree(k, bits) == 3 {
                    Shape::Paw
                } else {
                    Shape::Cycle4
                }
            }
            (4, 3) => {
                if max_degree(k, bits) == 3 {
                    Shape::Star4
                } else {
                    Shape::Path4
                }
            }
            _ => unreachable!("connected graph on {k} vertices with {e} edges"),
        }
    }

    pub fn size(self) -> usize {
        match self {
            Shape::Edge => 2,
            Shape::Path3 | Shape::Triangle => 3,
            _ => 4,
        }
    }

    pub fn edge_count(self) -> u32 {
        match self {
            Shape::Edge => 1,
            Shape::Path3 => 2,
            Shape::Triangle | Shape::Path4 | Shape::Star4 => 3,
            Shape::Cycle4 | Shape::Paw => 4,
            Shape::Diamond => 5,
            Shape::Complete4 => 6,
        }
    }

    /// Lexicographically minimal adjacency bit string over all vertex
    /// relabelings; the reference structure attributed colorings align to.
    pub(crate) fn canonical_bits(self) -> u8 {
        match self {
            Shape::Edge => 0b1,
            Shape::Path3 => 0b011,
            Shape::Triangle => 0b111,
            Shape::Star4 => 0b001011,
            Shape::Path4 => 0b001101,
            Shape::Paw => 0b001111,
            Shape::Cycle4 => 0b011110,
            Shape::Diamond => 0b011111,
            Shape::Complete4 => 0b111111,
        }
    }

    pub fn class(self, conv: M4Convention) -> MotifClass {
        match self {
            Shape::Edge => MotifClass::M2_1,
            Shape::Path3 => MotifClass::M3_1,
            Shape::Triangle => MotifClass::M3_2,
            Shape::Cycle4 => MotifClass::M4_3,
            Shape::Paw => MotifClass::M4_4,
            Shape::Path4 => MotifClass::M4_5,
            Shape::Star4 => MotifClass::M4_6,
            Shape::Complete4 => match conv {
                M4Convention::K4First => MotifClass::M4_1,
                M4Convention::DiamondFirst => MotifClass::M4_2,
            },
            Shape::Diamond => match conv {
                M4Convention::K4First => MotifClass::M4_2,
                M4Convention::DiamondFirst => MotifClass::M4_1,
            },
        }
    }
}

fn max_degree(k: usize, bits: u8) -> u32 {
    let pairs = pair_list(k);
    let mut deg = [0u32; 4];
    for (idx, &(i, j)) in pairs.iter().enumerate() {
        if bits & (1 << (pairs.len() - 1 - idx)) != 0 {
            deg[i] += 1;
            deg[j] += 1;
        }
    }
    deg.iter().copied().max().unwrap_or(0)
}

impl MotifClass {
    pub fn shape(self, conv: M4Convention) -> Shape {
        match self {
            MotifClass::M2_1 => Shape::Edge,
            MotifClass::M3_1 => Shape::Path3,
            MotifClass::M3_2 => Shape::Triangle,
            MotifClass::M4_3 => Shape::Cycle4,
            MotifClass::M4_4 => Shape::Paw,
            MotifClass::M4_5 => Shape::Path4,
            MotifClass::M4_6 => Shape::Star4,
            MotifClass::M4_1 => match conv {
                M4Convention::K4First => Shape::Complete4,
                M4Convention::DiamondFirst => Shape::Diamond,
            },
            MotifClass::M4_2 => match conv {
                M4Convention::K4First => Shape::Diamond,
                M4Convention::DiamondFirst => Shape::Complete4,
            },
        }
    }

    pub fn size(self) -> usize {
        match self {
            MotifClass::M2_1 => 2,
            MotifClass::M3_1 | MotifClass::M3_2 => 3,
            _ => 4,
        }
    }
}

impl fmt::Display for MotifClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MotifClass::M2_1 => "M2-1",
            MotifClass::M3_1 => "M3-1",
            MotifClass::M3_2 => "M3-2",
            MotifClass::M4_1 => "M4-1",
            MotifClass::M4_2 => "M4-2",
            MotifClass::M4_3 => "M4-3",
            MotifClass::M4_4 => "M4-4",
            MotifClass::M4_5 => "M4-5",
            MotifClass::M4_6 => "M4-6",
        };
        f.write_str(s)
    }
}

impl FromStr for MotifClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_CLASSES
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown motif class '{s}'")))
    }
}

impl fmt::Display for M4Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            M4Convention::K4First => f.write_str("k4-first"),
            M4Convention::DiamondFirst => f.write_str("diamond-first"),
        }
    }
}

impl FromStr for M4Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k4-first" => Ok(M4Convention::K4First),
            "diamond-first" => Ok(M4Convention::DiamondFirst),
            other => Err(Error::Config(format!(
                "unknown M4 convention '{other}' (expected k4-first or diamond-first)"
            ))),
        }
    }
}

/// Classifies an arbitrary labeled simple graph on `k` vertices given as an
/// edge list over indices `0..k`. Fails with `NotAMotif` when `k` is out of
/// range or the graph is disconnected.
pub fn classify_connected_subgraph(
    k: usize,
    edges: &[(usize, usize)],
    conv: M4Convention,
) -> Result<MotifClass> {
    if !(2..=4).contains(&k) {
        return Err(Error::NotAMotif(format!("{k} vertices (motifs span 2-4)")));
    }
    let mut adj = [[false; 4]; 4];
    for &(i, j) in edges {
        if i >= k || j >= k {
            return Err(Error::NotAMotif(format!("edge ({i},{j}) outside 0..{k}")));
        }
        if i == j {
            return Err(Error::NotAMotif(format!("self-loop on vertex {i}")));
        }
        adj[i][j] = true;
        adj[j][i] = true;
    }
    // connectivity sweep from vertex 0
    let mut seen = [false; 4];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for (u, row) in adj.iter().enumerate().take(k) {
            if row[v] && !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    if seen[..k].iter().any(|s| !s) {
        return Err(Error::NotAMotif("disconnected".into()));
    }
    let bits = pack_bits(k, |i, j| adj[i][j]);
    Ok(Shape::classify_connected(k, bits).class(conv))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classify(k: usize, edges: &[(usize, usize)]) -> MotifClass {
        classify_connected_subgraph(k, edges, M4Convention::K4First).unwrap()
    }

    #[test]
    fn three_node_classes() {
        assert_eq!(classify(3, &[(0, 1), (1, 2), (2, 0)]), MotifClass::M3_2);
        assert_eq!(classify(3, &[(0, 1), (1, 2)]), MotifClass::M3_1);
    }

    #[test]
    fn star_and_path() {
        assert_eq!(classify(4, &[(0, 1), (0, 2), (0, 3)]), MotifClass::M4_6);
        assert_eq!(classify(4, &[(0, 1), (1, 2), (2, 3)]), MotifClass::M4_5);
    }

    #[test]
    fn dense_four_node_classes_follow_convention() {
        let k4 = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let diamond = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)];
        assert_eq!(classify(4, &k4), MotifClass::M4_1);
        assert_eq!(classify(4, &diamond), MotifClass::M4_2);
        assert_eq!(
            classify_connected_subgraph(4, &k4, M4Convention::DiamondFirst).unwrap(),
            MotifClass::M4_2
        );
        assert_eq!(
            classify_connected_subgraph(4, &diamond, M4Convention::DiamondFirst).unwrap(),
            MotifClass::M4_1
        );
    }

    #[test]
    fn cycle_and_paw() {
        assert_eq!(classify(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]), MotifClass::M4_3);
        assert_eq!(classify(4, &[(0, 1), (1, 2), (2, 0), (0, 3)]), MotifClass::M4_4);
    }

    #[test]
    fn classification_is_permutation_invariant() {
        // paw under every labeling of its 4 vertices
        let base = [(0usize, 1usize), (1, 2), (2, 0), (0, 3)];
        let perms = super::super::canonical::permutations(4);
        for p in perms {
            let relabeled: Vec<(usize, usize)> = base.iter().map(|&(a, b)| (p[a], p[b])).collect();
            assert_eq!(classify(4, &relabeled), MotifClass::M4_4);
        }
    }

    #[test]
    fn rejects_disconnected_and_bad_sizes() {
        assert!(matches!(
            classify_connected_subgraph(4, &[(0, 1), (2, 3)], M4Convention::K4First),
            Err(Error::NotAMotif(_))
        ));
        assert!(classify_connected_subgraph(5, &[], M4Convention::K4First).is_err());
        assert!(classify_connected_subgraph(1, &[], M4Convention::K4First).is_err());
        assert!(classify_connected_subgraph(3, &[(0, 0)], M4Convention::K4First).is_err());
    }

    #[test]
    fn canonical_bits_are_minimal_over_relabelings() {
        let shapes = [
            Shape::Edge,
            Shape::Path3,
            Shape::Triangle,
            Shape::Star4,
            Shape::Path4,
            Shape::Paw,
            Shape::Cycle4,
            Shape::Diamond,
            Shape::Complete4,
        ];
        for shape in shapes {
            let k = shape.size();
            let bits = shape.canonical_bits();
            let pairs = pair_list(k);
            let adjacent = |i: usize, j: usize| {
                let idx = pairs
                    .iter()
                    .position(|&(a, b)| (a, b) == (i.min(j), i.max(j)))
                    .unwrap();
                bits & (1 << (pairs.len() - 1 - idx)) != 0
            };
            let min = super::super::canonical::permutations(k)
                .iter()
                .map(|p| pack_bits(k, |i, j| adjacent(p[i], p[j])))
                .min()
                .unwrap();
            assert_eq!(min, bits, "{shape:?}");
            assert_eq!(Shape::classify_connected(k, bits), shape);
            assert_eq!(bits.count_ones(), shape.edge_count(), "{shape:?}");
        }
    }
}
