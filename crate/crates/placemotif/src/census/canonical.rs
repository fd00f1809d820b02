//! Canonical keys for attributed (category-colored) motifs.
//!
//! Two colored instances must share a key exactly when a color-preserving
//! isomorphism maps one onto the other. The canonical form minimizes the pair
//! (adjacency bit string, color sequence) lexicographically over all vertex
//! permutations; since the minimal bit string is the class's reference
//! structure, the surviving color sequence is the coloring read off in the
//! class's reference vertex order.

use std::fmt;

use crate::ingest::categories::{CategoryId, CategoryTable};

use super::motif::{pack_bits, pair_count, pair_list, M4Convention, MotifClass, Shape};

const PERMS_2: [[usize; 4]; 2] = [[0, 1, 9, 9], [1, 0, 9, 9]];

const PERMS_3: [[usize; 4]; 6] = [
    [0, 1, 2, 9],
    [0, 2, 1, 9],
    [1, 0, 2, 9],
    [1, 2, 0, 9],
    [2, 0, 1, 9],
    [2, 1, 0, 9],
];

const PERMS_4: [[usize; 4]; 24] = [
    [0, 1, 2, 3],
    [0, 1, 3, 2],
    [0, 2, 1, 3],
    [0, 2, 3, 1],
    [0, 3, 1, 2],
    [0, 3, 2, 1],
    [1, 0, 2, 3],
    [1, 0, 3, 2],
    [1, 2, 0, 3],
    [1, 2, 3, 0],
    [1, 3, 0, 2],
    [1, 3, 2, 0],
    [2, 0, 1, 3],
    [2, 0, 3, 1],
    [2, 1, 0, 3],
    [2, 1, 3, 0],
    [2, 3, 0, 1],
    [2, 3, 1, 0],
    [3, 0, 1, 2],
    [3, 0, 2, 1],
    [3, 1, 0, 2],
    [3, 1, 2, 0],
    [3, 2, 0, 1],
    [3, 2, 1, 0],
];

/// All permutations of `0..k` (entries past `k` are padding).
pub(crate) fn permutations(k: usize) -> &'static [[usize; 4]] {
    match k {
        2 => &PERMS_2,
        3 => &PERMS_3,
        4 => &PERMS_4,
        _ => unreachable!("motif size {k}"),
    }
}

/// A motif class plus its canonical category coloring: the identity of an
/// attributed motif.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttributedKey {
    pub class: MotifClass,
    colors: [u8; 4],
}

impl AttributedKey {
    pub(crate) fn new(class: MotifClass, canonical: [u8; 4]) -> Self {
        Self { class, colors: canonical }
    }

    /// Category colors aligned to the class's reference vertex order.
    pub fn colors(&self) -> impl Iterator<Item = CategoryId> + '_ {
        self.colors[..self.class.size()].iter().map(|&c| CategoryId(c))
    }

    /// `CLASS|name1,name2,...` with category names in canonical vertex order.
    pub fn label(&self, table: &CategoryTable) -> String {
        let names: Vec<&str> = self.colors().map(|c| table.name(c)).collect();
        format!("{}|{}", self.class, names.join(","))
    }

    /// Parses the `label` form back; used when re-reading census exports.
    pub fn parse(label: &str, table: &CategoryTable, conv: M4Convention) -> Option<Self> {
        let (class_str, colors_str) = label.split_once('|')?;
        let class: MotifClass = class_str.parse().ok()?;
        let mut colors = [u8::MAX; 4];
        let mut count = 0;
        for name in colors_str.split(',') {
            if count >= class.size() {
                return None;
            }
            colors[count] = table.id_by_name(name)?.0;
            count += 1;
        }
        if count != class.size() {
            return None;
        }
        Some(canonical_key(class.shape(conv), pack_bits_for(class, conv), &colors[..count], conv))
    }
}

fn pack_bits_for(class: MotifClass, conv: M4Convention) -> u8 {
    class.shape(conv).canonical_bits()
}

impl fmt::Display for AttributedKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|", self.class)?;
        for (i, c) in self.colors[..self.class.size()].iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Canonicalizes a colored instance given its packed adjacency `bits` (in the
/// instance's own vertex order) and per-vertex category colors.
pub(crate) fn canonical_key(shape: Shape, bits: u8, colors: &[u8], conv: M4Convention) -> AttributedKey {
    let k = shape.size();
    debug_assert_eq!(colors.len(), k);
    let pairs = pair_list(k);
    let npairs = pair_count(k);
    let adjacent = |i: usize, j: usize| {
        let (a, b) = (i.min(j), i.max(j));
        let idx = pair_index(k, a, b);
        bits & (1 << (npairs - 1 - idx)) != 0
    };
    let _ = pairs;

    let mut best_bits = u8::MAX;
    let mut best_colors = [u8::MAX; 4];
    for perm in permutations(k) {
        let pbits = pack_bits(k, |i, j| adjacent(perm[i], perm[j]));
        if pbits > best_bits {
            continue;
        }
        let mut pcolors = [u8::MAX; 4];
        for (i, slot) in pcolors.iter_mut().enumerate().take(k) {
            *slot = colors[perm[i]];
        }
        if pbits < best_bits || pcolors[..k] < best_colors[..k] {
            best_bits = pbits;
            best_colors = pcolors;
        }
    }
    debug_assert_eq!(best_bits, shape.canonical_bits());
    AttributedKey::new(shape.class(conv), best_colors)
}

/// Flat index of unordered pair (a, b), a < b, in `pair_list(k)` order.
fn pair_index(k: usize, a: usize, b: usize) -> usize {
    match k {
        2 => 0,
        3 => match (a, b) {
            (0, 1) => 0,
            (0, 2) => 1,
            _ => 2,
        },
        4 => match (a, b) {
            (0, 1) => 0,
            (0, 2) => 1,
            (0, 3) => 2,
            (1, 2) => 3,
            (1, 3) => 4,
            _ => 5,
        },
        _ => unreachable!(),
    }
}
