//! Exact enumeration of connected induced subgraphs on 2..=k nodes.
//!
//! Ordered-extension enumeration: each subgraph grows only by exclusive
//! neighbors with an index above the root vertex, so every connected vertex
//! set is visited exactly once. Each recursion state of size >= 2 is emitted,
//! which covers all sizes 2..=k in a single pass.

/// O(1)-ish adjacency tests; bitset rows up to a size cutoff, binary search
/// on sorted neighbor lists beyond it.
pub(crate) enum AdjacencyOracle<'a> {
    Bits { words: usize, rows: Vec<u64> },
    Search(&'a [Vec<u32>]),
}

const BITSET_MAX_NODES: usize = 16_384;

impl<'a> AdjacencyOracle<'a> {
    pub fn build(adj: &'a [Vec<u32>]) -> Self {
        let n = adj.len();
        if n == 0 || n > BITSET_MAX_NODES {
            return AdjacencyOracle::Search(adj);
        }
        let words = n.div_ceil(64);
        let mut rows = vec![0u64; words * n];
        for (u, nbrs) in adj.iter().enumerate() {
            for &v in nbrs {
                rows[u * words + v as usize / 64] |= 1 << (v % 64);
            }
        }
        AdjacencyOracle::Bits { words, rows }
    }

    #[inline]
    pub fn is_adjacent(&self, u: u32, v: u32) -> bool {
        match self {
            AdjacencyOracle::Bits { words, rows } => {
                rows[u as usize * words + v as usize / 64] >> (v % 64) & 1 == 1
            }
            AdjacencyOracle::Search(adj) => adj[u as usize].binary_search(&v).is_ok(),
        }
    }
}

struct Esu<'a, F> {
    adj: &'a [Vec<u32>],
    oracle: AdjacencyOracle<'a>,
    max_k: usize,
    emit: F,
}

/// Runs the enumeration over sorted neighbor lists, calling `emit` once per
/// connected induced subgraph of size 2..=`max_k` (members, root first).
/// Returns false if `emit` aborted the walk.
pub(crate) fn enumerate_connected_subgraphs<F>(adj: &[Vec<u32>], max_k: usize, emit: F) -> bool
where
    F: FnMut(&[u32]) -> bool,
{
    debug_assert!((2..=4).contains(&max_k));
    let mut esu = Esu {
        adj,
        oracle: AdjacencyOracle::build(adj),
        max_k,
        emit,
    };
    let mut sub: Vec<u32> = Vec::with_capacity(max_k);
    let mut scratch: Vec<Vec<u32>> = vec![Vec::new(); max_k + 1];
    for v in 0..adj.len() as u32 {
        sub.clear();
        sub.push(v);
        let ext = &mut scratch[1];
        ext.clear();
        ext.extend(adj[v as usize].iter().copied().filter(|&u| u > v));
        if !esu.recurse(&mut sub, &mut scratch, v) {
            return false;
        }
    }
    true
}

impl<F: FnMut(&[u32]) -> bool> Esu<'_, F> {
    fn recurse(&mut self, sub: &mut Vec<u32>, scratch: &mut Vec<Vec<u32>>, root: u32) -> bool {
        let depth = sub.len();
        if depth >= 2 && !(self.emit)(sub) {
            return false;
        }
        if depth == self.max_k {
            return true;
        }
        let ext_len = scratch[depth].len();
        for i in (0..ext_len).rev() {
            let w = scratch[depth][i];
            // child extension: candidates not yet tried at this level, plus
            // exclusive neighbors of w (not adjacent to the current subgraph)
            let mut child = std::mem::take(&mut scratch[depth + 1]);
            child.clear();
            child.extend_from_slice(&scratch[depth][..i]);
            for &u in &self.adj[w as usize] {
                if u > root && !self.touches_sub(sub, u) {
                    child.push(u);
                }
            }
            scratch[depth + 1] = child;
            sub.push(w);
            let keep_going = self.recurse(sub, scratch, root);
            sub.pop();
            if !keep_going {
                return false;
            }
        }
        true
    }

    #[inline]
    fn touches_sub(&self, sub: &[u32], u: u32) -> bool {
        sub.iter().any(|&s| s == u || self.oracle.is_adjacent(s, u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adjacency(n: usize, edges: &[(u32, u32)]) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    fn collect_sets(adj: &[Vec<u32>], max_k: usize) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        enumerate_connected_subgraphs(adj, max_k, |members| {
            let mut m = members.to_vec();
            m.sort_unstable();
            out.push(m);
            true
        });
        out
    }

    #[test]
    fn triangle_yields_each_subset_once() {
        let adj = adjacency(3, &[(0, 1), (1, 2), (0, 2)]);
        let mut sets = collect_sets(&adj, 4);
        sets.sort();
        assert_eq!(sets, vec![vec![0, 1], vec![0, 1, 2], vec![0, 2], vec![1, 2]]);
    }

    #[test]
    fn no_duplicates_on_a_dense_graph() {
        // K5: C(5,2)=10 pairs, C(5,3)=10 triples, C(5,4)=5 quads
        let mut edges = Vec::new();
        for u in 0..5u32 {
            for v in (u + 1)..5 {
                edges.push((u, v));
            }
        }
        let adj = adjacency(5, &edges);
        let mut sets = collect_sets(&adj, 4);
        let total = sets.len();
        sets.dedup();
        assert_eq!(total, 25);
        sets.sort();
        sets.dedup();
        assert_eq!(sets.len(), 25);
    }

    #[test]
    fn disconnected_parts_do_not_mix() {
        let adj = adjacency(4, &[(0, 1), (2, 3)]);
        let mut sets = collect_sets(&adj, 4);
        sets.sort();
        assert_eq!(sets, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn abort_stops_enumeration() {
        let adj = adjacency(3, &[(0, 1), (1, 2), (0, 2)]);
        let mut seen = 0;
        let completed = enumerate_connected_subgraphs(&adj, 4, |_| {
            seen += 1;
            seen < 2
        });
        assert!(!completed);
        assert_eq!(seen, 2);
    }

    #[test]
    fn bitset_and_search_oracles_agree() {
        let adj = adjacency(6, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3), (1, 4)]);
        let bits = AdjacencyOracle::build(&adj);
        let search = AdjacencyOracle::Search(&adj);
        for u in 0..6u32 {
            for v in 0..6u32 {
                assert_eq!(bits.is_adjacent(u, v), search.is_adjacent(u, v), "({u},{v})");
            }
        }
    }
}
