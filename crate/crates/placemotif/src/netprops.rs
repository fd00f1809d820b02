//! Global properties of a daily network: degree, density, clustering,
//! diameter, and modularity of a greedy multilevel community partition.

use std::collections::{HashMap, VecDeque};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::network::PlaceNetwork;

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalProps {
    pub date: NaiveDate,
    pub node_count: u64,
    pub edge_count: u64,
    pub avg_degree: f64,
    pub density: f64,
    pub avg_clustering: f64,
    /// Longest shortest path (unweighted hops) within the largest connected
    /// component; 0 for a single node.
    pub diameter: u64,
    /// Weighted modularity of the partition found by seeded multilevel
    /// greedy community detection.
    pub modularity: f64,
    pub empty: bool,
}

/// Computes all global properties; deterministic for a fixed (network, seed).
pub fn compute_global_props(network: &PlaceNetwork, seed: u64) -> GlobalProps {
    let n = network.node_count();
    let m = network.edge_count();
    if n == 0 {
        return GlobalProps {
            date: network.date,
            node_count: 0,
            edge_count: 0,
            avg_degree: 0.0,
            density: 0.0,
            avg_clustering: 0.0,
            diameter: 0,
            modularity: 0.0,
            empty: true,
        };
    }
    let avg_degree = 2.0 * m as f64 / n as f64;
    let density = if n > 1 {
        2.0 * m as f64 / (n as f64 * (n as f64 - 1.0))
    } else {
        0.0
    };
    let partition = louvain(network, seed);
    GlobalProps {
        date: network.date,
        node_count: n as u64,
        edge_count: m as u64,
        avg_degree,
        density,
        avg_clustering: average_clustering(network),
        diameter: largest_component_diameter(network),
        modularity: modularity(network, &partition),
        empty: false,
    }
}

/// Mean local clustering coefficient (unweighted); nodes with degree < 2
/// contribute 0.
pub fn average_clustering(network: &PlaceNetwork) -> f64 {
    let n = network.node_count();
    if n == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for v in 0..n as u32 {
        let nbrs: Vec<u32> = network.neighbors(v).iter().map(|&(u, _)| u).collect();
        let d = nbrs.len();
        if d < 2 {
            continue;
        }
        let mut links = 0u64;
        for i in 0..d {
            for j in (i + 1)..d {
                if network.is_adjacent(nbrs[i], nbrs[j]) {
                    links += 1;
                }
            }
        }
        total += 2.0 * links as f64 / (d as f64 * (d as f64 - 1.0));
    }
    total / n as f64
}

fn bfs_depths(network: &PlaceNetwork, start: u32, dist: &mut [u32]) -> u32 {
    dist.fill(u32::MAX);
    dist[start as usize] = 0;
    let mut queue = VecDeque::from([start]);
    let mut max_depth = 0;
    while let Some(v) = queue.pop_front() {
        let d = dist[v as usize];
        max_depth = max_depth.max(d);
        for &(u, _) in network.neighbors(v) {
            if dist[u as usize] == u32::MAX {
                dist[u as usize] = d + 1;
                queue.push_back(u);
            }
        }
    }
    max_depth
}

/// Unweighted diameter of the largest connected component.
pub fn largest_component_diameter(network: &PlaceNetwork) -> u64 {
    let n = network.node_count();
    if n == 0 {
        return 0;
    }
    let mut component = vec![u32::MAX; n];
    let mut members_of_largest: Vec<u32> = Vec::new();
    let mut comp_id = 0;
    for v in 0..n as u32 {
        if component[v as usize] != u32::MAX {
            continue;
        }
        let mut members = vec![v];
        component[v as usize] = comp_id;
        let mut queue = VecDeque::from([v]);
        while let Some(x) = queue.pop_front() {
            for &(u, _) in network.neighbors(x) {
                if component[u as usize] == u32::MAX {
                    component[u as usize] = comp_id;
                    members.push(u);
                    queue.push_back(u);
                }
            }
        }
        if members.len() > members_of_largest.len() {
            members_of_largest = members;
        }
        comp_id += 1;
    }
    let mut dist = vec![u32::MAX; n];
    let mut diameter = 0u32;
    for &v in &members_of_largest {
        diameter = diameter.max(bfs_depths(network, v, &mut dist));
    }
    diameter as u64
}

/// Weighted modularity of a partition, computed directly from the original
/// graph: Q = sum over communities of [2*w_in - K^2/(2m)] / (2m).
pub fn modularity(network: &PlaceNetwork, partition: &[u32]) -> f64 {
    debug_assert_eq!(partition.len(), network.node_count());
    let two_m: f64 = 2.0 * network.total_weight() as f64;
    if two_m == 0.0 {
        return 0.0;
    }
    let ncomm = partition.iter().copied().max().map(|c| c + 1).unwrap_or(0) as usize;
    let mut internal = vec![0.0f64; ncomm];
    let mut strength = vec![0.0f64; ncomm];
    for e in network.edges() {
        let w = e.weight as f64;
        let (cu, cv) = (partition[e.u as usize], partition[e.v as usize]);
        strength[cu as usize] += w;
        strength[cv as usize] += w;
        if cu == cv {
            internal[cu as usize] += w;
        }
    }
    let mut q = 0.0;
    for c in 0..ncomm {
        q += (2.0 * internal[c] - strength[c] * strength[c] / two_m) / two_m;
    }
    q
}

/// Multilevel greedy modularity partition (node-moving with aggregation).
/// The seed fixes the node visiting order; ties in gain break toward the
/// smallest community id, so results are reproducible.
pub fn louvain(network: &PlaceNetwork, seed: u64) -> Vec<u32> {
    let n = network.node_count();
    if n == 0 {
        return Vec::new();
    }
    // level-0 weighted adjacency; self-loop weight kept separately
    let mut adj: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|v| {
            network
                .neighbors(v as u32)
                .iter()
                .map(|&(u, e)| (u as usize, network.edges()[e as usize].weight as f64))
                .collect()
        })
        .collect();
    let mut self_loop = vec![0.0f64; n];
    let two_m: f64 = 2.0 * network.total_weight() as f64;
    if two_m == 0.0 {
        return (0..n as u32).collect();
    }

    // membership of original nodes, refined level by level
    let mut node_to_final: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);

    loop {
        let level_n = adj.len();
        let degree: Vec<f64> = (0..level_n)
            .map(|v| adj[v].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self_loop[v])
            .collect();
        let mut community: Vec<usize> = (0..level_n).collect();
        let mut comm_total: Vec<f64> = degree.clone();

        let mut order: Vec<usize> = (0..level_n).collect();
        order.shuffle(&mut rng);

        let mut improved_level = false;
        loop {
            let mut moves = 0usize;
            for &v in &order {
                let current = community[v];
                // weight from v to each neighboring community
                let mut to_comm: HashMap<usize, f64> = HashMap::new();
                for &(u, w) in &adj[v] {
                    *to_comm.entry(community[u]).or_insert(0.0) += w;
                }
                comm_total[current] -= degree[v];
                let stay_gain = to_comm.get(&current).copied().unwrap_or(0.0)
                    - comm_total[current] * degree[v] / two_m;
                // move only on strict improvement over staying; candidates are
                // scanned in ascending id order so gain ties keep the smallest
                let mut best_comm = current;
                let mut best_gain = stay_gain + 1e-12;
                let mut candidates: Vec<usize> = to_comm.keys().copied().collect();
                candidates.sort_unstable();
                for c in candidates {
                    if c == current {
                        continue;
                    }
                    let gain = to_comm[&c] - comm_total[c] * degree[v] / two_m;
                    if gain > best_gain {
                        best_gain = gain;
                        best_comm = c;
                    }
                }
                comm_total[best_comm] += degree[v];
                if best_comm != current {
                    community[v] = best_comm;
                    moves += 1;
                    improved_level = true;
                }
            }
            if moves == 0 {
                break;
            }
        }

        if !improved_level {
            break;
        }

        // renumber communities consecutively, smallest old id first
        let mut ids: Vec<usize> = community.clone();
        ids.sort_unstable();
        ids.dedup();
        let remap: HashMap<usize, usize> = ids.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        for c in community.iter_mut() {
            *c = remap[c];
        }
        let next_n = ids.len();
        for target in node_to_final.iter_mut() {
            *target = community[*target];
        }
        if next_n == level_n {
            break;
        }

        // aggregate: communities become nodes, internal weight becomes self-loops
        let mut next_self = vec![0.0f64; next_n];
        let mut next_weights: Vec<HashMap<usize, f64>> = vec![HashMap::new(); next_n];
        for (v, nbrs) in adj.iter().enumerate() {
            let cv = community[v];
            next_self[cv] += self_loop[v];
            for &(u, w) in nbrs {
                let cu = community[u];
                if cu == cv {
                    if u > v {
                        next_self[cv] += w;
                    }
                } else {
                    *next_weights[cv].entry(cu).or_insert(0.0) += w;
                }
            }
        }
        adj = next_weights
            .into_iter()
            .map(|m| {
                let mut list: Vec<(usize, f64)> = m.into_iter().collect();
                list.sort_unstable_by_key(|&(u, _)| u);
                list
            })
            .collect();
        self_loop = next_self;
    }

    // compress final labels to 0..k in first-appearance order
    let mut remap: HashMap<usize, u32> = HashMap::new();
    let mut next = 0u32;
    node_to_final
        .iter()
        .map(|&c| {
            *remap.entry(c).or_insert_with(|| {
                let id = next;
                next += 1;
                id
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_props() {
        let net = PlaceNetwork::synthetic(3, &[(0, 1), (1, 2), (0, 2)]);
        let p = compute_global_props(&net, 7);
        assert_eq!(p.density, 1.0);
        assert_eq!(p.avg_clustering, 1.0);
        assert_eq!(p.diameter, 1);
        assert_eq!(p.avg_degree, 2.0);
        assert!(!p.empty);
    }

    #[test]
    fn four_path_props() {
        let net = PlaceNetwork::synthetic(4, &[(0, 1), (1, 2), (2, 3)]);
        let p = compute_global_props(&net, 7);
        assert_eq!(p.avg_degree, 1.5);
        assert_eq!(p.diameter, 3);
        assert_eq!(p.avg_clustering, 0.0);
    }

    #[test]
    fn empty_and_singleton() {
        let empty = compute_global_props(&PlaceNetwork::synthetic(0, &[]), 7);
        assert!(empty.empty);
        assert_eq!(empty.diameter, 0);
        let single = compute_global_props(&PlaceNetwork::synthetic(1, &[]), 7);
        assert!(!single.empty);
        assert_eq!(single.diameter, 0);
        assert_eq!(single.density, 0.0);
    }

    #[test]
    fn diameter_uses_largest_component() {
        // a 5-path (diameter 4) plus an isolated triangle
        let net = PlaceNetwork::synthetic(
            8,
            &[(0, 1), (1, 2), (2, 3), (3, 4), (5, 6), (6, 7), (5, 7)],
        );
        assert_eq!(largest_component_diameter(&net), 4);
    }

    #[test]
    fn single_community_modularity_is_exactly_zero() {
        let net = PlaceNetwork::synthetic(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let partition = vec![0; 5];
        assert_eq!(modularity(&net, &partition), 0.0);
    }

    #[test]
    fn two_cliques_partition_beats_single_community() {
        let net = PlaceNetwork::synthetic(
            8,
            &[
                (0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3),
                (4, 5), (4, 6), (4, 7), (5, 6), (5, 7), (6, 7),
                (3, 4),
            ],
        );
        let partition = louvain(&net, 42);
        assert_eq!(partition[0], partition[1]);
        assert_eq!(partition[0], partition[3]);
        assert_eq!(partition[4], partition[7]);
        assert_ne!(partition[0], partition[4]);
        assert!(modularity(&net, &partition) > 0.3);
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let mut edges = Vec::new();
        for u in 0..20u32 {
            for v in (u + 1)..20 {
                if (u * 7 + v * 13) % 5 == 0 {
                    edges.push((u, v));
                }
            }
        }
        let net = PlaceNetwork::synthetic(20, &edges);
        let a = compute_global_props(&net, 99);
        let b = compute_global_props(&net, 99);
        assert_eq!(a, b);
    }

    #[test]
    fn adding_edge_within_component_never_grows_diameter() {
        let base = vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)];
        let net = PlaceNetwork::synthetic(6, &base);
        let before = largest_component_diameter(&net);
        for extra in [(0u32, 3u32), (1, 4), (0, 5), (2, 5)] {
            let mut edges = base.clone();
            edges.push(extra);
            let after = largest_component_diameter(&PlaceNetwork::synthetic(6, &edges));
            assert!(after <= before, "edge {extra:?} grew diameter {before} -> {after}");
        }
    }
}
