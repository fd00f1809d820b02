//! Attributed motif census: exact counts and mean proximities of every
//! connected induced subgraph on 2-4 nodes of a daily network.

pub mod canonical;
mod esu;
pub mod motif;

use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;

pub use canonical::AttributedKey;
pub use motif::{classify_connected_subgraph, M4Convention, MotifClass, ALL_CLASSES};

use crate::error::{Error, Result};
use crate::geo::haversine_miles;
use crate::network::PlaceNetwork;
use motif::{pair_count, pair_list, Shape};

#[derive(Debug, Clone, Copy)]
pub struct CensusOptions {
    pub convention: M4Convention,
    /// Abort (with an error, never by sampling) once this many connected
    /// subgraphs have been enumerated in one day.
    pub budget: Option<u64>,
}

impl Default for CensusOptions {
    fn default() -> Self {
        Self {
            convention: M4Convention::K4First,
            budget: None,
        }
    }
}

/// Count plus accumulated proximity for one motif class or attributed key.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Tally {
    pub count: u64,
    prox_sum: f64,
    prox_count: u64,
}

impl Tally {
    fn add(&mut self, proximity: Option<f64>) {
        self.count += 1;
        if let Some(p) = proximity {
            self.prox_sum += p;
            self.prox_count += 1;
        }
    }

    /// Mean over the instances that had full coordinates.
    pub fn mean_proximity(&self) -> Option<f64> {
        (self.prox_count > 0).then(|| self.prox_sum / self.prox_count as f64)
    }
}

/// One day's motif census.
#[derive(Debug, Clone)]
pub struct DailyCensus {
    pub date: NaiveDate,
    pub convention: M4Convention,
    classes: [Tally; 9],
    keys: BTreeMap<AttributedKey, Tally>,
    /// Instances excluded from proximity means because a member node had no
    /// coordinates (they still count toward frequencies).
    pub skipped_proximity: u64,
    /// Total connected subgraphs visited; the enumeration cost.
    pub subgraphs_enumerated: u64,
}

fn class_slot(class: MotifClass) -> usize {
    ALL_CLASSES.iter().position(|&c| c == class).unwrap()
}

impl DailyCensus {
    fn new(date: NaiveDate, convention: M4Convention) -> Self {
        Self {
            date,
            convention,
            classes: [Tally::default(); 9],
            keys: BTreeMap::new(),
            skipped_proximity: 0,
            subgraphs_enumerated: 0,
        }
    }

    pub fn class_tally(&self, class: MotifClass) -> Tally {
        self.classes[class_slot(class)]
    }

    pub fn classes(&self) -> impl Iterator<Item = (MotifClass, Tally)> + '_ {
        ALL_CLASSES.into_iter().map(|c| (c, self.classes[class_slot(c)]))
    }

    pub fn key_tally(&self, key: &AttributedKey) -> Option<Tally> {
        self.keys.get(key).copied()
    }

    pub fn keys(&self) -> impl Iterator<Item = (&AttributedKey, &Tally)> {
        self.keys.iter()
    }

    pub fn distinct_keys(&self) -> usize {
        self.keys.len()
    }

    pub fn total_count(&self) -> u64 {
        self.classes.iter().map(|t| t.count).sum()
    }
}

/// Counts every connected induced subgraph on 2, 3, and 4 nodes exactly once
/// (by vertex set, ignoring edge weights) and tallies counts and proximity
/// means per motif class and per attributed key. Instances containing an
/// uncategorized node count toward their class only.
pub fn enumerate_census(network: &PlaceNetwork, options: &CensusOptions) -> Result<DailyCensus> {
    let conv = options.convention;
    let n = network.node_count();

    let adj: Vec<Vec<u32>> = (0..n as u32)
        .map(|v| network.neighbors(v).iter().map(|&(nbr, _)| nbr).collect())
        .collect();
    let edge_len: Vec<Option<f64>> = network
        .edges()
        .iter()
        .map(|e| {
            let a = network.node(e.u).coord?;
            let b = network.node(e.v).coord?;
            haversine_miles(a, b).ok()
        })
        .collect();
    let colors: Vec<Option<u8>> = network
        .nodes()
        .iter()
        .map(|node| node.category.map(|c| c.0))
        .collect();

    let mut census = DailyCensus::new(network.date, conv);
    let mut key_acc: HashMap<AttributedKey, Tally> = HashMap::new();
    let mut enumerated = 0u64;
    let mut over_budget = false;

    enumerate_connected(network, &adj, &edge_len, &colors, options, &mut |tallied| {
        enumerated += 1;
        if let Some(budget) = options.budget {
            if enumerated > budget {
                over_budget = true;
                return false;
            }
        }
        let Emitted { class, proximity, key } = tallied;
        census.classes[class_slot(class)].add(proximity);
        if proximity.is_none() {
            census.skipped_proximity += 1;
        }
        if let Some(key) = key {
            key_acc.entry(key).or_default().add(proximity);
        }
        true
    });

    if over_budget {
        return Err(Error::CensusBudget {
            enumerated,
            budget: options.budget.unwrap_or(0),
        });
    }
    census.subgraphs_enumerated = enumerated;
    census.keys = key_acc.into_iter().collect();
    Ok(census)
}

struct Emitted {
    class: MotifClass,
    proximity: Option<f64>,
    key: Option<AttributedKey>,
}

fn enumerate_connected(
    network: &PlaceNetwork,
    adj: &[Vec<u32>],
    edge_len: &[Option<f64>],
    colors: &[Option<u8>],
    options: &CensusOptions,
    handle: &mut impl FnMut(Emitted) -> bool,
) {
    let conv = options.convention;
    esu::enumerate_connected_subgraphs(adj, 4, |members| {
        let k = members.len();
        let pairs = pair_list(k);
        let npairs = pair_count(k);
        let mut bits = 0u8;
        let mut length_sum = 0.0;
        let mut missing_length = false;
        for (idx, &(i, j)) in pairs.iter().enumerate() {
            if let Some(edge) = network.edge_between(members[i], members[j]) {
                bits |= 1 << (npairs - 1 - idx);
                match edge_len[edge as usize] {
                    Some(len) => length_sum += len,
                    None => missing_length = true,
                }
            }
        }
        let shape = Shape::classify_connected(k, bits);
        let proximity = (!missing_length).then(|| length_sum / shape.edge_count() as f64);

        let mut member_colors = [0u8; 4];
        let mut all_colored = true;
        for (slot, &m) in member_colors.iter_mut().zip(members.iter()) {
            match colors[m as usize] {
                Some(c) => *slot = c,
                None => {
                    all_colored = false;
                    break;
                }
            }
        }
        let key = all_colored
            .then(|| canonical::canonical_key(shape, bits, &member_colors[..k], conv));

        handle(Emitted {
            class: shape.class(conv),
            proximity,
            key,
        })
    });
}

/// Mean haversine length over the induced edges of one motif instance, given
/// as node indices of `network`. Fails when a member has no coordinates.
pub fn motif_proximity(network: &PlaceNetwork, members: &[u32]) -> Result<f64> {
    let k = members.len();
    if !(2..=4).contains(&k) {
        return Err(Error::NotAMotif(format!("{k} members")));
    }
    for window in 0..k {
        for other in (window + 1)..k {
            if members[window] == members[other] {
                return Err(Error::NotAMotif("repeated member".into()));
            }
        }
    }
    let mut edges = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            if network.is_adjacent(members[i], members[j]) {
                edges.push((i, j));
            }
        }
    }
    // connectivity over the induced edges
    let mut seen = [false; 4];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(a, b) in &edges {
            let next = if a == v { b } else if b == v { a } else { continue };
            if !seen[next] {
                seen[next] = true;
                stack.push(next);
            }
        }
    }
    if seen[..k].iter().any(|s| !s) {
        return Err(Error::NotAMotif("induced subgraph is disconnected".into()));
    }
    let mut sum = 0.0;
    for &(i, j) in &edges {
        let a = network
            .node(members[i])
            .coord
            .ok_or_else(|| Error::ProximityUnavailable(network.node(members[i]).poi_id.clone()))?;
        let b = network
            .node(members[j])
            .coord
            .ok_or_else(|| Error::ProximityUnavailable(network.node(members[j]).poi_id.clone()))?;
        sum += haversine_miles(a, b)?;
    }
    Ok(sum / edges.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::EARTH_RADIUS_MI;
    use crate::ingest::categories::CategoryId;
    use crate::network::NodeInfo;

    fn counts(net: &PlaceNetwork) -> BTreeMap<MotifClass, u64> {
        let census = enumerate_census(net, &CensusOptions::default()).unwrap();
        census.classes().map(|(c, t)| (c, t.count)).collect()
    }

    fn expect(census: &BTreeMap<MotifClass, u64>, nonzero: &[(MotifClass, u64)]) {
        for &class in ALL_CLASSES.iter() {
            let want = nonzero
                .iter()
                .find(|(c, _)| *c == class)
                .map(|&(_, n)| n)
                .unwrap_or(0);
            assert_eq!(census[&class], want, "{class}");
        }
    }

    /// Degrees of longitude per mile along the equator; edges laid out on the
    /// equator get exact great-circle lengths.
    fn deg_per_mile() -> f64 {
        180.0 / (std::f64::consts::PI * EARTH_RADIUS_MI)
    }

    fn node_at(id: &str, lng_miles: f64, category: Option<u8>) -> NodeInfo {
        NodeInfo {
            poi_id: id.to_string(),
            category: category.map(CategoryId),
            coord: Some((0.0, lng_miles * deg_per_mile())),
        }
    }

    #[test]
    fn complete_four_node_graph() {
        // frozen from the all-subsets oracle: 6 edges, 4 triangles, one K4
        let net = PlaceNetwork::synthetic(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        expect(&counts(&net), &[(MotifClass::M2_1, 6), (MotifClass::M3_2, 4), (MotifClass::M4_1, 1)]);
    }

    #[test]
    fn four_path() {
        let net = PlaceNetwork::synthetic(4, &[(0, 1), (1, 2), (2, 3)]);
        expect(&counts(&net), &[(MotifClass::M2_1, 3), (MotifClass::M3_1, 2), (MotifClass::M4_5, 1)]);
    }

    #[test]
    fn two_triangles_bridged() {
        // frozen from the all-subsets oracle on this exact graph
        let net = PlaceNetwork::synthetic(
            6,
            &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3), (1, 4)],
        );
        expect(
            &counts(&net),
            &[
                (MotifClass::M2_1, 8),
                (MotifClass::M3_1, 8),
                (MotifClass::M3_2, 2),
                (MotifClass::M4_3, 1),
                (MotifClass::M4_4, 4),
                (MotifClass::M4_5, 6),
            ],
        );
    }

    #[test]
    fn empty_network_counts_nothing() {
        let net = PlaceNetwork::synthetic(0, &[]);
        let census = enumerate_census(&net, &CensusOptions::default()).unwrap();
        assert_eq!(census.total_count(), 0);
        assert_eq!(census.subgraphs_enumerated, 0);
    }

    #[test]
    fn convention_switch_swaps_dense_labels() {
        let net = PlaceNetwork::synthetic(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let diamond_first = CensusOptions {
            convention: M4Convention::DiamondFirst,
            budget: None,
        };
        let census = enumerate_census(&net, &diamond_first).unwrap();
        assert_eq!(census.class_tally(MotifClass::M4_2).count, 1);
        assert_eq!(census.class_tally(MotifClass::M4_1).count, 0);
    }

    #[test]
    fn budget_aborts_with_error() {
        let net = PlaceNetwork::synthetic(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let opts = CensusOptions {
            convention: M4Convention::K4First,
            budget: Some(3),
        };
        match enumerate_census(&net, &opts) {
            Err(Error::CensusBudget { budget: 3, .. }) => {}
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn edge_count_equals_m2_count() {
        let net = PlaceNetwork::synthetic(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3)]);
        let census = enumerate_census(&net, &CensusOptions::default()).unwrap();
        assert_eq!(census.class_tally(MotifClass::M2_1).count, net.edge_count() as u64);
    }

    #[test]
    fn proximity_mean_over_induced_edges() {
        // collinear points on the equator at 0, 1, 3 miles: pairwise
        // distances 1, 2, 3; the graph triangle has mean proximity 2
        let nodes = vec![node_at("a", 0.0, None), node_at("b", 1.0, None), node_at("c", 3.0, None)];
        let net = PlaceNetwork::from_parts(NaiveDate::default(), nodes, &[(0, 1, 1), (1, 2, 1), (0, 2, 1)]).unwrap();
        let p = motif_proximity(&net, &[0, 1, 2]).unwrap();
        assert!((p - 2.0).abs() < 1e-9, "{p}");
    }

    #[test]
    fn proximity_ignores_non_adjacent_pair() {
        // path a-b-c with edges 2 and 4 miles; the 6-mile a..c pair is not an edge
        let nodes = vec![node_at("a", 0.0, None), node_at("b", 2.0, None), node_at("c", 6.0, None)];
        let net = PlaceNetwork::from_parts(NaiveDate::default(), nodes, &[(0, 1, 1), (1, 2, 1)]).unwrap();
        let p = motif_proximity(&net, &[0, 1, 2]).unwrap();
        assert!((p - 3.0).abs() < 1e-9, "{p}");
    }

    #[test]
    fn single_edge_proximity() {
        let nodes = vec![node_at("a", 0.0, None), node_at("b", 1.0, None)];
        let net = PlaceNetwork::from_parts(NaiveDate::default(), nodes, &[(0, 1, 1)]).unwrap();
        let p = motif_proximity(&net, &[0, 1]).unwrap();
        assert!((p - 1.0).abs() < 1e-9, "{p}");
    }

    #[test]
    fn missing_coordinates_error_and_skip() {
        let nodes = vec![
            node_at("a", 0.0, Some(0)),
            NodeInfo { poi_id: "b".into(), category: Some(CategoryId(1)), coord: None },
        ];
        let net = PlaceNetwork::from_parts(NaiveDate::default(), nodes, &[(0, 1, 1)]).unwrap();
        assert!(matches!(
            motif_proximity(&net, &[0, 1]),
            Err(Error::ProximityUnavailable(_))
        ));
        let census = enumerate_census(&net, &CensusOptions::default()).unwrap();
        assert_eq!(census.skipped_proximity, 1);
        assert_eq!(census.class_tally(MotifClass::M2_1).count, 1);
        assert!(census.class_tally(MotifClass::M2_1).mean_proximity().is_none());
    }

    #[test]
    fn uncategorized_nodes_count_in_class_only() {
        let nodes = vec![
            node_at("a", 0.0, Some(0)),
            node_at("b", 1.0, Some(1)),
            node_at("c", 2.0, None),
        ];
        let net = PlaceNetwork::from_parts(NaiveDate::default(), nodes, &[(0, 1, 1), (1, 2, 1)]).unwrap();
        let census = enumerate_census(&net, &CensusOptions::default()).unwrap();
        assert_eq!(census.class_tally(MotifClass::M2_1).count, 2);
        assert_eq!(census.class_tally(MotifClass::M3_1).count, 1);
        // only the a-b edge is fully categorized
        let attributed_m2: u64 = census
            .keys()
            .filter(|(k, _)| k.class == MotifClass::M2_1)
            .map(|(_, t)| t.count)
            .sum();
        assert_eq!(attributed_m2, 1);
        let attributed_m3: u64 = census
            .keys()
            .filter(|(k, _)| k.class == MotifClass::M3_1)
            .map(|(_, t)| t.count)
            .sum();
        assert_eq!(attributed_m3, 0);
    }

    #[test]
    fn attributed_counts_partition_class_counts_when_all_colored() {
        let nodes = vec![
            node_at("a", 0.0, Some(0)),
            node_at("b", 1.0, Some(1)),
            node_at("c", 2.0, Some(0)),
            node_at("d", 3.0, Some(2)),
        ];
        let net = PlaceNetwork::from_parts(
            NaiveDate::default(),
            nodes,
            &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 2, 1)],
        )
        .unwrap();
        let census = enumerate_census(&net, &CensusOptions::default()).unwrap();
        for class in ALL_CLASSES {
            let keyed: u64 = census
                .keys()
                .filter(|(k, _)| k.class == class)
                .map(|(_, t)| t.count)
                .sum();
            assert_eq!(keyed, census.class_tally(class).count, "{class}");
        }
    }

    #[test]
    fn motif_proximity_rejects_bad_instances() {
        let net = PlaceNetwork::synthetic(5, &[(0, 1), (2, 3)]);
        assert!(matches!(motif_proximity(&net, &[0, 1, 2]), Err(Error::NotAMotif(_))));
        assert!(matches!(motif_proximity(&net, &[0]), Err(Error::NotAMotif(_))));
        assert!(matches!(motif_proximity(&net, &[0, 0]), Err(Error::NotAMotif(_))));
    }
}
