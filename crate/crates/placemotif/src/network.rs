//! Daily undirected weighted networks of places and raw mobility statistics.

use std::collections::HashMap;
use std::io::Write;

use chrono::NaiveDate;
use serde_json::json;

use crate::error::{Error, Result};
use crate::ingest::categories::CategoryId;
use crate::ingest::{local_date, PoiIndex, Transition, VisitStop};

/// A network node: one POI with its category color and coordinates, either of
/// which may be missing.
#[derive(Debug, Clone)]
pub struct NodeInfo {
    pub poi_id: String,
    pub category: Option<CategoryId>,
    pub coord: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeInfo {
    pub u: u32,
    pub v: u32,
    pub weight: u32,
}

/// One day's undirected weighted graph of POIs. Nodes are sorted by POI id and
/// edges by endpoint indices, so equal inputs build byte-identical networks.
#[derive(Debug, Clone)]
pub struct PlaceNetwork {
    pub date: NaiveDate,
    nodes: Vec<NodeInfo>,
    by_poi: HashMap<String, u32>,
    edges: Vec<EdgeInfo>,
    adj: Vec<Vec<(u32, u32)>>, // (neighbor, edge index), sorted by neighbor
}

/// Raw per-day movement volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MobilityStats {
    pub date: NaiveDate,
    pub device_count: u64,
    pub flow_count: u64,
}

impl PlaceNetwork {
    /// Aggregates one day's transitions into an undirected weighted network.
    /// `u -> v` and `v -> u` merge into one edge whose weight counts every
    /// transition event. Transitions referencing POIs absent from the index
    /// keep their node (uncategorized, no coordinates) and emit a warning.
    pub fn build_daily(
        transitions: &[Transition],
        date: NaiveDate,
        poi_index: &PoiIndex,
    ) -> (Self, Vec<String>) {
        let mut poi_ids: Vec<&str> = Vec::new();
        let mut seen: HashMap<&str, ()> = HashMap::new();
        for t in transitions.iter().filter(|t| t.date == date) {
            for poi in [t.origin_poi.as_str(), t.dest_poi.as_str()] {
                if seen.insert(poi, ()).is_none() {
                    poi_ids.push(poi);
                }
            }
        }
        poi_ids.sort_unstable();

        let mut warnings = Vec::new();
        let mut nodes = Vec::with_capacity(poi_ids.len());
        let mut by_poi = HashMap::with_capacity(poi_ids.len());
        for (idx, poi_id) in poi_ids.iter().enumerate() {
            let info = match poi_index.get(poi_id) {
                Some(p) => NodeInfo {
                    poi_id: p.poi_id.clone(),
                    category: p.category,
                    coord: Some((p.lat, p.lng)),
                },
                None => {
                    warnings.push(format!("POI {poi_id} not in catalog; kept without category or coordinates"));
                    NodeInfo {
                        poi_id: (*poi_id).to_string(),
                        category: None,
                        coord: None,
                    }
                }
            };
            by_poi.insert(info.poi_id.clone(), idx as u32);
            nodes.push(info);
        }

        let mut weights: HashMap<(u32, u32), u32> = HashMap::new();
        for t in transitions.iter().filter(|t| t.date == date) {
            let a = by_poi[t.origin_poi.as_str()];
            let b = by_poi[t.dest_poi.as_str()];
            let key = (a.min(b), a.max(b));
            *weights.entry(key).or_insert(0) += 1;
        }
        let mut edges: Vec<EdgeInfo> = weights
            .into_iter()
            .map(|((u, v), weight)| EdgeInfo { u, v, weight })
            .collect();
        edges.sort_unstable_by_key(|e| (e.u, e.v));

        let net = Self::assemble(date, nodes, by_poi, edges);
        (net, warnings)
    }

    /// Builds a network directly from nodes and weighted edges; used by the
    /// generator, tests, and examples.
    pub fn from_parts(date: NaiveDate, nodes: Vec<NodeInfo>, edge_list: &[(u32, u32, u32)]) -> Result<Self> {
        let n = nodes.len() as u32;
        let mut by_poi = HashMap::with_capacity(nodes.len());
        for (idx, node) in nodes.iter().enumerate() {
            if by_poi.insert(node.poi_id.clone(), idx as u32).is_some() {
                return Err(Error::Config(format!("duplicate node {}", node.poi_id)));
            }
        }
        let mut weights: HashMap<(u32, u32), u32> = HashMap::new();
        for &(u, v, w) in edge_list {
            if u == v {
                return Err(Error::Config(format!("self-loop on node {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::Config(format!("edge ({u},{v}) out of range")));
            }
            if w == 0 {
                return Err(Error::Config("zero edge weight".into()));
            }
            *weights.entry((u.min(v), u.max(v))).or_insert(0) += w;
        }
        let mut edges: Vec<EdgeInfo> = weights
            .into_iter()
            .map(|((u, v), weight)| EdgeInfo { u, v, weight })
            .collect();
        edges.sort_unstable_by_key(|e| (e.u, e.v));
        Ok(Self::assemble(date, nodes, by_poi, edges))
    }

    /// Unit-weight anonymous network on `n` nodes; convenient for tests.
    pub fn synthetic(n: u32, edge_list: &[(u32, u32)]) -> Self {
        let nodes = (0..n)
            .map(|i| NodeInfo {
                poi_id: format!("n{i:06}"),
                category: None,
                coord: None,
            })
            .collect();
        let weighted: Vec<(u32, u32, u32)> = edge_list.iter().map(|&(u, v)| (u, v, 1)).collect();
        Self::from_parts(NaiveDate::default(), nodes, &weighted).expect("valid synthetic graph")
    }

    fn assemble(
        date: NaiveDate,
        nodes: Vec<NodeInfo>,
        by_poi: HashMap<String, u32>,
        edges: Vec<EdgeInfo>,
    ) -> Self {
        let mut adj: Vec<Vec<(u32, u32)>> = vec![Vec::new(); nodes.len()];
        for (idx, e) in edges.iter().enumerate() {
            adj[e.u as usize].push((e.v, idx as u32));
            adj[e.v as usize].push((e.u, idx as u32));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Self { date, nodes, by_poi, edges, adj }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[NodeInfo] {
        &self.nodes
    }

    pub fn edges(&self) -> &[EdgeInfo] {
        &self.edges
    }

    pub fn node(&self, idx: u32) -> &NodeInfo {
        &self.nodes[idx as usize]
    }

    pub fn node_index(&self, poi_id: &str) -> Option<u32> {
        self.by_poi.get(poi_id).copied()
    }

    pub fn degree(&self, idx: u32) -> usize {
        self.adj[idx as usize].len()
    }

    /// Neighbors of `idx` paired with the connecting edge's index, sorted.
    pub fn neighbors(&self, idx: u32) -> &[(u32, u32)] {
        &self.adj[idx as usize]
    }

    pub fn is_adjacent(&self, u: u32, v: u32) -> bool {
        self.edge_between(u, v).is_some()
    }

    pub fn edge_between(&self, u: u32, v: u32) -> Option<u32> {
        let list = &self.adj[u as usize];
        list.binary_search_by_key(&v, |&(nbr, _)| nbr)
            .ok()
            .map(|pos| list[pos].1)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.iter().map(|e| e.weight as u64).sum()
    }

    /// JSON export: `{date, nodes: [{poi_id, category, lat, lng}], edges: [{u, v, w}]}`.
    pub fn to_json(&self, category_name: impl Fn(CategoryId) -> String) -> serde_json::Value {
        let nodes: Vec<_> = self
            .nodes
            .iter()
            .map(|n| {
                json!({
                    "poi_id": n.poi_id,
                    "category": n.category.map(&category_name),
                    "lat": n.coord.map(|c| c.0),
                    "lng": n.coord.map(|c| c.1),
                })
            })
            .collect();
        let edges: Vec<_> = self
            .edges
            .iter()
            .map(|e| {
                json!({
                    "u": self.nodes[e.u as usize].poi_id,
                    "v": self.nodes[e.v as usize].poi_id,
                    "w": e.weight,
                })
            })
            .collect();
        json!({ "date": self.date.to_string(), "nodes": nodes, "edges": edges })
    }

    /// Edge-list CSV export: `u,v,w` with POI ids.
    pub fn write_edge_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["u", "v", "w"]).map_err(|e| Error::Stream(e.to_string()))?;
        for e in &self.edges {
            w.write_record([
                self.nodes[e.u as usize].poi_id.as_str(),
                self.nodes[e.v as usize].poi_id.as_str(),
                &e.weight.to_string(),
            ])
            .map_err(|er| Error::Stream(er.to_string()))?;
        }
        w.flush().map_err(|e| Error::Stream(e.to_string()))
    }
}

/// Distinct devices with at least one retained visit on `date`, plus that
/// date's transition count.
pub fn daily_mobility_stats(
    stops: &[VisitStop],
    transitions: &[Transition],
    date: NaiveDate,
    tz_offset_hours: i32,
) -> MobilityStats {
    let mut devices: Vec<&str> = stops
        .iter()
        .filter(|s| local_date(s.arrival, tz_offset_hours) == date)
        .map(|s| s.device_id.as_str())
        .collect();
    devices.sort_unstable();
    devices.dedup();
    let flow_count = transitions.iter().filter(|t| t.date == date).count() as u64;
    MobilityStats {
        date,
        device_count: devices.len() as u64,
        flow_count,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{attach_categories, categories::CategoryTable, PoiRecord};

    fn t(dev: &str, from: &str, to: &str, date: NaiveDate, idx: u32) -> Transition {
        Transition {
            device_id: dev.into(),
            origin_poi: from.into(),
            dest_poi: to.into(),
            date,
            order_index: idx,
        }
    }

    fn poi(id: &str, naics: &str) -> PoiRecord {
        PoiRecord { poi_id: id.into(), naics4: naics.into(), lat: 30.0, lng: -90.0 }
    }

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 8, 1).unwrap()
    }

    #[test]
    fn aggregates_both_directions_into_one_edge() {
        let table = CategoryTable::builtin();
        let index = attach_categories(&[poi("p1", "4471"), poi("p2", "6211"), poi("p3", "7225")], &table);
        let transitions = vec![
            t("d1", "p1", "p2", day(), 0),
            t("d2", "p2", "p1", day(), 0),
            t("d1", "p1", "p3", day(), 1),
        ];
        let (net, warnings) = PlaceNetwork::build_daily(&transitions, day(), &index);
        assert!(warnings.is_empty());
        assert_eq!(net.node_count(), 3);
        assert_eq!(net.edge_count(), 2);
        let p1 = net.node_index("p1").unwrap();
        let p2 = net.node_index("p2").unwrap();
        let p3 = net.node_index("p3").unwrap();
        let e12 = net.edge_between(p1, p2).unwrap();
        assert_eq!(net.edges()[e12 as usize].weight, 2);
        let e13 = net.edge_between(p1, p3).unwrap();
        assert_eq!(net.edges()[e13 as usize].weight, 1);
        assert!(net.edge_between(p2, p3).is_none());
        assert_eq!(net.total_weight(), 3);
    }

    #[test]
    fn empty_transitions_build_empty_network() {
        let index = PoiIndex::default();
        let (net, _) = PlaceNetwork::build_daily(&[], day(), &index);
        assert_eq!(net.node_count(), 0);
        assert_eq!(net.edge_count(), 0);
    }

    #[test]
    fn missing_poi_kept_with_warning() {
        let table = CategoryTable::builtin();
        let index = attach_categories(&[poi("p1", "4471")], &table);
        let transitions = vec![t("d1", "p1", "ghost", day(), 0)];
        let (net, warnings) = PlaceNetwork::build_daily(&transitions, day(), &index);
        assert_eq!(net.node_count(), 2);
        assert_eq!(warnings.len(), 1);
        let g = net.node_index("ghost").unwrap();
        assert!(net.node(g).category.is_none());
        assert!(net.node(g).coord.is_none());
    }

    #[test]
    fn order_independent_build() {
        let table = CategoryTable::builtin();
        let index = attach_categories(&[poi("p1", "4471"), poi("p2", "6211"), poi("p3", "7225")], &table);
        let mut transitions = vec![
            t("d1", "p1", "p2", day(), 0),
            t("d2", "p2", "p3", day(), 0),
            t("d3", "p3", "p1", day(), 0),
            t("d1", "p2", "p1", day(), 1),
        ];
        let (a, _) = PlaceNetwork::build_daily(&transitions, day(), &index);
        transitions.reverse();
        let (b, _) = PlaceNetwork::build_daily(&transitions, day(), &index);
        assert_eq!(a.edges(), b.edges());
        assert_eq!(
            a.nodes().iter().map(|n| &n.poi_id).collect::<Vec<_>>(),
            b.nodes().iter().map(|n| &n.poi_id).collect::<Vec<_>>()
        );
    }

    #[test]
    fn stats_count_devices_and_flows() {
        let stops = vec![
            VisitStop { device_id: "d1".into(), poi_id: "p1".into(), arrival: 1627804800, dwell_s: 300 },
            VisitStop { device_id: "d1".into(), poi_id: "p2".into(), arrival: 1627808400, dwell_s: 300 },
            VisitStop { device_id: "d2".into(), poi_id: "p1".into(), arrival: 1627804800, dwell_s: 300 },
        ];
        let transitions = vec![t("d1", "p1", "p2", day(), 0)];
        let stats = daily_mobility_stats(&stops, &transitions, day(), 0);
        assert_eq!(stats.device_count, 2);
        assert_eq!(stats.flow_count, 1);
        let none = daily_mobility_stats(&[], &[], day(), 0);
        assert_eq!((none.device_count, none.flow_count), (0, 0));
    }

    #[test]
    fn weight_sum_matches_flow_count() {
        let table = CategoryTable::builtin();
        let index = attach_categories(&[poi("p1", "4471"), poi("p2", "6211")], &table);
        let transitions = vec![
            t("d1", "p1", "p2", day(), 0),
            t("d1", "p2", "p1", day(), 1),
            t("d2", "p1", "p2", day(), 0),
        ];
        let (net, _) = PlaceNetwork::build_daily(&transitions, day(), &index);
        let stats = daily_mobility_stats(&[], &transitions, day(), 0);
        assert_eq!(net.total_weight(), stats.flow_count);
    }
}
