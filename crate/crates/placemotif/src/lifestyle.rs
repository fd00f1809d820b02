//! Ranking of attributed motifs and rule-based lifestyle clustering.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::census::{AttributedKey, DailyCensus, MotifClass, ALL_CLASSES};
use crate::error::{Error, Result};
use crate::ingest::categories::{CategoryId, CategoryTable};
use crate::metrics::DailySeries;

/// Top attributed keys of one motif class over the whole calendar.
#[derive(Debug, Clone)]
pub struct RankedClass {
    /// Sorted descending by total count; ties break by canonical key order.
    pub keys: Vec<(AttributedKey, u64)>,
    /// Total instances of the class (attributed or not) over the calendar.
    pub class_total: u64,
    /// Top-k total over class total.
    pub coverage_share: f64,
    /// True when the class had fewer distinct keys than requested.
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct RankedAttributed {
    pub k: usize,
    pub per_class: BTreeMap<MotifClass, RankedClass>,
}

impl RankedAttributed {
    pub fn all_keys(&self) -> impl Iterator<Item = &AttributedKey> {
        self.per_class.values().flat_map(|rc| rc.keys.iter().map(|(k, _)| k))
    }

    pub fn total_ranked_count(&self) -> u64 {
        self.per_class
            .values()
            .flat_map(|rc| rc.keys.iter().map(|(_, n)| *n))
            .sum()
    }
}

/// Sums attributed-key counts across the calendar and keeps the top `k` per
/// class. Classes with fewer than `k` keys return what they have, flagged.
pub fn rank_attributed(censuses: &[DailyCensus], k: usize) -> RankedAttributed {
    let mut totals: HashMap<AttributedKey, u64> = HashMap::new();
    let mut class_totals: BTreeMap<MotifClass, u64> = BTreeMap::new();
    for census in censuses {
        for (class, tally) in census.classes() {
            *class_totals.entry(class).or_insert(0) += tally.count;
        }
        for (key, tally) in census.keys() {
            *totals.entry(*key).or_insert(0) += tally.count;
        }
    }
    let mut per_class = BTreeMap::new();
    for class in ALL_CLASSES {
        let mut keys: Vec<(AttributedKey, u64)> = totals
            .iter()
            .filter(|(key, _)| key.class == class)
            .map(|(key, &n)| (*key, n))
            .collect();
        keys.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let truncated = keys.len() < k;
        keys.truncate(k);
        let top_total: u64 = keys.iter().map(|(_, n)| n).sum();
        let class_total = class_totals.get(&class).copied().unwrap_or(0);
        let coverage_share = if class_total > 0 {
            top_total as f64 / class_total as f64
        } else {
            0.0
        };
        per_class.insert(
            class,
            RankedClass {
                keys,
                class_total,
                coverage_share,
                truncated,
            },
        );
    }
    RankedAttributed { k, per_class }
}

/// Declarative predicate over an attributed key's category multiset. Lower
/// `priority` wins when several rules match.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterRule {
    pub name: String,
    pub priority: u32,
    #[serde(default)]
    pub require_any: Vec<String>,
    #[serde(default)]
    pub require_all: Vec<String>,
    #[serde(default)]
    pub forbid: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RuleFile {
    clusters: Vec<ClusterRule>,
}

/// Rules resolved against a category table.
#[derive(Debug, Clone)]
pub struct RuleSet {
    rules: Vec<ResolvedRule>,
}

#[derive(Debug, Clone)]
struct ResolvedRule {
    name: String,
    priority: u32,
    require_any: Vec<CategoryId>,
    require_all: Vec<CategoryId>,
    forbid: Vec<CategoryId>,
}

impl RuleSet {
    pub fn resolve(rules: &[ClusterRule], table: &CategoryTable) -> Result<Self> {
        let mut resolved = Vec::with_capacity(rules.len());
        let mut seen_priorities: HashMap<u32, &str> = HashMap::new();
        for rule in rules {
            if rule.name.trim().is_empty() {
                return Err(Error::Config("cluster rule with empty name".into()));
            }
            if let Some(other) = seen_priorities.insert(rule.priority, &rule.name) {
                return Err(Error::Config(format!(
                    "rules '{}' and '{}' share priority {}",
                    other, rule.name, rule.priority
                )));
            }
            let lookup = |names: &[String]| -> Result<Vec<CategoryId>> {
                names
                    .iter()
                    .map(|n| {
                        table.id_by_name(n).ok_or_else(|| {
                            Error::Config(format!("rule '{}': unknown category '{n}'", rule.name))
                        })
                    })
                    .collect()
            };
            resolved.push(ResolvedRule {
                name: rule.name.clone(),
                priority: rule.priority,
                require_any: lookup(&rule.require_any)?,
                require_all: lookup(&rule.require_all)?,
                forbid: lookup(&rule.forbid)?,
            });
        }
        resolved.sort_by_key(|r| r.priority);
        Ok(Self { rules: resolved })
    }

    /// Loads `{"clusters": [{name, priority, require_any, require_all, forbid}]}`.
    pub fn from_json(reader: impl Read, table: &CategoryTable) -> Result<Self> {
        let file: RuleFile = serde_json::from_reader(reader)
            .map_err(|e| Error::Config(format!("rule file JSON: {e}")))?;
        Self::resolve(&file.clusters, table)
    }

    /// The built-in approximation of the four lifestyle clusters.
    pub fn builtin(table: &CategoryTable) -> Self {
        Self::resolve(&builtin_rules(), table).expect("built-in rules are valid")
    }

    pub fn cluster_names(&self) -> Vec<String> {
        self.rules.iter().map(|r| r.name.clone()).collect()
    }

    fn matches(rule: &ResolvedRule, colors: &[CategoryId]) -> bool {
        if !rule.require_any.is_empty() && !rule.require_any.iter().any(|c| colors.contains(c)) {
            return false;
        }
        if !rule.require_all.iter().all(|c| colors.contains(c)) {
            return false;
        }
        if rule.forbid.iter().any(|c| colors.contains(c)) {
            return false;
        }
        true
    }

    /// Name of the highest-priority matching cluster, if any.
    pub fn assign(&self, key: &AttributedKey) -> Option<&str> {
        let colors: Vec<CategoryId> = key.colors().collect();
        self.rules
            .iter()
            .find(|r| Self::matches(r, &colors))
            .map(|r| r.name.as_str())
    }
}

/// The shipped rule file content: healthcare, commute, dining-out, young.
pub fn builtin_rules() -> Vec<ClusterRule> {
    let rule = |name: &str, priority: u32, require_any: &[&str]| ClusterRule {
        name: name.to_string(),
        priority,
        require_any: require_any.iter().map(|s| s.to_string()).collect(),
        require_all: Vec::new(),
        forbid: Vec::new(),
    };
    vec![
        rule("healthcare", 1, &["Health Care"]),
        rule(
            "commute",
            2,
            &[
                "Financial Investment Service",
                "Public Administration",
                "Household and Real Estate",
                "Educational Service",
                "Gasoline Stations",
                "Grocery Stores",
            ],
        ),
        rule("dining-out", 3, &["Restaurants"]),
        rule(
            "young",
            4,
            &["Amusement and Recreation", "Clothing Stores", "Drinking Places"],
        ),
    ]
}

/// Deterministic key -> cluster assignment; `None` marks unassigned keys.
#[derive(Debug, Clone)]
pub struct ClusterAssignment {
    pub by_key: BTreeMap<AttributedKey, Option<String>>,
    pub cluster_names: Vec<String>,
}

/// Assigns every ranked key to the highest-priority matching rule.
pub fn assign_clusters(ranked: &RankedAttributed, rules: &RuleSet) -> ClusterAssignment {
    let by_key = ranked
        .all_keys()
        .map(|key| (*key, rules.assign(key).map(str::to_string)))
        .collect();
    ClusterAssignment {
        by_key,
        cluster_names: rules.cluster_names(),
    }
}

/// Daily frequency and proximity series for one cluster, plus its share of
/// the ranked motifs over the calendar.
#[derive(Debug, Clone)]
pub struct ClusterSeries {
    pub cluster: String,
    pub frequency: DailySeries,
    pub proximity: DailySeries,
    pub total_count: u64,
    pub share_of_ranked: f64,
}

pub const UNASSIGNED: &str = "unassigned";

/// Aggregates member-key tallies per cluster per day. Frequency sums member
/// counts; proximity is the count-weighted mean of member keys' mean
/// proximities. Days where the census ran but no member key appeared count a
/// frequency of 0; proximity stays missing there.
pub fn cluster_series(censuses: &[DailyCensus], assignment: &ClusterAssignment) -> Vec<ClusterSeries> {
    let mut order: Vec<String> = assignment.cluster_names.clone();
    order.push(UNASSIGNED.to_string());

    let mut freq: BTreeMap<&str, DailySeries> = BTreeMap::new();
    let mut prox: BTreeMap<&str, DailySeries> = BTreeMap::new();
    let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
    for name in &order {
        freq.insert(name, DailySeries::new(format!("cluster:{name}:frequency")));
        prox.insert(name, DailySeries::new(format!("cluster:{name}:proximity")));
        totals.insert(name, 0);
    }

    for census in censuses {
        let mut day_count: BTreeMap<&str, u64> = BTreeMap::new();
        let mut day_wsum: BTreeMap<&str, f64> = BTreeMap::new();
        let mut day_weight: BTreeMap<&str, u64> = BTreeMap::new();
        for name in &order {
            day_count.insert(name, 0);
        }
        for (key, tally) in census.keys() {
            let Some(cluster) = assignment.by_key.get(key) else {
                continue; // key outside the ranked set
            };
            let name: &str = cluster.as_deref().unwrap_or(UNASSIGNED);
            *day_count.get_mut(name).unwrap() += tally.count;
            if let Some(p) = tally.mean_proximity() {
                *day_wsum.entry(name).or_insert(0.0) += p * tally.count as f64;
                *day_weight.entry(name).or_insert(0) += tally.count;
            }
        }
        for name in &order {
            let name = name.as_str();
            let count = day_count[name];
            freq.get_mut(name).unwrap().insert(census.date, count as f64);
            *totals.get_mut(name).unwrap() += count;
            if let Some(&w) = day_weight.get(name) {
                if w > 0 {
                    prox.get_mut(name)
                        .unwrap()
                        .insert(census.date, day_wsum[name] / w as f64);
                }
            }
        }
    }

    let ranked_total: u64 = totals.values().sum();
    order
        .iter()
        .map(|name| {
            let total_count = totals[name.as_str()];
            ClusterSeries {
                cluster: name.clone(),
                frequency: freq.remove(name.as_str()).unwrap(),
                proximity: prox.remove(name.as_str()).unwrap(),
                total_count,
                share_of_ranked: if ranked_total > 0 {
                    total_count as f64 / ranked_total as f64
                } else {
                    0.0
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::census::{enumerate_census, CensusOptions};
    use crate::network::{NodeInfo, PlaceNetwork};
    use chrono::NaiveDate;

    fn table() -> CategoryTable {
        CategoryTable::builtin()
    }

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 8, day).unwrap()
    }

    /// Small helper: a one-day census from a colored path network.
    fn census_of(date: NaiveDate, colors: &[&str], edges: &[(u32, u32)]) -> DailyCensus {
        let t = table();
        let nodes: Vec<NodeInfo> = colors
            .iter()
            .enumerate()
            .map(|(i, name)| NodeInfo {
                poi_id: format!("p{i}"),
                category: Some(t.id_by_name(name).unwrap()),
                coord: Some((0.0, 0.001 * i as f64)),
            })
            .collect();
        let weighted: Vec<(u32, u32, u32)> = edges.iter().map(|&(u, v)| (u, v, 1)).collect();
        let net = PlaceNetwork::from_parts(date, nodes, &weighted).unwrap();
        enumerate_census(&net, &CensusOptions::default()).unwrap()
    }

    #[test]
    fn ranking_sorts_and_reports_coverage() {
        // one day: a Health-Health edge appears twice (two disjoint edges),
        // Restaurants-Restaurants once
        let census = census_of(
            d(1),
            &["Health Care", "Health Care", "Health Care", "Health Care", "Restaurants", "Restaurants"],
            &[(0, 1), (2, 3), (4, 5)],
        );
        let ranked = rank_attributed(&[census], 2);
        let m2 = &ranked.per_class[&MotifClass::M2_1];
        assert_eq!(m2.class_total, 3);
        assert_eq!(m2.keys.len(), 2);
        assert_eq!(m2.keys[0].1, 2); // HH first
        assert_eq!(m2.keys[1].1, 1);
        assert!((m2.coverage_share - 1.0).abs() < 1e-12);
        assert!(!m2.truncated);
        assert!(ranked.per_class[&MotifClass::M3_1].keys.is_empty());
        assert!(ranked.per_class[&MotifClass::M3_1].truncated);
    }

    #[test]
    fn ranking_top_k_cuts_tail() {
        let census = census_of(
            d(1),
            &["Health Care", "Health Care", "Restaurants", "Gasoline Stations"],
            &[(0, 1), (1, 2), (2, 3)],
        );
        let ranked = rank_attributed(&[census], 1);
        let m2 = &ranked.per_class[&MotifClass::M2_1];
        assert_eq!(m2.keys.len(), 1);
        assert_eq!(m2.class_total, 3);
        assert!(m2.coverage_share < 1.0);
    }

    #[test]
    fn priority_orders_assignment() {
        let t = table();
        let rules = RuleSet::builtin(&t);
        let census = census_of(d(1), &["Health Care", "Restaurants"], &[(0, 1)]);
        let ranked = rank_attributed(&[census], 10);
        let assignment = assign_clusters(&ranked, &rules);
        // the Health+Restaurant edge matches healthcare (priority 1) over dining-out
        let (key, cluster) = assignment.by_key.iter().next().unwrap();
        assert_eq!(key.class, MotifClass::M2_1);
        assert_eq!(cluster.as_deref(), Some("healthcare"));
    }

    #[test]
    fn dining_requires_no_higher_priority_category() {
        let t = table();
        let rules = RuleSet::builtin(&t);
        let census = census_of(d(1), &["Restaurants", "Drinking Places"], &[(0, 1)]);
        let ranked = rank_attributed(&[census], 10);
        let assignment = assign_clusters(&ranked, &rules);
        let (_, cluster) = assignment.by_key.iter().next().unwrap();
        assert_eq!(cluster.as_deref(), Some("dining-out"));
    }

    #[test]
    fn grocery_restaurant_pair_goes_to_commute() {
        let t = table();
        let rules = RuleSet::builtin(&t);
        let census = census_of(d(1), &["Restaurants", "Grocery Stores"], &[(0, 1)]);
        let ranked = rank_attributed(&[census], 10);
        let assignment = assign_clusters(&ranked, &rules);
        let (_, cluster) = assignment.by_key.iter().next().unwrap();
        assert_eq!(cluster.as_deref(), Some("commute"));
    }

    #[test]
    fn unmatched_key_is_unassigned() {
        let t = table();
        let rules = RuleSet::builtin(&t);
        let census = census_of(d(1), &["Postal Services", "Shoe Stores"], &[(0, 1)]);
        let ranked = rank_attributed(&[census], 10);
        let assignment = assign_clusters(&ranked, &rules);
        let (_, cluster) = assignment.by_key.iter().next().unwrap();
        assert_eq!(cluster.as_deref(), None);
    }

    #[test]
    fn duplicate_priorities_rejected() {
        let t = table();
        let mut rules = builtin_rules();
        rules[1].priority = 1;
        assert!(RuleSet::resolve(&rules, &t).is_err());
    }

    #[test]
    fn unknown_category_in_rule_rejected() {
        let t = table();
        let mut rules = builtin_rules();
        rules[0].require_any.push("No Such Category".into());
        assert!(RuleSet::resolve(&rules, &t).is_err());
    }

    #[test]
    fn rule_permutation_with_same_priorities_is_identical() {
        let t = table();
        let mut rules = builtin_rules();
        let census = census_of(
            d(1),
            &["Health Care", "Restaurants", "Grocery Stores", "Clothing Stores"],
            &[(0, 1), (1, 2), (2, 3)],
        );
        let ranked = rank_attributed(&[census], 10);
        let a = assign_clusters(&ranked, &RuleSet::resolve(&rules, &t).unwrap());
        rules.reverse();
        let b = assign_clusters(&ranked, &RuleSet::resolve(&rules, &t).unwrap());
        assert_eq!(a.by_key, b.by_key);
    }

    #[test]
    fn cluster_series_weighted_mean() {
        // two dining keys on one day: (count 1, prox 1.0) and (count 3, prox 3.0)
        // via two Restaurant-pair edges far apart and a triple edge set
        let t = table();
        let rules = RuleSet::builtin(&t);
        // day 1: Restaurants-Restaurants edge (count 1, length 1 mile) and
        // Restaurants-Shoe edges x3 (each 3 miles)
        let mile = 180.0 / (std::f64::consts::PI * crate::geo::EARTH_RADIUS_MI);
        let nodes = vec![
            NodeInfo { poi_id: "r1".into(), category: Some(t.id_by_name("Restaurants").unwrap()), coord: Some((0.0, 0.0)) },
            NodeInfo { poi_id: "r2".into(), category: Some(t.id_by_name("Restaurants").unwrap()), coord: Some((0.0, mile)) },
            NodeInfo { poi_id: "s1".into(), category: Some(t.id_by_name("Shoe Stores").unwrap()), coord: Some((0.0, 4.0 * mile)) },
            NodeInfo { poi_id: "r3".into(), category: Some(t.id_by_name("Restaurants").unwrap()), coord: Some((0.0, 7.0 * mile)) },
            NodeInfo { poi_id: "s2".into(), category: Some(t.id_by_name("Shoe Stores").unwrap()), coord: Some((0.0, 10.0 * mile)) },
            NodeInfo { poi_id: "r4".into(), category: Some(t.id_by_name("Restaurants").unwrap()), coord: Some((0.0, 13.0 * mile)) },
            NodeInfo { poi_id: "s3".into(), category: Some(t.id_by_name("Shoe Stores").unwrap()), coord: Some((0.0, 16.0 * mile)) },
            NodeInfo { poi_id: "r5".into(), category: Some(t.id_by_name("Restaurants").unwrap()), coord: Some((0.0, 19.0 * mile)) },
        ];
        let net = PlaceNetwork::from_parts(
            d(1),
            nodes,
            &[(0, 1, 1), (2, 3, 1), (4, 5, 1), (6, 7, 1)],
        )
        .unwrap();
        let census = enumerate_census(&net, &CensusOptions::default()).unwrap();
        let ranked = rank_attributed(std::slice::from_ref(&census), 10);
        let assignment = assign_clusters(&ranked, &rules);
        let series = cluster_series(std::slice::from_ref(&census), &assignment);
        let dining = series.iter().find(|s| s.cluster == "dining-out").unwrap();
        assert_eq!(dining.frequency.get(d(1)), Some(4.0));
        // weighted mean: (1*1.0 + 3*3.0) / 4 = 2.5
        let p = dining.proximity.get(d(1)).unwrap();
        assert!((p - 2.5).abs() < 1e-9, "{p}");
        assert_eq!(dining.total_count, 4);
    }

    #[test]
    fn cluster_frequencies_partition_ranked_totals() {
        let census = census_of(
            d(1),
            &["Health Care", "Restaurants", "Grocery Stores", "Clothing Stores", "Postal Services"],
            &[(0, 1), (1, 2), (2, 3), (3, 4)],
        );
        let t = table();
        let rules = RuleSet::builtin(&t);
        let ranked = rank_attributed(std::slice::from_ref(&census), 10);
        let assignment = assign_clusters(&ranked, &rules);
        let series = cluster_series(std::slice::from_ref(&census), &assignment);
        let sum: f64 = series.iter().map(|s| s.frequency.get(d(1)).unwrap_or(0.0)).sum();
        assert_eq!(sum as u64, ranked.total_ranked_count());
        let share_sum: f64 = series.iter().map(|s| s.share_of_ranked).sum();
        assert!((share_sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rule_file_round_trip() {
        let t = table();
        let json = serde_json::to_string(&RuleFile { clusters: builtin_rules() }).unwrap();
        let rules = RuleSet::from_json(json.as_bytes(), &t).unwrap();
        assert_eq!(rules.cluster_names(), vec!["healthcare", "commute", "dining-out", "young"]);
    }
}
