//! Daily visitation networks of places, attributed motif census, and
//! disruption/recovery metrics for lifestyle patterns.
//!
//! The pipeline runs in stages: ingest stop records and a POI catalog, build
//! one undirected weighted network of places per day, enumerate all connected
//! induced subgraphs on 2-4 nodes (the nine motif classes) with category
//! colorings, compute global network properties, then turn daily series into
//! weekday-aware baselines, percentage changes, and impact/recovery reports,
//! grouped into lifestyle clusters.
//!
//! See the `examples/` directory for runnable walkthroughs of each stage, or
//! use the `placemotif` binary to drive the whole pipeline from CSV inputs.

pub mod census;
pub mod error;
pub mod geo;
pub mod ingest;
pub mod lifestyle;
pub mod metrics;
pub mod netprops;
pub mod network;
pub mod pipeline;
pub mod synth;

pub use census::{
    classify_connected_subgraph, enumerate_census, motif_proximity, AttributedKey, CensusOptions,
    DailyCensus, M4Convention, MotifClass, Tally,
};
pub use error::{Error, Result};
pub use geo::{haversine_miles, EARTH_RADIUS_MI};
pub use ingest::categories::{Category, CategoryId, CategoryTable};
pub use ingest::{
    attach_categories, extract_transitions, filter_visits, local_date, parse_pois, parse_stops,
    PoiIndex, PoiRecord, StopFormat, Transition, VisitStop,
};
pub use lifestyle::{
    assign_clusters, builtin_rules, cluster_series, rank_attributed, ClusterAssignment,
    ClusterRule, ClusterSeries, RankedAttributed, RuleSet,
};
pub use metrics::{
    compute_baseline, max_impact, pct_change, recovery_duration, BaselineTable, ChangePoint,
    ChangeSeries, DailySeries, DateRange, Recovery, RecoveryReport,
};
pub use netprops::{compute_global_props, GlobalProps};
pub use network::{daily_mobility_stats, MobilityStats, NodeInfo, PlaceNetwork};
pub use pipeline::{run_pipeline, PipelineConfig, RunSummary};
pub use synth::{generate_scenario, write_scenario, GroundTruth, Scenario, ScenarioConfig};
