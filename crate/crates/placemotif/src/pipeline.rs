//! End-to-end pipeline orchestration: ingest -> networks -> census -> props
//! -> metrics -> clusters, with deterministic report bundles.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::census::{enumerate_census, CensusOptions, DailyCensus, M4Convention, ALL_CLASSES};
use crate::error::{Error, Result};
use crate::ingest::categories::CategoryTable;
use crate::ingest::{
    attach_categories, extract_transitions, filter_visits, parse_pois, parse_stops, PoiIndex,
    StopFormat, Transition, VisitStop,
};
use crate::lifestyle::{assign_clusters, cluster_series, rank_attributed, ClusterSeries, RuleSet};
use crate::metrics::{
    compute_baseline, max_impact, pct_change, recovery_duration, ChangeSeries, DailySeries,
    DateRange, Recovery,
};
use crate::netprops::{compute_global_props, GlobalProps};
use crate::network::{daily_mobility_stats, MobilityStats, PlaceNetwork};
use crate::synth::splitmix64;

fn default_tz() -> i32 {
    -5
}
fn default_min_dwell() -> i64 {
    120
}
fn default_baseline() -> DateRange {
    DateRange {
        start: NaiveDate::from_ymd_opt(2021, 8, 1).unwrap(),
        end: NaiveDate::from_ymd_opt(2021, 8, 21).unwrap(),
    }
}
fn default_study() -> DateRange {
    DateRange {
        start: NaiveDate::from_ymd_opt(2021, 8, 22).unwrap(),
        end: NaiveDate::from_ymd_opt(2021, 9, 30).unwrap(),
    }
}
fn default_event() -> DateRange {
    DateRange {
        start: NaiveDate::from_ymd_opt(2021, 8, 26).unwrap(),
        end: NaiveDate::from_ymd_opt(2021, 9, 2).unwrap(),
    }
}
fn default_post_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 9, 2).unwrap()
}
fn default_threshold() -> f64 {
    0.05
}
fn default_consecutive() -> u32 {
    2
}
fn default_seed() -> u64 {
    42
}
fn default_top_k() -> usize {
    10
}

/// Full pipeline configuration; JSON-loadable with flag overrides on top.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub stops: PathBuf,
    pub pois: PathBuf,
    #[serde(default)]
    pub category_table: Option<PathBuf>,
    #[serde(default)]
    pub rules: Option<PathBuf>,
    pub out_dir: PathBuf,
    #[serde(default = "default_tz")]
    pub timezone_offset_hours: i32,
    #[serde(default = "default_min_dwell")]
    pub min_dwell_s: i64,
    #[serde(default)]
    pub max_gap_s: Option<i64>,
    #[serde(default = "default_baseline")]
    pub baseline: DateRange,
    #[serde(default = "default_study")]
    pub study: DateRange,
    #[serde(default = "default_event")]
    pub event: DateRange,
    #[serde(default = "default_post_start")]
    pub post_start: NaiveDate,
    #[serde(default = "default_threshold")]
    pub recovery_threshold: f64,
    #[serde(default = "default_consecutive")]
    pub recovery_consecutive: u32,
    #[serde(default)]
    pub m4_convention: M4Convention,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads for day-parallel stages; 0 uses the default pool.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default)]
    pub census_budget: Option<u64>,
    /// Permit baseline windows other than 21 days (multiples of 7).
    #[serde(default)]
    pub allow_any_baseline_weeks: bool,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.baseline.end >= self.study.start {
            return Err(Error::Config(format!(
                "baseline window must end before the study window starts ({} >= {})",
                self.baseline.end, self.study.start
            )));
        }
        for range in [&self.baseline, &self.study, &self.event] {
            if range.start > range.end {
                return Err(Error::Config(format!("reversed window {}..{}", range.start, range.end)));
            }
        }
        if !(self.study.contains(self.event.start) && self.study.contains(self.event.end)) {
            return Err(Error::Config("event window must lie within the study window".into()));
        }
        if !self.study.contains(self.post_start) {
            return Err(Error::Config("post_start must lie within the study window".into()));
        }
        if self.recovery_threshold <= 0.0 {
            return Err(Error::Config("recovery_threshold must be positive".into()));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be positive".into()));
        }
        Ok(())
    }

    /// Full calendar: baseline start through study end.
    pub fn calendar(&self) -> DateRange {
        DateRange {
            start: self.baseline.start,
            end: self.study.end,
        }
    }
}

/// Loaded and preprocessed inputs, ready for the day-parallel stages.
pub struct Prepared {
    pub config: PipelineConfig,
    pub table: CategoryTable,
    pub rules: RuleSet,
    pub poi_index: PoiIndex,
    /// Dwell-filtered stops.
    pub stops: Vec<VisitStop>,
    pub transitions: Vec<Transition>,
    pub parse_warnings: usize,
    pub stops_parsed: usize,
    input_digests: BTreeMap<String, String>,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex_digest(&bytes))
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Loads inputs, applies the visit rule, and derives transitions.
pub fn prepare(config: PipelineConfig) -> Result<Prepared> {
    config.validate()?;

    let table = match &config.category_table {
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            CategoryTable::from_json(file)?
        }
        None => CategoryTable::builtin(),
    };
    let rules = match &config.rules {
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            RuleSet::from_json(file, &table)?
        }
        None => RuleSet::builtin(&table),
    };

    let mut input_digests = BTreeMap::new();
    input_digests.insert("stops".to_string(), sha256_file(&config.stops)?);
    input_digests.insert("pois".to_string(), sha256_file(&config.pois)?);
    input_digests.insert(
        "category_table".to_string(),
        match &config.category_table {
            Some(p) => sha256_file(p)?,
            None => "builtin".to_string(),
        },
    );
    input_digests.insert(
        "rules".to_string(),
        match &config.rules {
            Some(p) => sha256_file(p)?,
            None => "builtin".to_string(),
        },
    );

    let stops_file = fs::File::open(&config.stops).map_err(|e| Error::io(&config.stops, e))?;
    let format = match config.stops.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => StopFormat::Jsonl,
        _ => StopFormat::Csv,
    };
    let stops_report = parse_stops(stops_file, format)?;
    let pois_file = fs::File::open(&config.pois).map_err(|e| Error::io(&config.pois, e))?;
    let pois_report = parse_pois(pois_file)?;

    let parse_warnings = stops_report.warnings.len() + pois_report.warnings.len();
    let stops_parsed = stops_report.records.len();
    let poi_index = attach_categories(&pois_report.records, &table);
    let stops = filter_visits(stops_report.records, config.min_dwell_s);
    let transitions = extract_transitions(&stops, config.timezone_offset_hours, config.max_gap_s);

    Ok(Prepared {
        config,
        table,
        rules,
        poi_index,
        stops,
        transitions,
        parse_warnings,
        stops_parsed,
        input_digests,
    })
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == 0 {
        Ok(f())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Stage { stage: "pipeline", message: e.to_string() })?;
        Ok(pool.install(f))
    }
}

impl Prepared {
    /// Transitions grouped by calendar date, in date order.
    pub fn transitions_by_date(&self) -> BTreeMap<NaiveDate, Vec<&Transition>> {
        let mut by_date: BTreeMap<NaiveDate, Vec<&Transition>> = BTreeMap::new();
        for date in self.config.calendar().iter() {
            by_date.insert(date, Vec::new());
        }
        for t in &self.transitions {
            if let Some(slot) = by_date.get_mut(&t.date) {
                slot.push(t);
            }
        }
        by_date
    }

    /// One network per calendar day (built in parallel, returned in order).
    pub fn build_networks(&self) -> Result<Vec<PlaceNetwork>> {
        let by_date: Vec<(NaiveDate, Vec<Transition>)> = self
            .transitions_by_date()
            .into_iter()
            .map(|(date, ts)| (date, ts.into_iter().cloned().collect()))
            .collect();
        with_pool(self.config.jobs, || {
            by_date
                .par_iter()
                .map(|(date, ts)| PlaceNetwork::build_daily(ts, *date, &self.poi_index).0)
                .collect()
        })
    }

    pub fn censuses(&self, networks: &[PlaceNetwork]) -> Result<Vec<DailyCensus>> {
        let options = CensusOptions {
            convention: self.config.m4_convention,
            budget: self.config.census_budget,
        };
        with_pool(self.config.jobs, || {
            networks
                .par_iter()
                .map(|net| enumerate_census(net, &options))
                .collect::<Result<Vec<_>>>()
        })?
    }

    pub fn props(&self, networks: &[PlaceNetwork]) -> Result<Vec<GlobalProps>> {
        let seed = self.config.seed;
        with_pool(self.config.jobs, || {
            networks
                .par_iter()
                .map(|net| {
                    let day_seed = splitmix64(seed ^ net.date.num_days_from_ce() as u64);
                    compute_global_props(net, day_seed)
                })
                .collect()
        })
    }

    pub fn mobility(&self) -> Vec<MobilityStats> {
        self.config
            .calendar()
            .iter()
            .map(|date| {
                daily_mobility_stats(
                    &self.stops,
                    &self.transitions,
                    date,
                    self.config.timezone_offset_hours,
                )
            })
            .collect()
    }
}

/// A metric's change series plus its impact/recovery summary.
pub struct MetricReport {
    pub change: ChangeSeries,
    pub max_impact: Option<(f64, NaiveDate)>,
    pub recovery: Recovery,
    pub baseline_complete: bool,
}

/// Runs baseline -> change -> impact -> recovery for one series.
pub fn analyze_series(series: &DailySeries, config: &PipelineConfig) -> Result<MetricReport> {
    let table = compute_baseline(series, config.baseline, config.allow_any_baseline_weeks)?;
    let change = pct_change(series, &table, config.study);
    let impact = max_impact(&change, config.event).ok();
    let recovery = recovery_duration(
        &change,
        config.event.start,
        config.post_start,
        config.recovery_threshold,
        config.recovery_consecutive,
    )
    .recovery;
    Ok(MetricReport {
        change,
        max_impact: impact,
        recovery,
        baseline_complete: table.is_complete(),
    })
}

/// Everything the pipeline computed, before export.
pub struct PipelineOutput {
    pub networks: Vec<PlaceNetwork>,
    pub censuses: Vec<DailyCensus>,
    pub props: Vec<GlobalProps>,
    pub mobility: Vec<MobilityStats>,
    pub clusters: Vec<ClusterSeries>,
    pub ranked: crate::lifestyle::RankedAttributed,
    pub assignment: crate::lifestyle::ClusterAssignment,
    /// (group, reports) in export order.
    pub reports: Vec<(String, MetricReport)>,
}

/// Series assembled from per-day results.
pub fn collect_series(
    prepared: &Prepared,
    censuses: &[DailyCensus],
    props: &[GlobalProps],
    mobility: &[MobilityStats],
    clusters: &[ClusterSeries],
) -> Vec<(String, DailySeries)> {
    let mut series: Vec<(String, DailySeries)> = Vec::new();

    let mut devices = DailySeries::new("mobility:devices");
    let mut flows = DailySeries::new("mobility:flows");
    for stat in mobility {
        devices.insert(stat.date, stat.device_count as f64);
        flows.insert(stat.date, stat.flow_count as f64);
    }
    series.push(("mobility".into(), devices));
    series.push(("mobility".into(), flows));

    let prop_fields: [(&str, fn(&GlobalProps) -> f64); 7] = [
        ("nodes", |p| p.node_count as f64),
        ("edges", |p| p.edge_count as f64),
        ("avg_degree", |p| p.avg_degree),
        ("density", |p| p.density),
        ("avg_clustering", |p| p.avg_clustering),
        ("diameter", |p| p.diameter as f64),
        ("modularity", |p| p.modularity),
    ];
    for (name, get) in prop_fields {
        let mut s = DailySeries::new(format!("props:{name}"));
        for p in props {
            s.insert(p.date, get(p));
        }
        series.push(("props".into(), s));
    }

    for class in ALL_CLASSES {
        let mut freq = DailySeries::new(format!("class:{class}:frequency"));
        let mut prox = DailySeries::new(format!("class:{class}:proximity"));
        for census in censuses {
            let tally = census.class_tally(class);
            freq.insert(census.date, tally.count as f64);
            if let Some(p) = tally.mean_proximity() {
                prox.insert(census.date, p);
            }
        }
        series.push(("class".into(), freq));
        series.push(("class".into(), prox));
    }

    for cluster in clusters {
        series.push(("cluster".into(), cluster.frequency.clone()));
        series.push(("cluster".into(), cluster.proximity.clone()));
    }

    let _ = prepared;
    series
}

/// Runs every stage and assembles the in-memory output bundle.
pub fn compute(prepared: &Prepared) -> Result<PipelineOutput> {
    let networks = prepared.build_networks()?;
    let censuses = prepared.censuses(&networks)?;
    let props = prepared.props(&networks)?;
    let mobility = prepared.mobility();
    let ranked = rank_attributed(&censuses, prepared.config.top_k);
    let assignment = assign_clusters(&ranked, &prepared.rules);
    let clusters = cluster_series(&censuses, &assignment);

    let all_series = collect_series(prepared, &censuses, &props, &mobility, &clusters);
    let mut reports = Vec::new();
    for (group, series) in all_series {
        let report = analyze_series(&series, &prepared.config)?;
        reports.push((group, report));
    }

    Ok(PipelineOutput {
        networks,
        censuses,
        props,
        mobility,
        clusters,
        ranked,
        assignment,
        reports,
    })
}

pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub days: usize,
    pub parse_warnings: usize,
}

fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

struct Exporter {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Exporter {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    fn write_csv(&mut self, rel: &str, build: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>) -> Result<()> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        build(&mut writer)?;
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::Stage { stage: "export", message: e.to_string() })?;
        self.write(rel, &bytes)
    }
}

fn rec(w: &mut csv::Writer<Vec<u8>>, fields: &[String]) -> Result<()> {
    w.write_record(fields).map_err(|e| Error::Stage {
        stage: "export",
        message: e.to_string(),
    })
}

/// Writes the full report bundle. Outputs are byte-deterministic for a fixed
/// config and inputs.
pub fn export(prepared: &Prepared, output: &PipelineOutput, summary_manifest: bool) -> Result<RunSummary> {
    let dir = prepared.config.out_dir.clone();
    let mut ex = Exporter::new(&dir)?;
    let marker = dir.join("_INCOMPLETE");
    fs::write(&marker, b"run in progress\n").map_err(|e| Error::io(&marker, e))?;

    export_networks(&mut ex, prepared, &output.networks)?;
    export_census(&mut ex, prepared, &output.censuses)?;
    export_props(&mut ex, &output.props)?;
    export_mobility(&mut ex, &output.mobility)?;
    export_changes(&mut ex, output)?;
    export_recovery(&mut ex, output)?;
    export_ranked(&mut ex, prepared, output)?;
    export_clusters(&mut ex, prepared, output)?;

    if summary_manifest {
        let manifest = build_manifest(prepared, output)?;
        ex.write("manifest.json", manifest.as_bytes())?;
    }

    fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    Ok(RunSummary {
        out_dir: dir,
        files: ex.files,
        days: output.networks.len(),
        parse_warnings: prepared.parse_warnings,
    })
}

fn export_networks(ex: &mut Exporter, prepared: &Prepared, networks: &[PlaceNetwork]) -> Result<()> {
    let table = &prepared.table;
    for net in networks {
        let json = net.to_json(|c| table.name(c).to_string());
        let pretty = serde_json::to_string_pretty(&json)
            .map_err(|e| Error::Stage { stage: "export", message: e.to_string() })?;
        ex.write(&format!("networks/{}.json", net.date), pretty.as_bytes())?;
        let mut buf = Vec::new();
        net.write_edge_csv(&mut buf)?;
        ex.write(&format!("networks/{}.csv", net.date), &buf)?;
    }
    Ok(())
}

fn export_census(ex: &mut Exporter, prepared: &Prepared, censuses: &[DailyCensus]) -> Result<()> {
    ex.write_csv("census.csv", |w| {
        rec(w, &["date", "kind", "key", "count", "mean_proximity_mi"].map(String::from))?;
        for census in censuses {
            let date = census.date.to_string();
            for (class, tally) in census.classes() {
                rec(w, &[
                    date.clone(),
                    "class".into(),
                    class.to_string(),
                    tally.count.to_string(),
                    fmt_opt(tally.mean_proximity()),
                ])?;
            }
            for (key, tally) in census.keys() {
                rec(w, &[
                    date.clone(),
                    "attributed".into(),
                    key.label(&prepared.table),
                    tally.count.to_string(),
                    fmt_opt(tally.mean_proximity()),
                ])?;
            }
        }
        Ok(())
    })
}

fn export_props(ex: &mut Exporter, props: &[GlobalProps]) -> Result<()> {
    ex.write_csv("props.csv", |w| {
        rec(w, &[
            "date", "nodes", "edges", "avg_degree", "density", "avg_clustering", "diameter",
            "modularity",
        ]
        .map(String::from))?;
        for p in props {
            rec(w, &[
                p.date.to_string(),
                p.node_count.to_string(),
                p.edge_count.to_string(),
                fmt_f64(p.avg_degree),
                fmt_f64(p.density),
                fmt_f64(p.avg_clustering),
                p.diameter.to_string(),
                fmt_f64(p.modularity),
            ])?;
        }
        Ok(())
    })
}

fn export_mobility(ex: &mut Exporter, mobility: &[MobilityStats]) -> Result<()> {
    ex.write_csv("mobility.csv", |w| {
        rec(w, &["date", "devices", "flows"].map(String::from))?;
        for m in mobility {
            rec(w, &[
                m.date.to_string(),
                m.device_count.to_string(),
                m.flow_count.to_string(),
            ])?;
        }
        Ok(())
    })
}

fn export_changes(ex: &mut Exporter, output: &PipelineOutput) -> Result<()> {
    ex.write_csv("changes.csv", |w| {
        rec(w, &["metric", "date", "value", "baseline", "change", "defined"].map(String::from))?;
        for (_, report) in &output.reports {
            for (date, point) in report.change.iter() {
                rec(w, &[
                    report.change.name.clone(),
                    date.to_string(),
                    fmt_opt(point.value),
                    fmt_opt(point.baseline),
                    fmt_opt(point.change),
                    point.change.is_some().to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

fn recovery_entry(report: &MetricReport) -> serde_json::Value {
    let (days, cutoff) = match report.recovery {
        Recovery::Recovered { duration_days, cutoff } => {
            (json!(duration_days), json!(cutoff.to_string()))
        }
        Recovery::NotRecovered => (json!("not_recovered"), serde_json::Value::Null),
    };
    json!({
        "metric": report.change.name,
        "max_impact": report.max_impact.map(|(c, _)| c),
        "impact_date": report.max_impact.map(|(_, d)| d.to_string()),
        "recovery_days": days,
        "cutoff_date": cutoff,
        "baseline_complete": report.baseline_complete,
    })
}

fn export_recovery(ex: &mut Exporter, output: &PipelineOutput) -> Result<()> {
    ex.write_csv("recovery.csv", |w| {
        rec(w, &["metric", "max_impact", "impact_date", "recovery_days", "cutoff_date"].map(String::from))?;
        for (_, report) in &output.reports {
            let (days, cutoff) = match report.recovery {
                Recovery::Recovered { duration_days, cutoff } => {
                    (duration_days.to_string(), cutoff.to_string())
                }
                Recovery::NotRecovered => ("not_recovered".to_string(), String::new()),
            };
            rec(w, &[
                report.change.name.clone(),
                fmt_opt(report.max_impact.map(|(c, _)| c)),
                report.max_impact.map(|(_, d)| d.to_string()).unwrap_or_default(),
                days,
                cutoff,
            ])?;
        }
        Ok(())
    })?;

    let mut groups: BTreeMap<&str, Vec<serde_json::Value>> = BTreeMap::new();
    for (group, report) in &output.reports {
        groups.entry(group).or_default().push(recovery_entry(report));
    }
    let doc = json!({
        "clusters": groups.get("cluster").cloned().unwrap_or_default(),
        "classes": groups.get("class").cloned().unwrap_or_default(),
        "mobility": groups.get("mobility").cloned().unwrap_or_default(),
        "props": groups.get("props").cloned().unwrap_or_default(),
    });
    let pretty = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::Stage { stage: "export", message: e.to_string() })?;
    ex.write("recovery.json", pretty.as_bytes())
}

fn export_ranked(ex: &mut Exporter, prepared: &Prepared, output: &PipelineOutput) -> Result<()> {
    ex.write_csv("ranked_motifs.csv", |w| {
        rec(w, &["class", "rank", "key", "total_count", "coverage_share", "truncated"].map(String::from))?;
        for (class, ranked) in &output.ranked.per_class {
            for (rank, (key, count)) in ranked.keys.iter().enumerate() {
                rec(w, &[
                    class.to_string(),
                    (rank + 1).to_string(),
                    key.label(&prepared.table),
                    count.to_string(),
                    fmt_f64(ranked.coverage_share),
                    ranked.truncated.to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

fn export_clusters(ex: &mut Exporter, prepared: &Prepared, output: &PipelineOutput) -> Result<()> {
    let mut members: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for name in &output.assignment.cluster_names {
        members.insert(name.clone(), Vec::new());
    }
    members.insert(crate::lifestyle::UNASSIGNED.to_string(), Vec::new());
    for (key, cluster) in &output.assignment.by_key {
        let name = cluster.clone().unwrap_or_else(|| crate::lifestyle::UNASSIGNED.to_string());
        members.get_mut(&name).unwrap().push(key.label(&prepared.table));
    }
    let shares: BTreeMap<&str, serde_json::Value> = output
        .clusters
        .iter()
        .map(|c| {
            (
                c.cluster.as_str(),
                json!({
                    "total_count": c.total_count,
                    "share_of_ranked": c.share_of_ranked,
                }),
            )
        })
        .collect();
    let doc = json!({ "members": members, "summary": shares });
    let pretty = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::Stage { stage: "export", message: e.to_string() })?;
    ex.write("clusters.json", pretty.as_bytes())
}

fn build_manifest(prepared: &Prepared, output: &PipelineOutput) -> Result<String> {
    let config_json = serde_json::to_string(&prepared.config)
        .map_err(|e| Error::Stage { stage: "export", message: e.to_string() })?;
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config_digest": hex_digest(config_json.as_bytes()),
        "inputs": prepared.input_digests,
        "parameters": serde_json::from_str::<serde_json::Value>(&config_json).unwrap(),
        "counts": {
            "stops_parsed": prepared.stops_parsed,
            "stops_kept": prepared.stops.len(),
            "transitions": prepared.transitions.len(),
            "days": output.networks.len(),
            "pois": prepared.poi_index.len(),
            "uncategorized_pois": prepared.poi_index.uncategorized_count(),
            "parse_warnings": prepared.parse_warnings,
            "subgraphs_enumerated": output.censuses.iter().map(|c| c.subgraphs_enumerated).sum::<u64>(),
        },
    });
    serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Stage { stage: "export", message: e.to_string() })
}

/// The all-in-one `run` entry point: compute everything, write everything.
pub fn run_pipeline(config: PipelineConfig) -> Result<RunSummary> {
    let prepared = prepare(config)?;
    let output = compute(&prepared)?;
    export(&prepared, &output, true)
}

/// Writes the ingest-stage artifacts only (mobility and transitions).
pub fn run_ingest_stage(config: PipelineConfig) -> Result<RunSummary> {
    let prepared = prepare(config)?;
    let mobility = prepared.mobility();
    let dir = prepared.config.out_dir.clone();
    let mut ex = Exporter::new(&dir)?;
    export_mobility(&mut ex, &mobility)?;
    ex.write_csv("transitions.csv", |w| {
        rec(w, &["device_id", "origin", "dest", "date", "order_index"].map(String::from))?;
        for t in &prepared.transitions {
            rec(w, &[
                t.device_id.clone(),
                t.origin_poi.clone(),
                t.dest_poi.clone(),
                t.date.to_string(),
                t.order_index.to_string(),
            ])?;
        }
        Ok(())
    })?;
    Ok(RunSummary {
        out_dir: dir,
        files: ex.files,
        days: prepared.config.calendar().days() as usize,
        parse_warnings: prepared.parse_warnings,
    })
}

/// Writes networks plus the census CSV.
pub fn run_census_stage(config: PipelineConfig) -> Result<RunSummary> {
    let prepared = prepare(config)?;
    let networks = prepared.build_networks()?;
    let censuses = prepared.censuses(&networks)?;
    let dir = prepared.config.out_dir.clone();
    let mut ex = Exporter::new(&dir)?;
    export_networks(&mut ex, &prepared, &networks)?;
    export_census(&mut ex, &prepared, &censuses)?;
    Ok(RunSummary {
        out_dir: dir,
        files: ex.files,
        days: networks.len(),
        parse_warnings: prepared.parse_warnings,
    })
}

/// Writes the global-properties CSV.
pub fn run_props_stage(config: PipelineConfig) -> Result<RunSummary> {
    let prepared = prepare(config)?;
    let networks = prepared.build_networks()?;
    let props = prepared.props(&networks)?;
    let dir = prepared.config.out_dir.clone();
    let mut ex = Exporter::new(&dir)?;
    export_props(&mut ex, &props)?;
    Ok(RunSummary {
        out_dir: dir,
        files: ex.files,
        days: networks.len(),
        parse_warnings: prepared.parse_warnings,
    })
}

/// Writes change and recovery tables for every metric.
pub fn run_metrics_stage(config: PipelineConfig) -> Result<RunSummary> {
    let prepared = prepare(config)?;
    let output = compute(&prepared)?;
    let dir = prepared.config.out_dir.clone();
    let mut ex = Exporter::new(&dir)?;
    export_changes(&mut ex, &output)?;
    export_recovery(&mut ex, &output)?;
    Ok(RunSummary {
        out_dir: dir,
        files: ex.files,
        days: output.networks.len(),
        parse_warnings: prepared.parse_warnings,
    })
}

/// Writes the ranking, assignment, and cluster summaries.
pub fn run_clusters_stage(config: PipelineConfig) -> Result<RunSummary> {
    let prepared = prepare(config)?;
    let output = compute(&prepared)?;
    let dir = prepared.config.out_dir.clone();
    let mut ex = Exporter::new(&dir)?;
    export_ranked(&mut ex, &prepared, &output)?;
    export_clusters(&mut ex, &prepared, &output)?;
    Ok(RunSummary {
        out_dir: dir,
        files: ex.files,
        days: output.networks.len(),
        parse_warnings: prepared.parse_warnings,
    })
}
