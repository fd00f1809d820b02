//! Synthetic stop/POI scenario generator with a configurable disruption
//! window and analytically known ground truth.
//!
//! The model is deliberately simple so expected values stay closed-form:
//! device-days are independent, per-category visit counts are Poisson with
//! rate `visits_per_device_day * day_multiplier * mix * suppression`, and
//! devices draw POIs from a fixed home neighborhood (an inflated-radius
//! neighborhood while the disruption window is active).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::haversine_miles;
use crate::ingest::categories::CategoryTable;
use crate::ingest::{PoiRecord, VisitStop};
use crate::metrics::DateRange;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lng: f64,
    pub max_lng: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Disruption {
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Per-category rate factor in [0, 1] while the window is active;
    /// categories not listed keep factor 1.
    pub suppression: BTreeMap<String, f64>,
    /// POI choice radius multiplier (>= 1) while the window is active.
    pub distance_inflation: f64,
    /// Days after the window over which rates ramp linearly back to 1.
    pub recovery_ramp_days: u32,
}

/// A device population segment with its own category mix. Archetypes with
/// disjoint category blocks produce networks whose motif keys never mix the
/// blocks, which keeps cluster responses analytically separable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Archetype {
    pub name: String,
    /// Fraction of devices; weights must sum to 1.
    pub weight: f64,
    pub category_mix: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_devices: u32,
    pub n_pois: u32,
    /// Probability of each category; must sum to 1. Ignored for visit
    /// sampling when `archetypes` is non-empty.
    pub category_mix: BTreeMap<String, f64>,
    /// Optional device segments, each with its own mix.
    #[serde(default)]
    pub archetypes: Vec<Archetype>,
    pub bbox: BoundingBox,
    pub calendar: DateRange,
    /// Mean visits per device per day before multipliers.
    pub visits_per_device_day: f64,
    pub weekday_multiplier: f64,
    pub weekend_multiplier: f64,
    /// POIs of each category in a device's home neighborhood (the nearest
    /// `pool_size` POIs per category).
    pub pool_size: u32,
    pub timezone_offset_hours: i32,
    pub disruption: Option<Disruption>,
}

/// Per-date expected activity and the injected disruption milestones.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Expected visit-rate multiplier vs. baseline (mix-weighted), per date.
    pub daily_activity: BTreeMap<NaiveDate, f64>,
    /// Rate multiplier per suppressed category per date.
    pub category_multiplier: BTreeMap<String, BTreeMap<NaiveDate, f64>>,
    /// Closed-form expected fractional change of transition volume touching
    /// each suppressed category, per date.
    pub expected_touch_change: BTreeMap<String, BTreeMap<NaiveDate, f64>>,
    /// Expected maximum (most negative) touch change per suppressed category.
    pub expected_max_impact: BTreeMap<String, f64>,
    pub max_suppression_date: Option<NaiveDate>,
    /// First date with every category back at multiplier 1.
    pub recovery_date: Option<NaiveDate>,
}

#[derive(Debug)]
pub struct Scenario {
    pub stops: Vec<VisitStop>,
    pub pois: Vec<PoiRecord>,
    pub ground_truth: GroundTruth,
}

pub fn default_category_mix() -> BTreeMap<String, f64> {
    [
        ("Health Care", 0.20),
        ("Restaurants", 0.12),
        ("Grocery Stores", 0.10),
        ("Clothing Stores", 0.09),
        ("Amusement and Recreation", 0.08),
        ("Gasoline Stations", 0.07),
        ("Financial Investment Service", 0.05),
        ("Automotive Service", 0.05),
        ("Public Administration", 0.04),
        ("Household and Real Estate", 0.04),
        ("Drinking Places", 0.04),
        ("Educational Service", 0.03),
        ("Building Construction Service", 0.02),
        ("Insurance Service", 0.02),
        ("Shoe Stores", 0.01),
        ("Furniture Stores", 0.01),
        ("Museums and Historical Sites", 0.01),
        ("Traveler Accommodation", 0.01),
        ("Telecommunications Carriers", 0.005),
        ("Postal Services", 0.005),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_devices: 2000,
            n_pois: 400,
            category_mix: default_category_mix(),
            archetypes: Vec::new(),
            bbox: BoundingBox {
                min_lat: 29.5,
                max_lat: 30.5,
                min_lng: -91.5,
                max_lng: -89.5,
            },
            calendar: DateRange {
                start: NaiveDate::from_ymd_opt(2021, 8, 1).unwrap(),
                end: NaiveDate::from_ymd_opt(2021, 9, 30).unwrap(),
            },
            visits_per_device_day: 3.5,
            weekday_multiplier: 1.0,
            weekend_multiplier: 0.85,
            pool_size: 15,
            timezone_offset_hours: -5,
            disruption: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self, table: &CategoryTable) -> Result<()> {
        let fail = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if self.n_devices == 0 {
            return fail("n_devices", "must be positive".into());
        }
        if self.n_pois == 0 {
            return fail("n_pois", "must be positive".into());
        }
        if self.pool_size < 2 {
            return fail("pool_size", "must be at least 2".into());
        }
        if !(self.visits_per_device_day > 0.0) {
            return fail("visits_per_device_day", "must be positive".into());
        }
        if !(self.weekday_multiplier > 0.0) || !(self.weekend_multiplier > 0.0) {
            return fail("weekday_multiplier/weekend_multiplier", "must be positive".into());
        }
        if self.bbox.min_lat >= self.bbox.max_lat || self.bbox.min_lng >= self.bbox.max_lng {
            return fail("bbox", "min must be below max".into());
        }
        if !(-90.0..=90.0).contains(&self.bbox.min_lat) || !(-90.0..=90.0).contains(&self.bbox.max_lat) {
            return fail("bbox", "latitude out of range".into());
        }
        let check_mix = |field: &str, mix: &BTreeMap<String, f64>| -> Result<()> {
            let mix_sum: f64 = mix.values().sum();
            if (mix_sum - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("{field}: probabilities sum to {mix_sum}, expected 1")));
            }
            for (name, p) in mix {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::Config(format!("{field}: '{name}' has probability {p}")));
                }
                if table.id_by_name(name).is_none() {
                    return Err(Error::Config(format!("{field}: unknown category '{name}'")));
                }
            }
            Ok(())
        };
        check_mix("category_mix", &self.category_mix)?;
        if !self.archetypes.is_empty() {
            let weight_sum: f64 = self.archetypes.iter().map(|a| a.weight).sum();
            if (weight_sum - 1.0).abs() > 1e-9 {
                return fail("archetypes", format!("weights sum to {weight_sum}, expected 1"));
            }
            for a in &self.archetypes {
                if a.weight < 0.0 {
                    return fail("archetypes", format!("'{}' has negative weight", a.name));
                }
                check_mix(&format!("archetypes['{}'].category_mix", a.name), &a.category_mix)?;
            }
        }
        if let Some(d) = &self.disruption {
            if d.start > d.end {
                return fail("disruption", format!("window {}..{} reversed", d.start, d.end));
            }
            if !self.calendar.contains(d.start) || !self.calendar.contains(d.end) {
                return fail("disruption", "window outside the calendar".into());
            }
            if d.distance_inflation < 1.0 {
                return fail("disruption.distance_inflation", "must be >= 1".into());
            }
            for (name, s) in &d.suppression {
                if !(0.0..=1.0).contains(s) {
                    return fail("disruption.suppression", format!("'{name}' factor {s} outside [0,1]"));
                }
                if table.id_by_name(name).is_none() {
                    return fail("disruption.suppression", format!("unknown category '{name}'"));
                }
            }
        }
        Ok(())
    }

    /// Rate multiplier of one category on one date (1 outside the disruption,
    /// the suppression factor inside it, linear ramp back afterwards).
    pub fn category_multiplier(&self, date: NaiveDate, category: &str) -> f64 {
        let Some(d) = &self.disruption else {
            return 1.0;
        };
        let s = d.suppression.get(category).copied().unwrap_or(1.0);
        if date < d.start || s == 1.0 {
            return 1.0;
        }
        if date <= d.end {
            return s;
        }
        let after = (date - d.end).num_days();
        if d.recovery_ramp_days == 0 || after >= d.recovery_ramp_days as i64 {
            1.0
        } else {
            s + (1.0 - s) * after as f64 / d.recovery_ramp_days as f64
        }
    }

    pub fn day_multiplier(&self, date: NaiveDate) -> f64 {
        match date.weekday() {
            Weekday::Sat | Weekday::Sun => self.weekend_multiplier,
            _ => self.weekday_multiplier,
        }
    }

    /// Archetype-weighted overall category mix (used for POI generation and
    /// aggregate expectations).
    pub fn effective_mix(&self) -> BTreeMap<String, f64> {
        if self.archetypes.is_empty() {
            return self.category_mix.clone();
        }
        let mut mix: BTreeMap<String, f64> = BTreeMap::new();
        for a in &self.archetypes {
            for (name, p) in &a.category_mix {
                *mix.entry(name.clone()).or_insert(0.0) += a.weight * p;
            }
        }
        mix
    }

    fn archetype_mixes(&self) -> Vec<(f64, &BTreeMap<String, f64>)> {
        if self.archetypes.is_empty() {
            vec![(1.0, &self.category_mix)]
        } else {
            self.archetypes.iter().map(|a| (a.weight, &a.category_mix)).collect()
        }
    }

    /// Mix-weighted expected activity multiplier on a date.
    pub fn expected_activity(&self, date: NaiveDate) -> f64 {
        self.effective_mix()
            .iter()
            .map(|(name, p)| p * self.category_multiplier(date, name))
            .sum()
    }

    fn active_window(&self, date: NaiveDate) -> bool {
        self.disruption
            .as_ref()
            .is_some_and(|d| d.start <= date && date <= d.end)
    }

    /// Closed-form expected fractional change (vs. an undisrupted day with
    /// the same weekday factor) of the transition volume touching `category`.
    /// Transitions pair consecutive visits, so per archetype the volume
    /// scales with the probability that a visit pair touches the category
    /// times the expected number of consecutive pairs; archetypes aggregate
    /// by weight.
    pub fn expected_touch_change(&self, date: NaiveDate, category: &str) -> f64 {
        let lambda = self.visits_per_device_day * self.day_multiplier(date);
        let pairs = |mu: f64| mu - 1.0 + (-mu).exp(); // E[max(V-1,0)], V ~ Poisson(mu)
        let touch = |pi: f64| 1.0 - (1.0 - pi) * (1.0 - pi);
        let mut now = 0.0;
        let mut base = 0.0;
        for (weight, mix) in self.archetype_mixes() {
            let p_cat = mix.get(category).copied().unwrap_or(0.0);
            if p_cat == 0.0 {
                continue;
            }
            let sigma: f64 = mix
                .iter()
                .map(|(name, p)| p * self.category_multiplier(date, name))
                .sum();
            let pi_now = p_cat * self.category_multiplier(date, category) / sigma;
            now += weight * touch(pi_now) * pairs(lambda * sigma);
            base += weight * touch(p_cat) * pairs(lambda);
        }
        if base == 0.0 {
            return 0.0;
        }
        now / base - 1.0
    }

    /// First date after the window where every multiplier is back to 1.
    pub fn injected_recovery_date(&self) -> Option<NaiveDate> {
        let d = self.disruption.as_ref()?;
        if d.suppression.values().all(|&s| s == 1.0) {
            return None;
        }
        let suppressed: Vec<&String> = d.suppression.keys().collect();
        let mut date = d.end + Days::new(1);
        let limit = self.calendar.end + Days::new(d.recovery_ramp_days as u64 + 2);
        while date <= limit {
            if suppressed.iter().all(|c| self.category_multiplier(date, c) == 1.0) {
                return Some(date);
            }
            date = date + Days::new(1);
        }
        None
    }

    /// Earliest date of minimal expected activity.
    pub fn max_suppression_date(&self) -> Option<NaiveDate> {
        let d = self.disruption.as_ref()?;
        if d.suppression.values().all(|&s| s == 1.0) {
            return None;
        }
        Some(d.start)
    }

    pub fn ground_truth(&self) -> GroundTruth {
        let mut daily_activity = BTreeMap::new();
        for date in self.calendar.iter() {
            daily_activity.insert(date, self.expected_activity(date));
        }
        let suppressed: Vec<&String> = self
            .disruption
            .iter()
            .flat_map(|d| d.suppression.iter())
            .filter(|(_, &s)| s != 1.0)
            .map(|(name, _)| name)
            .collect();
        let mut category_multiplier = BTreeMap::new();
        let mut expected_touch_change = BTreeMap::new();
        let mut expected_max_impact = BTreeMap::new();
        for name in suppressed {
            let mut mults = BTreeMap::new();
            let mut touch = BTreeMap::new();
            let mut worst = 0.0f64;
            for date in self.calendar.iter() {
                mults.insert(date, self.category_multiplier(date, name));
                let change = self.expected_touch_change(date, name);
                if change.abs() > worst.abs() {
                    worst = change;
                }
                touch.insert(date, change);
            }
            category_multiplier.insert(name.clone(), mults);
            expected_touch_change.insert(name.clone(), touch);
            expected_max_impact.insert(name.clone(), worst);
        }
        GroundTruth {
            daily_activity,
            category_multiplier,
            expected_touch_change,
            expected_max_impact,
            max_suppression_date: self.max_suppression_date(),
            recovery_date: self.injected_recovery_date(),
        }
    }
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

struct PoiWorld {
    pois: Vec<PoiRecord>,
    category_of: Vec<u32>,       // index into mix_names
    by_category: Vec<Vec<u32>>,  // POIs per mix category
    mix_names: Vec<String>,
}

fn generate_pois(config: &ScenarioConfig, table: &CategoryTable) -> PoiWorld {
    let effective = config.effective_mix();
    let mix_names: Vec<String> = effective.keys().cloned().collect();
    let cumulative: Vec<f64> = mix_names
        .iter()
        .scan(0.0, |acc, name| {
            *acc += effective[name];
            Some(*acc)
        })
        .collect();
    let mut rng = ChaCha12Rng::seed_from_u64(splitmix64(config.seed ^ 0x9d1c_e5e5));
    let mut pois = Vec::with_capacity(config.n_pois as usize);
    let mut category_of = Vec::with_capacity(config.n_pois as usize);
    let mut by_category = vec![Vec::new(); mix_names.len()];
    for i in 0..config.n_pois {
        let lat = rng.random_range(config.bbox.min_lat..config.bbox.max_lat);
        let lng = rng.random_range(config.bbox.min_lng..config.bbox.max_lng);
        let roll: f64 = rng.random_range(0.0..1.0);
        // the first POIs cover each category once so every mix entry has a
        // target; visit rates come from the mix, not from POI counts
        let cat_idx = if (i as usize) < mix_names.len() {
            i as usize
        } else {
            cumulative.partition_point(|&c| c <= roll).min(mix_names.len() - 1)
        };
        let cat_id = table.id_by_name(&mix_names[cat_idx]).expect("validated");
        pois.push(PoiRecord {
            poi_id: format!("p{i:05}"),
            naics4: table.representative_naics(cat_id).to_string(),
            lat,
            lng,
        });
        category_of.push(cat_idx as u32);
        by_category[cat_idx].push(i);
    }
    PoiWorld {
        pois,
        category_of,
        by_category,
        mix_names,
    }
}

struct DevicePools {
    /// Per category: the `pool_size` nearest POIs of that category.
    base: Vec<Vec<u32>>,
    /// Per category: the inflated-radius neighborhood used while the
    /// disruption window is active.
    inflated: Vec<Vec<u32>>,
}

fn build_pools(config: &ScenarioConfig, world: &PoiWorld, rng: &mut ChaCha12Rng) -> DevicePools {
    let home_lat = rng.random_range(config.bbox.min_lat..config.bbox.max_lat);
    let home_lng = rng.random_range(config.bbox.min_lng..config.bbox.max_lng);
    let inflation = config
        .disruption
        .as_ref()
        .map(|d| d.distance_inflation)
        .unwrap_or(1.0);
    let ncat = world.mix_names.len();
    let depth = config.pool_size as usize;
    let mut base = vec![Vec::new(); ncat];
    let mut inflated = vec![Vec::new(); ncat];
    for cat in 0..ncat {
        let mut order: Vec<(f64, u32)> = world.by_category[cat]
            .iter()
            .map(|&i| {
                let p = &world.pois[i as usize];
                let d = haversine_miles((home_lat, home_lng), (p.lat, p.lng)).unwrap_or(f64::MAX);
                (d, i)
            })
            .collect();
        order.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let base_len = depth.min(order.len());
        if base_len == 0 {
            continue;
        }
        let radius = order[base_len - 1].0;
        let inflated_len = order
            .partition_point(|&(d, _)| d <= radius * inflation)
            .max(base_len);
        base[cat].extend(order.iter().take(base_len).map(|&(_, i)| i));
        inflated[cat].extend(order.iter().take(inflated_len).map(|&(_, i)| i));
    }
    DevicePools { base, inflated }
}

const DAY_START_S: i64 = 8 * 3600;
const DAY_SPAN_S: i64 = 14 * 3600;

/// Deterministic proportional split of device indices over archetypes.
fn archetype_mix_for<'a>(config: &'a ScenarioConfig, device_idx: u32) -> &'a BTreeMap<String, f64> {
    if config.archetypes.is_empty() {
        return &config.category_mix;
    }
    let n = config.n_devices as f64;
    let mut cumulative = 0.0;
    for a in &config.archetypes {
        cumulative += a.weight;
        if (device_idx as f64) < (cumulative * n).round() {
            return &a.category_mix;
        }
    }
    &config.archetypes.last().unwrap().category_mix
}

fn device_stops(config: &ScenarioConfig, world: &PoiWorld, device_idx: u32) -> Vec<VisitStop> {
    let mut rng = ChaCha12Rng::seed_from_u64(splitmix64(
        config.seed ^ (0x5eed_0000_0000 + device_idx as u64),
    ));
    let pools = build_pools(config, world, &mut rng);
    let device_id = format!("d{device_idx:06}");
    let mix = archetype_mix_for(config, device_idx);
    let dwell_tail = Exp::new(1.0 / 600.0).unwrap();
    let mut stops = Vec::new();
    for date in config.calendar.iter() {
        let w = config.day_multiplier(date);
        let active = config.active_window(date);
        let mut visits: Vec<(i64, u32)> = Vec::new();
        for (cat_idx, name) in world.mix_names.iter().enumerate() {
            let rate = config.visits_per_device_day
                * w
                * mix.get(name).copied().unwrap_or(0.0)
                * config.category_multiplier(date, name);
            if rate <= 0.0 {
                continue;
            }
            let count = Poisson::new(rate).map(|p| p.sample(&mut rng) as u64).unwrap_or(0);
            for _ in 0..count {
                let pool = if active { &pools.inflated[cat_idx] } else { &pools.base[cat_idx] };
                let choices = if pool.is_empty() { &world.by_category[cat_idx] } else { pool };
                if choices.is_empty() {
                    continue;
                }
                let poi = choices[rng.random_range(0..choices.len())];
                let second = DAY_START_S + rng.random_range(0..DAY_SPAN_S);
                visits.push((second, poi));
            }
        }
        visits.sort_unstable();
        let midnight_utc = date
            .and_hms_opt(0, 0, 0)
            .unwrap()
            .and_utc()
            .timestamp()
            - config.timezone_offset_hours as i64 * 3600;
        for (second, poi) in visits {
            let dwell = 240 + dwell_tail.sample(&mut rng) as i64;
            stops.push(VisitStop {
                device_id: device_id.clone(),
                poi_id: world.pois[poi as usize].poi_id.clone(),
                arrival: midnight_utc + second,
                dwell_s: dwell,
            });
        }
    }
    stops
}

/// Generates the scenario. Deterministic for a fixed seed: per-device RNG
/// streams are derived from the seed and the device index, so the output does
/// not depend on thread scheduling.
pub fn generate_scenario(config: &ScenarioConfig, table: &CategoryTable) -> Result<Scenario> {
    config.validate(table)?;
    let world = generate_pois(config, table);
    let mut stops: Vec<VisitStop> = (0..config.n_devices)
        .into_par_iter()
        .map(|device_idx| device_stops(config, &world, device_idx))
        .flatten()
        .collect();
    // par_iter flatten preserves order, but make the contract explicit
    stops.sort_by(|a, b| (a.device_id.as_str(), a.arrival, a.poi_id.as_str())
        .cmp(&(b.device_id.as_str(), b.arrival, b.poi_id.as_str())));
    Ok(Scenario {
        stops,
        pois: world.pois,
        ground_truth: config.ground_truth(),
    })
}

/// Writes `stops.csv`, `pois.csv`, and `ground_truth.json` into `dir`.
pub fn write_scenario(dir: &Path, scenario: &Scenario) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stops_path = dir.join("stops.csv");
    let mut stops_file = fs::File::create(&stops_path).map_err(|e| Error::io(&stops_path, e))?;
    crate::ingest::write_stops_csv(&mut stops_file, &scenario.stops)?;
    let pois_path = dir.join("pois.csv");
    let mut pois_file = fs::File::create(&pois_path).map_err(|e| Error::io(&pois_path, e))?;
    crate::ingest::write_pois_csv(&mut pois_file, &scenario.pois)?;
    let gt_path = dir.join("ground_truth.json");
    let json = serde_json::to_string_pretty(&scenario.ground_truth)
        .map_err(|e| Error::Stage { stage: "synth", message: e.to_string() })?;
    fs::write(&gt_path, json).map_err(|e| Error::io(&gt_path, e))?;
    Ok(())
}
