//! Stop-record and POI ingestion: visit filtering, category attachment, and
//! per-device same-day transition extraction.

pub mod categories;

use std::collections::HashMap;
use std::io::{Read, Write};

use chrono::{DateTime, Duration, NaiveDate};
use serde::Deserialize;

use crate::error::{Error, Result};
use categories::{CategoryId, CategoryTable};

/// One device's dwell at a POI. `arrival` is UTC epoch seconds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisitStop {
    pub device_id: String,
    pub poi_id: String,
    pub arrival: i64,
    pub dwell_s: i64,
}

/// A POI with its 4-digit NAICS code and location.
#[derive(Debug, Clone, PartialEq)]
pub struct PoiRecord {
    pub poi_id: String,
    pub naics4: String,
    pub lat: f64,
    pub lng: f64,
}

/// An ordered same-day move between two distinct POIs by one device.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub device_id: String,
    pub origin_poi: String,
    pub dest_poi: String,
    pub date: NaiveDate,
    pub order_index: u32,
}

/// A skipped input row and why.
#[derive(Debug, Clone)]
pub struct RowWarning {
    pub line: u64,
    pub reason: String,
}

/// Parse output: valid records in input order plus row-level warnings.
#[derive(Debug)]
pub struct ParseReport<T> {
    pub records: Vec<T>,
    pub warnings: Vec<RowWarning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopFormat {
    Csv,
    Jsonl,
}

/// Accepts RFC 3339 timestamps or integer epoch seconds.
fn parse_arrival(raw: &str) -> Option<i64> {
    let raw = raw.trim();
    if let Ok(epoch) = raw.parse::<i64>() {
        return Some(epoch);
    }
    DateTime::parse_from_rfc3339(raw).ok().map(|t| t.timestamp())
}

fn validate_stop(stop: VisitStop) -> std::result::Result<VisitStop, String> {
    if stop.device_id.is_empty() {
        return Err("empty device_id".into());
    }
    if stop.poi_id.is_empty() {
        return Err("empty poi_id".into());
    }
    if stop.dwell_s < 0 {
        return Err(format!("negative dwell {}", stop.dwell_s));
    }
    Ok(stop)
}

/// Parses stop records. CSV needs a header with `device_id,poi_id,arrival,dwell_s`
/// (any column order); JSONL needs one object per line with the same field names.
/// Malformed rows are skipped and reported with their line number.
pub fn parse_stops(reader: impl Read, format: StopFormat) -> Result<ParseReport<VisitStop>> {
    match format {
        StopFormat::Csv => parse_stops_csv(reader),
        StopFormat::Jsonl => parse_stops_jsonl(reader),
    }
}

fn parse_stops_csv(reader: impl Read) -> Result<ParseReport<VisitStop>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Stream(format!("stops CSV header: {e}")))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(c_dev), Some(c_poi), Some(c_arr), Some(c_dwell)) = (
        col("device_id"),
        col("poi_id"),
        col("arrival"),
        col("dwell_s"),
    ) else {
        return Err(Error::Stream(
            "stops CSV header must include device_id, poi_id, arrival, dwell_s".into(),
        ));
    };

    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for result in rdr.records() {
        let row = match result {
            Ok(row) => row,
            Err(e) => {
                return Err(Error::Stream(format!("stops CSV: {e}")));
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let mut warn = |reason: String| warnings.push(RowWarning { line, reason });
        let fields = (row.get(c_dev), row.get(c_poi), row.get(c_arr), row.get(c_dwell));
        let (Some(dev), Some(poi), Some(arr), Some(dwell)) = fields else {
            warn("missing field".into());
            continue;
        };
        let Some(arrival) = parse_arrival(arr) else {
            warn(format!("bad arrival '{arr}'"));
            continue;
        };
        let Ok(dwell_s) = dwell.trim().parse::<i64>() else {
            warn(format!("bad dwell '{dwell}'"));
            continue;
        };
        match validate_stop(VisitStop {
            device_id: dev.trim().to_string(),
            poi_id: poi.trim().to_string(),
            arrival,
            dwell_s,
        }) {
            Ok(stop) => records.push(stop),
            Err(reason) => warn(reason),
        }
    }
    Ok(ParseReport { records, warnings })
}

#[derive(Deserialize)]
struct StopLine {
    device_id: String,
    poi_id: String,
    arrival: serde_json::Value,
    dwell_s: i64,
}

fn parse_stops_jsonl(reader: impl Read) -> Result<ParseReport<VisitStop>> {
    let mut text = String::new();
    let mut reader = reader;
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::Stream(format!("stops JSONL: {e}")))?;
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut warn = |reason: String| warnings.push(RowWarning { line: line_no, reason });
        let parsed: std::result::Result<StopLine, _> = serde_json::from_str(line);
        let stop = match parsed {
            Ok(s) => s,
            Err(e) => {
                warn(format!("bad JSON: {e}"));
                continue;
            }
        };
        let arrival = match &stop.arrival {
            serde_json::Value::Number(n) => n.as_i64(),
            serde_json::Value::String(s) => parse_arrival(s),
            _ => None,
        };
        let Some(arrival) = arrival else {
            warn(format!("bad arrival {}", stop.arrival));
            continue;
        };
        match validate_stop(VisitStop {
            device_id: stop.device_id,
            poi_id: stop.poi_id,
            arrival,
            dwell_s: stop.dwell_s,
        }) {
            Ok(s) => records.push(s),
            Err(reason) => warn(reason),
        }
    }
    Ok(ParseReport { records, warnings })
}

/// Writes stops back out in the canonical CSV format (epoch-second arrivals).
pub fn write_stops_csv(writer: impl Write, stops: &[VisitStop]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["device_id", "poi_id", "arrival", "dwell_s"])
        .map_err(|e| Error::Stream(e.to_string()))?;
    for s in stops {
        w.write_record([
            s.device_id.as_str(),
            s.poi_id.as_str(),
            &s.arrival.to_string(),
            &s.dwell_s.to_string(),
        ])
        .map_err(|e| Error::Stream(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Stream(e.to_string()))
}

/// Parses the POI catalog CSV (`poi_id,naics4,lat,lng`).
pub fn parse_pois(reader: impl Read) -> Result<ParseReport<PoiRecord>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Stream(format!("POI CSV header: {e}")))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(c_poi), Some(c_naics), Some(c_lat), Some(c_lng)) =
        (col("poi_id"), col("naics4"), col("lat"), col("lng"))
    else {
        return Err(Error::Stream(
            "POI CSV header must include poi_id, naics4, lat, lng".into(),
        ));
    };
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for result in rdr.records() {
        let row = result.map_err(|e| Error::Stream(format!("POI CSV: {e}")))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let mut warn = |reason: String| warnings.push(RowWarning { line, reason });
        let fields = (row.get(c_poi), row.get(c_naics), row.get(c_lat), row.get(c_lng));
        let (Some(poi), Some(naics), Some(lat), Some(lng)) = fields else {
            warn("missing field".into());
            continue;
        };
        let (Ok(lat), Ok(lng)) = (lat.trim().parse::<f64>(), lng.trim().parse::<f64>()) else {
            warn("bad coordinates".into());
            continue;
        };
        if poi.trim().is_empty() {
            warn("empty poi_id".into());
            continue;
        }
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lng) {
            warn(format!("coordinates out of range ({lat}, {lng})"));
            continue;
        }
        records.push(PoiRecord {
            poi_id: poi.trim().to_string(),
            naics4: naics.trim().to_string(),
            lat,
            lng,
        });
    }
    Ok(ParseReport { records, warnings })
}

pub fn write_pois_csv(writer: impl Write, pois: &[PoiRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["poi_id", "naics4", "lat", "lng"])
        .map_err(|e| Error::Stream(e.to_string()))?;
    for p in pois {
        w.write_record([p.poi_id.as_str(), p.naics4.as_str(), &p.lat.to_string(), &p.lng.to_string()])
            .map_err(|e| Error::Stream(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Stream(e.to_string()))
}

/// Keeps stops whose dwell strictly exceeds `min_dwell_s` (a 2-minute stay
/// does not count as a visit under the default threshold of 120 s).
pub fn filter_visits(stops: Vec<VisitStop>, min_dwell_s: i64) -> Vec<VisitStop> {
    stops.into_iter().filter(|s| s.dwell_s > min_dwell_s).collect()
}

/// One POI with its resolved category; `category: None` marks an unmapped
/// NAICS code (kept in networks, excluded from attributed-motif coloring).
#[derive(Debug, Clone)]
pub struct PoiInfo {
    pub poi_id: String,
    pub naics4: String,
    pub lat: f64,
    pub lng: f64,
    pub category: Option<CategoryId>,
}

/// Categorized POI index keyed by POI id.
#[derive(Debug, Clone, Default)]
pub struct PoiIndex {
    pois: Vec<PoiInfo>,
    by_id: HashMap<String, u32>,
}

impl PoiIndex {
    pub fn get(&self, poi_id: &str) -> Option<&PoiInfo> {
        self.by_id.get(poi_id).map(|&i| &self.pois[i as usize])
    }

    pub fn len(&self) -> usize {
        self.pois.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pois.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PoiInfo> {
        self.pois.iter()
    }

    pub fn uncategorized_count(&self) -> usize {
        self.pois.iter().filter(|p| p.category.is_none()).count()
    }
}

/// Resolves each POI's NAICS code against the category table. Unmapped codes
/// are flagged rather than dropped. Duplicate POI ids keep the first record.
pub fn attach_categories(pois: &[PoiRecord], table: &CategoryTable) -> PoiIndex {
    let mut index = PoiIndex::default();
    for p in pois {
        if index.by_id.contains_key(&p.poi_id) {
            continue;
        }
        let info = PoiInfo {
            poi_id: p.poi_id.clone(),
            naics4: p.naics4.clone(),
            lat: p.lat,
            lng: p.lng,
            category: table.lookup(&p.naics4),
        };
        index.by_id.insert(p.poi_id.clone(), index.pois.len() as u32);
        index.pois.push(info);
    }
    index
}

/// Local calendar date of an epoch-second instant under a fixed UTC offset.
pub fn local_date(arrival: i64, tz_offset_hours: i32) -> NaiveDate {
    let local = DateTime::from_timestamp(arrival, 0).unwrap_or_default()
        + Duration::hours(tz_offset_hours as i64);
    local.date_naive()
}

/// Derives per-device transitions: stops are ordered by arrival, and each
/// consecutive pair with distinct POIs on the same local date yields one
/// transition. Transitions never cross local midnight. `max_gap_s`, when set,
/// drops pairs whose inter-stop gap (next arrival minus previous departure)
/// exceeds the cap.
pub fn extract_transitions(
    stops: &[VisitStop],
    tz_offset_hours: i32,
    max_gap_s: Option<i64>,
) -> Vec<Transition> {
    let mut per_device: HashMap<&str, Vec<&VisitStop>> = HashMap::new();
    for s in stops {
        per_device.entry(&s.device_id).or_default().push(s);
    }
    let mut device_ids: Vec<&str> = per_device.keys().copied().collect();
    device_ids.sort_unstable();

    let mut out = Vec::new();
    for dev in device_ids {
        let seq = per_device.get_mut(dev).unwrap();
        seq.sort_by(|a, b| (a.arrival, a.poi_id.as_str()).cmp(&(b.arrival, b.poi_id.as_str())));
        let mut order_index = 0u32;
        let mut current_date: Option<NaiveDate> = None;
        for pair in seq.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let date_a = local_date(a.arrival, tz_offset_hours);
            let date_b = local_date(b.arrival, tz_offset_hours);
            if Some(date_a) != current_date {
                current_date = Some(date_a);
                order_index = 0;
            }
            if date_a != date_b || a.poi_id == b.poi_id {
                continue;
            }
            if let Some(cap) = max_gap_s {
                if b.arrival - (a.arrival + a.dwell_s) > cap {
                    continue;
                }
            }
            out.push(Transition {
                device_id: dev.to_string(),
                origin_poi: a.poi_id.clone(),
                dest_poi: b.poi_id.clone(),
                date: date_a,
                order_index,
            });
            order_index += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stop(dev: &str, poi: &str, arrival: i64, dwell: i64) -> VisitStop {
        VisitStop {
            device_id: dev.into(),
            poi_id: poi.into(),
            arrival,
            dwell_s: dwell,
        }
    }

    #[test]
    fn parses_rfc3339_row() {
        let csv = "device_id,poi_id,arrival,dwell_s\nd1,p1,2021-08-01T08:00:00Z,300\n";
        let report = parse_stops(csv.as_bytes(), StopFormat::Csv).unwrap();
        assert_eq!(report.records, vec![stop("d1", "p1", 1627804800, 300)]);
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn parses_epoch_row_and_reorders_columns() {
        let csv = "arrival,dwell_s,poi_id,device_id\n1627804800,300,p1,d1\n";
        let report = parse_stops(csv.as_bytes(), StopFormat::Csv).unwrap();
        assert_eq!(report.records, vec![stop("d1", "p1", 1627804800, 300)]);
    }

    #[test]
    fn negative_dwell_skipped_with_warning() {
        let csv = "device_id,poi_id,arrival,dwell_s\nd1,p1,1627804800,-5\n";
        let report = parse_stops(csv.as_bytes(), StopFormat::Csv).unwrap();
        assert!(report.records.is_empty());
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(report.warnings[0].line, 2);
    }

    #[test]
    fn empty_file_with_header_is_empty() {
        let csv = "device_id,poi_id,arrival,dwell_s\n";
        let report = parse_stops(csv.as_bytes(), StopFormat::Csv).unwrap();
        assert!(report.records.is_empty());
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn missing_header_is_fatal() {
        let csv = "a,b,c\n1,2,3\n";
        assert!(parse_stops(csv.as_bytes(), StopFormat::Csv).is_err());
    }

    #[test]
    fn jsonl_rows() {
        let jsonl = concat!(
            r#"{"device_id":"d1","poi_id":"p1","arrival":1627804800,"dwell_s":300}"#,
            "\n",
            r#"{"device_id":"d1","poi_id":"p2","arrival":"2021-08-01T09:00:00Z","dwell_s":200}"#,
            "\n",
            r#"{"device_id":"","poi_id":"p3","arrival":1,"dwell_s":1}"#,
            "\n",
        );
        let report = parse_stops(jsonl.as_bytes(), StopFormat::Jsonl).unwrap();
        assert_eq!(report.records.len(), 2);
        assert_eq!(report.records[1].arrival, 1627808400);
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(report.warnings[0].line, 3);
    }

    #[test]
    fn dwell_threshold_is_strict() {
        let stops = vec![
            stop("d", "a", 0, 121),
            stop("d", "b", 10, 120),
            stop("d", "c", 20, 0),
        ];
        let kept = filter_visits(stops, 120);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].poi_id, "a");
        assert!(filter_visits(vec![], 120).is_empty());
    }

    #[test]
    fn attach_marks_unmapped() {
        let table = CategoryTable::builtin();
        let pois = vec![
            PoiRecord { poi_id: "p1".into(), naics4: "4471".into(), lat: 30.0, lng: -90.0 },
            PoiRecord { poi_id: "p2".into(), naics4: "0000".into(), lat: 30.0, lng: -90.0 },
        ];
        let index = attach_categories(&pois, &table);
        assert_eq!(index.len(), 2);
        let p1 = index.get("p1").unwrap();
        assert_eq!(table.name(p1.category.unwrap()), "Gasoline Stations");
        assert!(index.get("p2").unwrap().category.is_none());
        assert_eq!(index.uncategorized_count(), 1);
    }

    #[test]
    fn transitions_pair_consecutive_distinct_pois() {
        // 08:00, 09:00, 10:00 UTC on 2021-08-01, offset 0
        let stops = vec![
            stop("d1", "p1", 1627804800, 300),
            stop("d1", "p2", 1627808400, 300),
            stop("d1", "p3", 1627812000, 300),
        ];
        let ts = extract_transitions(&stops, 0, None);
        assert_eq!(ts.len(), 2);
        assert_eq!((ts[0].origin_poi.as_str(), ts[0].dest_poi.as_str()), ("p1", "p2"));
        assert_eq!((ts[1].origin_poi.as_str(), ts[1].dest_poi.as_str()), ("p2", "p3"));
        assert_eq!(ts[0].order_index, 0);
        assert_eq!(ts[1].order_index, 1);
    }

    #[test]
    fn transitions_never_cross_local_midnight() {
        // 23:50 and 00:10 local under UTC-5: arrivals 04:50 and 05:10 UTC next day
        let base = 1627804800; // 2021-08-01T08:00:00Z = 03:00 local
        let late = base + 20 * 3600 + 50 * 60; // 2021-08-02T04:50:00Z = 23:50 local Aug 1
        let next = late + 20 * 60;
        let stops = vec![stop("d1", "p1", late, 200), stop("d1", "p2", next, 200)];
        assert_eq!(local_date(late, -5), NaiveDate::from_ymd_opt(2021, 8, 1).unwrap());
        assert_eq!(local_date(next, -5), NaiveDate::from_ymd_opt(2021, 8, 2).unwrap());
        assert!(extract_transitions(&stops, -5, None).is_empty());
    }

    #[test]
    fn same_poi_revisit_yields_none() {
        let stops = vec![stop("d1", "p1", 0, 200), stop("d1", "p1", 3600, 200)];
        assert!(extract_transitions(&stops, 0, None).is_empty());
    }

    #[test]
    fn same_poi_between_distinct_pois_still_pairs_neighbors() {
        let stops = vec![
            stop("d1", "p1", 0, 200),
            stop("d1", "p1", 1000, 200),
            stop("d1", "p2", 2000, 200),
        ];
        let ts = extract_transitions(&stops, 0, None);
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].origin_poi, "p1");
        assert_eq!(ts[0].dest_poi, "p2");
    }

    #[test]
    fn max_gap_drops_distant_pairs() {
        let stops = vec![stop("d1", "p1", 0, 100), stop("d1", "p2", 10_000, 100)];
        assert_eq!(extract_transitions(&stops, 0, None).len(), 1);
        assert!(extract_transitions(&stops, 0, Some(3600)).is_empty());
        assert_eq!(extract_transitions(&stops, 0, Some(9_900)).len(), 1);
    }

    #[test]
    fn stops_csv_round_trip() {
        let stops = vec![stop("d1", "p1", 1627804800, 300), stop("d2", "p2", 0, 1)];
        let mut buf = Vec::new();
        write_stops_csv(&mut buf, &stops).unwrap();
        let report = parse_stops(buf.as_slice(), StopFormat::Csv).unwrap();
        assert_eq!(report.records, stops);
        assert!(report.warnings.is_empty());
    }
}
