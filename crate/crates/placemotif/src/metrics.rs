//! Weekday-aware baselines, percentage-change series, and impact/recovery
//! summaries for daily metric series.

use std::collections::BTreeMap;

use chrono::{Datelike, Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inclusive date range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::Config(format!("date range {start}..{end} is reversed")));
        }
        Ok(Self { start, end })
    }

    pub fn days(&self) -> i64 {
        (self.end - self.start).num_days() + 1
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    pub fn iter(&self) -> impl Iterator<Item = NaiveDate> {
        let start = self.start;
        (0..self.days()).map(move |i| start + Days::new(i as u64))
    }
}

/// A named daily metric; dates may be missing.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    pub name: String,
    pub values: BTreeMap<NaiveDate, f64>,
}

impl DailySeries {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            values: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, date: NaiveDate, value: f64) {
        self.values.insert(date, value);
    }

    pub fn get(&self, date: NaiveDate) -> Option<f64> {
        self.values.get(&date).copied()
    }
}

/// Weekday slot, Sunday = 0 .. Saturday = 6.
pub fn weekday_slot(date: NaiveDate) -> usize {
    date.weekday().num_days_from_sunday() as usize
}

pub const WEEKDAY_NAMES: [&str; 7] = ["Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineEntry {
    pub value: f64,
    pub samples: u32,
    /// False when some window dates for this weekday were missing.
    pub complete: bool,
}

/// One baseline value per weekday (Sunday through Saturday).
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineTable {
    pub name: String,
    entries: [Option<BaselineEntry>; 7],
}

impl BaselineTable {
    pub fn get(&self, date: NaiveDate) -> Option<BaselineEntry> {
        self.entries[weekday_slot(date)]
    }

    pub fn by_slot(&self, slot: usize) -> Option<BaselineEntry> {
        self.entries[slot]
    }

    pub fn is_complete(&self) -> bool {
        self.entries.iter().all(|e| e.is_some_and(|b| b.complete))
    }
}

/// Per-weekday mean of the series over the baseline window. The window must
/// cover each weekday the same number of times (21 consecutive days by
/// default; other multiples of 7 only with `allow_any_weeks`). Missing dates
/// reduce that weekday's sample count and clear its `complete` flag.
pub fn compute_baseline(
    series: &DailySeries,
    window: DateRange,
    allow_any_weeks: bool,
) -> Result<BaselineTable> {
    let days = window.days();
    if days % 7 != 0 {
        return Err(Error::Config(format!(
            "baseline window {}..{} spans {days} days, not a multiple of 7",
            window.start, window.end
        )));
    }
    if days != 21 && !allow_any_weeks {
        return Err(Error::Config(format!(
            "baseline window {}..{} spans {days} days; expected 21 (pass the override to allow other multiples of 7)",
            window.start, window.end
        )));
    }
    let weeks = (days / 7) as u32;
    let mut sums = [0.0f64; 7];
    let mut counts = [0u32; 7];
    for date in window.iter() {
        if let Some(v) = series.get(date) {
            let slot = weekday_slot(date);
            sums[slot] += v;
            counts[slot] += 1;
        }
    }
    let mut entries = [None; 7];
    for slot in 0..7 {
        if counts[slot] > 0 {
            entries[slot] = Some(BaselineEntry {
                value: sums[slot] / counts[slot] as f64,
                samples: counts[slot],
                complete: counts[slot] == weeks,
            });
        }
    }
    Ok(BaselineTable {
        name: series.name.clone(),
        entries,
    })
}

/// One study-period date of a change series. `change` is None when the value
/// is missing or the weekday baseline is absent or zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChangePoint {
    pub value: Option<f64>,
    pub baseline: Option<f64>,
    pub change: Option<f64>,
}

/// Fractional change against the weekday baseline, per study date.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeSeries {
    pub name: String,
    points: BTreeMap<NaiveDate, ChangePoint>,
}

impl ChangeSeries {
    pub fn get(&self, date: NaiveDate) -> Option<ChangePoint> {
        self.points.get(&date).copied()
    }

    pub fn change(&self, date: NaiveDate) -> Option<f64> {
        self.points.get(&date).and_then(|p| p.change)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, ChangePoint)> + '_ {
        self.points.iter().map(|(&d, &p)| (d, p))
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.points.keys().next_back().copied()
    }

    /// Test/fixture helper: a series of plain change values.
    pub fn from_changes(name: impl Into<String>, changes: impl IntoIterator<Item = (NaiveDate, f64)>) -> Self {
        let points = changes
            .into_iter()
            .map(|(d, c)| {
                (
                    d,
                    ChangePoint {
                        value: None,
                        baseline: None,
                        change: Some(c),
                    },
                )
            })
            .collect();
        Self {
            name: name.into(),
            points,
        }
    }
}

/// Percentage change (as a fraction) of each study-window date against that
/// date's weekday baseline. Zero baselines flag the date undefined instead of
/// fabricating a value.
pub fn pct_change(series: &DailySeries, baselines: &BaselineTable, study: DateRange) -> ChangeSeries {
    let mut points = BTreeMap::new();
    for date in study.iter() {
        let value = series.get(date);
        let baseline = baselines.get(date).map(|b| b.value);
        let change = match (value, baseline) {
            (Some(v), Some(b)) if b != 0.0 => Some((v - b) / b),
            _ => None,
        };
        points.insert(date, ChangePoint { value, baseline, change });
    }
    ChangeSeries {
        name: series.name.clone(),
        points,
    }
}

/// The signed change of largest absolute value within the event window, with
/// its date; ties break toward the earliest date. Errors when every window
/// entry is undefined.
pub fn max_impact(change: &ChangeSeries, event_window: DateRange) -> Result<(f64, NaiveDate)> {
    let mut best: Option<(f64, NaiveDate)> = None;
    for date in event_window.iter() {
        if let Some(c) = change.change(date) {
            if best.is_none_or(|(b, _)| c.abs() > b.abs()) {
                best = Some((c, date));
            }
        }
    }
    best.ok_or_else(|| {
        Error::Stage {
            stage: "metrics",
            message: format!(
                "no defined change for '{}' within {}..{}",
                change.name, event_window.start, event_window.end
            ),
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Recovery {
    Recovered {
        duration_days: i64,
        cutoff: NaiveDate,
    },
    NotRecovered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub metric: String,
    pub event_start: NaiveDate,
    pub recovery: Recovery,
}

/// Scans dates from `post_start` for the first `consecutive` calendar days
/// whose |change| stays within `threshold`; the run's last day is the cutoff
/// and the duration counts days from `event_start` to the cutoff. Missing or
/// undefined days break a run.
pub fn recovery_duration(
    change: &ChangeSeries,
    event_start: NaiveDate,
    post_start: NaiveDate,
    threshold: f64,
    consecutive: u32,
) -> RecoveryReport {
    let consecutive = consecutive.max(1);
    let mut run = 0u32;
    let mut prev: Option<NaiveDate> = None;
    for (date, point) in change.iter() {
        if date < post_start {
            continue;
        }
        let contiguous = prev.is_none_or(|p| date == p + Days::new(1));
        let within = point.change.is_some_and(|c| c.abs() <= threshold);
        run = if within {
            if contiguous { run + 1 } else { 1 }
        } else {
            0
        };
        prev = Some(date);
        if run >= consecutive {
            return RecoveryReport {
                metric: change.name.clone(),
                event_start,
                recovery: Recovery::Recovered {
                    duration_days: (date - event_start).num_days(),
                    cutoff: date,
                },
            };
        }
    }
    RecoveryReport {
        metric: change.name.clone(),
        event_start,
        recovery: Recovery::NotRecovered,
    }
}
