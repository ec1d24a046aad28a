use std::fmt;
use std::str::FromStr;

use chrono::{Days, FixedOffset, NaiveDate, Timelike};
use serde::{Deserialize, Serialize};

use super::{AnalyticsError, JsonlLogStore, LogRecord, LogStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Period {
    Day,
    Week,
}

impl Period {
    pub fn days(self) -> u64 {
        match self {
            Period::Day => 1,
            Period::Week => 7,
        }
    }
}

impl FromStr for Period {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "day" => Ok(Period::Day),
            "week" => Ok(Period::Week),
            other => Err(format!("unknown period {other:?} (expected day or week)")),
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Period::Day => "day",
            Period::Week => "week",
        })
    }
}

/// Statistics of one local hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourBucket {
    /// Local date of the hour; absent when the report has no anchor date.
    pub date: Option<NaiveDate>,
    pub hour: u32,
    pub samples: usize,
    pub empty: bool,
    pub avg_people: f64,
    pub max_people: u32,
    pub avg_dynamic_risk: f64,
    pub max_dynamic_risk: f64,
    pub infraction_count: u64,
}

impl HourBucket {
    fn empty(date: Option<NaiveDate>, hour: u32) -> Self {
        Self {
            date,
            hour,
            samples: 0,
            empty: true,
            avg_people: 0.0,
            max_people: 0,
            avg_dynamic_risk: 0.0,
            max_dynamic_risk: 0.0,
            infraction_count: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationMapRef {
    pub date: NaiveDate,
    pub csv: String,
    pub pgm: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub camera_id: String,
    pub period: Period,
    pub start_date: Option<NaiveDate>,
    pub utc_offset_seconds: i32,
    /// 24 buckets per day of the period, in time order.
    pub buckets: Vec<HourBucket>,
    pub occupation_maps: Vec<OccupationMapRef>,
    pub records_used: usize,
    pub records_outside_period: usize,
    pub skipped_lines: usize,
}

/// Aggregates records into hourly buckets.
///
/// The period starts at `start` or, when absent, is the day (or the seven
/// days) ending on the local date of the latest record. Records outside the
/// period are counted and ignored.
pub fn aggregate(
    records: &[LogRecord],
    camera_id: &str,
    period: Period,
    start: Option<NaiveDate>,
    offset: FixedOffset,
) -> Report {
    let local = |t: f64| JsonlLogStore::new("", offset).local_datetime(t);
    let start = start.or_else(|| {
        let latest = records
            .iter()
            .filter(|r| r.camera_id == camera_id)
            .map(|r| r.timestamp)
            .fold(f64::NEG_INFINITY, f64::max);
        local(latest).and_then(|t| t.date_naive().checked_sub_days(Days::new(period.days() - 1)))
    });
    let hours = (period.days() * 24) as usize;
    let mut buckets: Vec<HourBucket> = (0..hours)
        .map(|k| {
            let date = start.and_then(|s| s.checked_add_days(Days::new((k / 24) as u64)));
            HourBucket::empty(date, (k % 24) as u32)
        })
        .collect();
    let mut people_sum = vec![0.0; hours];
    let mut risk_sum = vec![0.0; hours];
    let mut used = 0;
    let mut outside = 0;

    for r in records.iter().filter(|r| r.camera_id == camera_id) {
        let (Some(start), Some(t)) = (start, local(r.timestamp)) else {
            outside += 1;
            continue;
        };
        let day = (t.date_naive() - start).num_days();
        if day < 0 || day >= period.days() as i64 {
            outside += 1;
            continue;
        }
        let k = day as usize * 24 + t.hour() as usize;
        let b = &mut buckets[k];
        b.samples += 1;
        b.empty = false;
        b.max_people = b.max_people.max(r.people_count);
        b.max_dynamic_risk = b.max_dynamic_risk.max(r.dynamic_risk);
        b.infraction_count += r.infraction_pairs as u64;
        people_sum[k] += r.people_count as f64;
        risk_sum[k] += r.dynamic_risk;
        used += 1;
    }
    for (k, b) in buckets.iter_mut().enumerate() {
        if b.samples > 0 {
            b.avg_people = people_sum[k] / b.samples as f64;
            b.avg_dynamic_risk = risk_sum[k] / b.samples as f64;
        }
    }

    Report {
        camera_id: camera_id.to_string(),
        period,
        start_date: start,
        utc_offset_seconds: offset.local_minus_utc(),
        buckets,
        occupation_maps: Vec::new(),
        records_used: used,
        records_outside_period: outside,
        skipped_lines: 0,
    }
}

/// Reads a camera's log and aggregates it, attaching any daily occupation
/// map files found next to the logs.
pub fn build_report(
    store: &JsonlLogStore,
    period: Period,
    camera_id: &str,
    start: Option<NaiveDate>,
) -> Result<Report, AnalyticsError> {
    let read = store.read_all(camera_id)?;
    let mut report = aggregate(&read.records, camera_id, period, start, store.offset());
    report.skipped_lines = read.skipped_lines;
    if let Some(start) = report.start_date {
        for d in 0..period.days() {
            let Some(date) = start.checked_add_days(Days::new(d)) else { continue };
            let csv = store.occupation_map_path(camera_id, date, "csv");
            if csv.exists() {
                let pgm = store.occupation_map_path(camera_id, date, "pgm");
                report.occupation_maps.push(OccupationMapRef {
                    date,
                    csv: csv.display().to_string(),
                    pgm: pgm.exists().then(|| pgm.display().to_string()),
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::LogStore;

    fn utc() -> FixedOffset {
        FixedOffset::east_opt(0).unwrap()
    }

    fn rec(t: f64, people: u32, d: f64) -> LogRecord {
        LogRecord {
            timestamp: t,
            camera_id: "cam".into(),
            positions: vec![],
            people_count: people,
            global_risk: d,
            dynamic_risk: d,
            infraction_pairs: 2,
        }
    }

    // 2024-03-01T00:00:00Z
    const DAY0: f64 = 1_709_251_200.0;

    #[test]
    fn empty_store_gives_empty_report() {
        let dir = tempfile::tempdir().unwrap();
        let store = JsonlLogStore::utc(dir.path());
        let r = build_report(&store, Period::Day, "cam", None).unwrap();
        assert_eq!(r.buckets.len(), 24);
        assert!(r.buckets.iter().all(|b| b.empty && b.samples == 0));
        assert_eq!(r.start_date, None);
        let w = build_report(&store, Period::Week, "cam", None).unwrap();
        assert_eq!(w.buckets.len(), 168);
    }

    #[test]
    fn single_afternoon_record() {
        let r = aggregate(&[rec(DAY0 + 14.5 * 3600.0, 5, 0.3)], "cam", Period::Day, None, utc());
        assert_eq!(r.start_date, NaiveDate::from_ymd_opt(2024, 3, 1));
        for b in &r.buckets {
            if b.hour == 14 {
                assert!(!b.empty);
                assert_eq!(b.avg_people, 5.0);
                assert_eq!(b.infraction_count, 2);
            } else {
                assert!(b.empty);
            }
        }
    }

    #[test]
    fn offset_moves_the_hour() {
        let plus2 = FixedOffset::east_opt(2 * 3600).unwrap();
        let r = aggregate(&[rec(DAY0 + 14.5 * 3600.0, 5, 0.3)], "cam", Period::Day, None, plus2);
        assert!(!r.buckets[16].empty);
    }

    #[test]
    fn records_outside_the_period_are_ignored() {
        let start = NaiveDate::from_ymd_opt(2024, 3, 2);
        let r = aggregate(&[rec(DAY0 + 3600.0, 1, 0.1), rec(DAY0 + 86400.0 + 60.0, 3, 0.2)], "cam", Period::Day, start, utc());
        assert_eq!(r.records_used, 1);
        assert_eq!(r.records_outside_period, 1);
        assert_eq!(r.buckets[0].max_people, 3);
    }

    #[test]
    fn week_anchors_on_latest_day() {
        let r = aggregate(&[rec(DAY0 + 6.0 * 86400.0 + 10.0, 4, 0.5), rec(DAY0 + 1.0, 2, 0.1)], "cam", Period::Week, None, utc());
        assert_eq!(r.start_date, NaiveDate::from_ymd_opt(2024, 3, 1));
        assert!(!r.buckets[0].empty);
        assert!(!r.buckets[6 * 24].empty);
        assert_eq!(r.records_used, 2);
    }

    #[test]
    fn occupation_maps_are_referenced() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = JsonlLogStore::utc(dir.path());
        store.append(&rec(DAY0 + 100.0, 1, 0.1)).unwrap();
        let date = NaiveDate::from_ymd_opt(2024, 3, 1).unwrap();
        std::fs::write(store.occupation_map_path("cam", date, "csv"), "0\n").unwrap();
        let r = build_report(&store, Period::Day, "cam", None).unwrap();
        assert_eq!(r.occupation_maps.len(), 1);
        assert_eq!(r.occupation_maps[0].pgm, None);
    }
}
