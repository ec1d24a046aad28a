use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, FixedOffset, NaiveDate};
use log::warn;
use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::geometry::GroundPoint;

/// One persisted snapshot: anonymous positions and the risk figures derived
/// from them. No image data is ever stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRecord {
    pub timestamp: f64,
    pub camera_id: String,
    pub positions: Vec<GroundPoint>,
    pub people_count: u32,
    pub global_risk: f64,
    pub dynamic_risk: f64,
    pub infraction_pairs: u32,
}

impl LogRecord {
    fn check(&self) -> Result<(), AnalyticsError> {
        if !self.timestamp.is_finite() {
            return Err(AnalyticsError::NonFinite("timestamp"));
        }
        if !self.positions.iter().all(GroundPoint::is_finite) {
            return Err(AnalyticsError::NonFinite("positions"));
        }
        if !(0.0..=1.0).contains(&self.global_risk) {
            return Err(AnalyticsError::NonFinite("global_risk"));
        }
        if !(0.0..=1.0).contains(&self.dynamic_risk) {
            return Err(AnalyticsError::NonFinite("dynamic_risk"));
        }
        Ok(())
    }
}

/// Records read back from a store, plus how many trailing partial lines were
/// skipped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LogRead {
    pub records: Vec<LogRecord>,
    pub skipped_lines: usize,
}

/// Append-only record storage.
pub trait LogStore {
    fn append(&mut self, record: &LogRecord) -> Result<(), AnalyticsError>;

    /// Every record of `camera_id`, in append order within a day and in date
    /// order across days.
    fn read_all(&self, camera_id: &str) -> Result<LogRead, AnalyticsError>;
}

/// One JSONL file per camera per local day, `log_<camera>_<YYYY-MM-DD>.jsonl`.
///
/// Days are cut at midnight in the store's fixed UTC offset.
#[derive(Debug)]
pub struct JsonlLogStore {
    dir: PathBuf,
    offset: FixedOffset,
    open: Option<(PathBuf, File)>,
}

fn storage(path: &Path, e: impl std::fmt::Display) -> AnalyticsError {
    AnalyticsError::Storage(format!("{}: {e}", path.display()))
}

impl JsonlLogStore {
    pub fn new(dir: impl Into<PathBuf>, offset: FixedOffset) -> Self {
        Self {
            dir: dir.into(),
            offset,
            open: None,
        }
    }

    pub fn utc(dir: impl Into<PathBuf>) -> Self {
        Self::new(dir, FixedOffset::east_opt(0).expect("zero offset"))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn offset(&self) -> FixedOffset {
        self.offset
    }

    /// Local date of a Unix timestamp in the store's offset.
    pub fn local_date(&self, timestamp: f64) -> Option<NaiveDate> {
        self.local_datetime(timestamp).map(|t| t.date_naive())
    }

    pub fn local_datetime(&self, timestamp: f64) -> Option<DateTime<FixedOffset>> {
        let secs = timestamp.floor();
        let nanos = ((timestamp - secs) * 1e9) as u32;
        DateTime::from_timestamp(secs as i64, nanos.min(999_999_999)).map(|t| t.with_timezone(&self.offset))
    }

    pub fn log_path(&self, camera_id: &str, date: NaiveDate) -> PathBuf {
        self.dir.join(format!("log_{camera_id}_{}.jsonl", date.format("%Y-%m-%d")))
    }

    pub fn occupation_map_path(&self, camera_id: &str, date: NaiveDate, ext: &str) -> PathBuf {
        self.dir
            .join(format!("occupation_{camera_id}_{}.{ext}", date.format("%Y-%m-%d")))
    }

    fn log_files(&self, camera_id: &str) -> Result<Vec<(NaiveDate, PathBuf)>, AnalyticsError> {
        let prefix = format!("log_{camera_id}_");
        let entries = match fs::read_dir(&self.dir) {
            Ok(e) => e,
            Err(e) => return Err(storage(&self.dir, e)),
        };
        let mut files = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| storage(&self.dir, e))?;
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            let Some(rest) = name.strip_prefix(&prefix).and_then(|r| r.strip_suffix(".jsonl")) else {
                continue;
            };
            // the remainder must be exactly a date, so "cam" does not pick up
            // the files of "cam_2"
            if let Ok(date) = NaiveDate::parse_from_str(rest, "%Y-%m-%d") {
                files.push((date, entry.path()));
            }
        }
        files.sort();
        Ok(files)
    }

    fn read_file(path: &Path, out: &mut LogRead) -> Result<(), AnalyticsError> {
        let file = File::open(path).map_err(|e| storage(path, e))?;
        let lines: Vec<String> = BufReader::new(file)
            .lines()
            .collect::<Result<_, _>>()
            .map_err(|e| storage(path, e))?;
        let last = lines.iter().rposition(|l| !l.trim().is_empty());
        for (k, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<LogRecord>(line) {
                Ok(r) => out.records.push(r),
                Err(e) if Some(k) == last => {
                    warn!("{}: skipping partial trailing line {}: {e}", path.display(), k + 1);
                    out.skipped_lines += 1;
                }
                Err(e) => {
                    return Err(AnalyticsError::CorruptLog {
                        path: path.display().to_string(),
                        line: k + 1,
                        message: e.to_string(),
                    })
                }
            }
        }
        Ok(())
    }
}

impl LogStore for JsonlLogStore {
    fn append(&mut self, record: &LogRecord) -> Result<(), AnalyticsError> {
        record.check()?;
        let date = self
            .local_date(record.timestamp)
            .ok_or(AnalyticsError::NonFinite("timestamp"))?;
        let path = self.log_path(&record.camera_id, date);
        if self.open.as_ref().is_none_or(|(p, _)| *p != path) {
            fs::create_dir_all(&self.dir).map_err(|e| storage(&self.dir, e))?;
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(|e| storage(&path, e))?;
            self.open = Some((path.clone(), file));
        }
        let (_, file) = self.open.as_mut().expect("opened above");
        let mut line = serde_json::to_string(record).map_err(|e| storage(&path, e))?;
        line.push('\n');
        file.write_all(line.as_bytes()).map_err(|e| storage(&path, e))?;
        file.flush().map_err(|e| storage(&path, e))
    }

    fn read_all(&self, camera_id: &str) -> Result<LogRead, AnalyticsError> {
        let mut out = LogRead::default();
        if !self.dir.exists() {
            return Err(storage(&self.dir, "log directory does not exist"));
        }
        for (_, path) in self.log_files(camera_id)? {
            Self::read_file(&path, &mut out)?;
        }
        Ok(out)
    }
}
