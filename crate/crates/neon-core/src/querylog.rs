//! Query-log curation: privacy filtering and spiking-date detection over
//! daily query volumes.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::date::DateStamp;

/// One logged query aggregate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedQuery {
    pub text: String,
    pub date: DateStamp,
    pub distinct_users: u64,
    pub entity: String,
}

/// Keeps queries requested by at least `min_users` distinct individuals,
/// preserving order. Idempotent.
pub fn privacy_filter(queries: Vec<LoggedQuery>, min_users: u64) -> Vec<LoggedQuery> {
    queries
        .into_iter()
        .filter(|q| q.distinct_users >= min_users)
        .collect()
}

/// Daily query counts for one entity over consecutive calendar days.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DailySeries {
    pub entity: String,
    pub points: Vec<(DateStamp, u64)>,
}

impl DailySeries {
    /// Builds a gap-free series from sparse per-day counts: duplicate dates
    /// are summed and missing days are filled with zero. Returns `None` for
    /// empty input.
    pub fn from_sparse(
        entity: impl Into<String>,
        rows: impl IntoIterator<Item = (DateStamp, u64)>,
    ) -> Option<Self> {
        let mut by_date: BTreeMap<DateStamp, u64> = BTreeMap::new();
        for (date, count) in rows {
            *by_date.entry(date).or_default() += count;
        }
        let (&first, _) = by_date.first_key_value()?;
        let (&last, _) = by_date.last_key_value()?;
        let mut points = Vec::new();
        let mut day = first;
        loop {
            points.push((day, by_date.get(&day).copied().unwrap_or(0)));
            if day == last {
                break;
            }
            day = day.plus_days(1);
        }
        Some(Self {
            entity: entity.into(),
            points,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum QuerylogError {
    #[error("series of {len} points is shorter than the {window}-day window")]
    SeriesTooShort { len: usize, window: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("bad volume record: {0}")]
    BadRecord(String),
}

/// Flags dates whose trailing `window`-day rolling count sum strictly
/// exceeds one population standard deviation above the mean of all rolling
/// sums. Sums are taken over full windows only, so a constant series has
/// zero deviation and flags nothing.
pub fn detect_spikes(series: &DailySeries, window: usize) -> Result<Vec<DateStamp>, QuerylogError> {
    assert!(window >= 1, "window must be at least 1");
    let n = series.points.len();
    if n < window {
        return Err(QuerylogError::SeriesTooShort { len: n, window });
    }
    let counts: Vec<f64> = series.points.iter().map(|&(_, c)| c as f64).collect();
    let sums: Vec<f64> = (window - 1..n)
        .map(|i| counts[i + 1 - window..=i].iter().sum())
        .collect();
    let mean = sums.iter().sum::<f64>() / sums.len() as f64;
    let variance = sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / sums.len() as f64;
    let threshold = mean + variance.sqrt();
    Ok(sums
        .iter()
        .enumerate()
        .filter(|&(_, &s)| s > threshold)
        .map(|(i, _)| series.points[i + window - 1].0)
        .collect())
}

/// One row of the query-volume input: daily query count per entity plus the
/// distinct-user count used for privacy filtering.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VolumeRow {
    pub entity: String,
    pub date: DateStamp,
    pub count: u64,
    pub distinct_users: u64,
}

/// Reads volume rows from CSV (`entity,date,count,distinct_users` header).
pub fn read_volume_csv(path: impl AsRef<Path>) -> Result<Vec<VolumeRow>, QuerylogError> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let mut rows = Vec::new();
    for record in reader.deserialize::<VolumeRow>() {
        rows.push(record.map_err(|e| QuerylogError::BadRecord(e.to_string()))?);
    }
    Ok(rows)
}

/// Reads volume rows from JSON-lines.
pub fn read_volume_jsonl(path: impl AsRef<Path>) -> Result<Vec<VolumeRow>, QuerylogError> {
    let mut text = String::new();
    std::fs::File::open(path.as_ref())?.read_to_string(&mut text)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| QuerylogError::BadRecord(e.to_string())))
        .collect()
}
