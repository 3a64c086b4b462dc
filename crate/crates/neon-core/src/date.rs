//! Calendar-day timestamps, serialized everywhere as `YYYYMMDD`.

use std::fmt;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

/// A single calendar day. The wire format is the 8-digit string `YYYYMMDD`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DateStamp(NaiveDate);

/// The input was not a valid calendar day in `YYYYMMDD` form.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid date {0:?}: expected a valid calendar day as YYYYMMDD")]
pub struct BadDate(pub String);

const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

impl DateStamp {
    /// Parses an 8-digit `YYYYMMDD` string, rejecting impossible days.
    pub fn parse(s: &str) -> Result<Self, BadDate> {
        let err = || BadDate(s.to_string());
        if s.len() != 8 || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let year: i32 = s[..4].parse().map_err(|_| err())?;
        let month: u32 = s[4..6].parse().map_err(|_| err())?;
        let day: u32 = s[6..8].parse().map_err(|_| err())?;
        NaiveDate::from_ymd_opt(year, month, day)
            .map(DateStamp)
            .ok_or_else(err)
    }

    pub fn from_ymd(year: i32, month: u32, day: u32) -> Option<Self> {
        NaiveDate::from_ymd_opt(year, month, day).map(DateStamp)
    }

    /// Compact `YYYYMMDD` form.
    pub fn compact(&self) -> String {
        format!(
            "{:04}{:02}{:02}",
            self.0.year(),
            self.0.month(),
            self.0.day()
        )
    }

    /// Natural-language form, e.g. `August 31, 2023`.
    pub fn pretty(&self) -> String {
        format!(
            "{} {}, {}",
            MONTHS[self.0.month0() as usize],
            self.0.day(),
            self.0.year()
        )
    }

    /// Absolute distance to `other` in whole days.
    pub fn days_between(&self, other: &DateStamp) -> i64 {
        (self.0 - other.0).num_days().abs()
    }

    pub fn plus_days(&self, days: i64) -> DateStamp {
        DateStamp(self.0 + Duration::days(days))
    }
}

impl fmt::Display for DateStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.compact())
    }
}

impl fmt::Debug for DateStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.compact())
    }
}

impl Serialize for DateStamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.compact())
    }
}

impl<'de> Deserialize<'de> for DateStamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        DateStamp::parse(&s).map_err(de::Error::custom)
    }
}
