use std::fmt;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

/// Microseconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub const fn from_micros(micros: i64) -> Self {
        Timestamp(micros)
    }

    pub const fn micros(self) -> i64 {
        self.0
    }

    /// Parses `YYYY-MM-DDTHH:MM:SS[.ffffff]Z`. At most six fractional digits.
    pub fn parse_iso(text: &str) -> Result<Self, TimestampParseError> {
        let err = || TimestampParseError(text.to_string());
        let body = text.strip_suffix('Z').ok_or_else(err)?;
        if let Some((_, frac)) = body.split_once('.') {
            if frac.is_empty() || frac.len() > 6 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err());
            }
        }
        let naive = NaiveDateTime::parse_from_str(body, "%Y-%m-%dT%H:%M:%S%.f").map_err(|_| err())?;
        Ok(Timestamp(naive.and_utc().timestamp_micros()))
    }

    /// ISO 8601 UTC with a fixed six-digit fraction. Falls back to the raw
    /// integer for instants outside the calendar range chrono supports.
    pub fn to_iso(self) -> String {
        match DateTime::from_timestamp_micros(self.0) {
            Some(dt) => dt.format("%Y-%m-%dT%H:%M:%S%.6fZ").to_string(),
            None => self.0.to_string(),
        }
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_iso())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid ISO 8601 UTC timestamp: {0:?}")]
pub struct TimestampParseError(pub String);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeriesError {
    #[error("timestamps not strictly increasing at index {index} ({prev} then {next})")]
    Unordered { index: usize, prev: i64, next: i64 },
    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },
}

/// A strictly time-ordered run of finite observations. This is what one
/// cell holds when it holds "a whole series".
///
/// Stored column-wise; the invariants are checked on construction and every
/// operation in this crate preserves them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservationSeries {
    times: Vec<Timestamp>,
    values: Vec<f64>,
}

impl ObservationSeries {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(points: impl IntoIterator<Item = (Timestamp, f64)>) -> Result<Self, SeriesError> {
        let (times, values): (Vec<_>, Vec<_>) = points.into_iter().unzip();
        Self::from_columns(times, values)
    }

    /// Convenience for tests and fixtures: raw microsecond timestamps.
    pub fn from_pairs(points: &[(i64, f64)]) -> Result<Self, SeriesError> {
        Self::new(points.iter().map(|&(t, v)| (Timestamp(t), v)))
    }

    pub fn from_columns(times: Vec<Timestamp>, values: Vec<f64>) -> Result<Self, SeriesError> {
        assert_eq!(times.len(), values.len(), "column lengths differ");
        for (index, w) in times.windows(2).enumerate() {
            if w[0] >= w[1] {
                return Err(SeriesError::Unordered { index: index + 1, prev: w[0].0, next: w[1].0 });
            }
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SeriesError::NonFinite { index });
        }
        Ok(ObservationSeries { times, values })
    }

    /// Caller guarantees ordering; values may still be non-finite, which the
    /// caller must check (see `has_non_finite`).
    pub(crate) fn from_columns_unchecked(times: Vec<Timestamp>, values: Vec<f64>) -> Self {
        debug_assert!(times.windows(2).all(|w| w[0] < w[1]));
        ObservationSeries { times, values }
    }

    pub(crate) fn has_non_finite(&self) -> bool {
        self.values.iter().any(|v| !v.is_finite())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[Timestamp] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (Timestamp, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    /// Value observed exactly at `t`.
    pub fn get(&self, t: Timestamp) -> Option<f64> {
        self.times.binary_search(&t).ok().map(|i| self.values[i])
    }

    /// Points with `from <= t < to`.
    pub fn range(&self, from: Timestamp, to: Timestamp) -> ObservationSeries {
        let lo = self.times.partition_point(|&t| t < from);
        let hi = self.times.partition_point(|&t| t < to).max(lo);
        ObservationSeries {
            times: self.times[lo..hi].to_vec(),
            values: self.values[lo..hi].to_vec(),
        }
    }

    pub(crate) fn map_values(&self, f: impl Fn(f64) -> f64) -> ObservationSeries {
        ObservationSeries {
            times: self.times.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}
