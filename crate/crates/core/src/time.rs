//! Signal time as integer microseconds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const MICROS_PER_SEC: u64 = 1_000_000;

/// A point on the signal timeline, in whole microseconds.
///
/// Formats as decimal seconds with exactly six fractional digits, so
/// `parse(format(t)) == t` for every value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct TimeOffset(u64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid time offset {0:?}")]
pub struct ParseTimeError(pub String);

impl TimeOffset {
    pub const ZERO: TimeOffset = TimeOffset(0);

    pub const fn from_micros(micros: u64) -> Self {
        TimeOffset(micros)
    }

    pub const fn from_millis(millis: u64) -> Self {
        TimeOffset(millis * 1_000)
    }

    pub const fn from_secs(secs: u64) -> Self {
        TimeOffset(secs * MICROS_PER_SEC)
    }

    pub const fn micros(self) -> u64 {
        self.0
    }

    /// Parses decimal seconds (`"1.5"`, `"0.500000"`, `"12"`).
    ///
    /// Digits beyond the sixth fractional place must be zero; anything
    /// finer than a microsecond is rejected rather than rounded.
    pub fn parse(s: &str) -> Result<Self, ParseTimeError> {
        let err = || ParseTimeError(s.to_string());
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty() && frac.is_empty() {
            return Err(err());
        }
        if !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let secs: u64 = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| err())? };
        let (head, tail) = frac.split_at(frac.len().min(6));
        if tail.bytes().any(|b| b != b'0') {
            return Err(err());
        }
        let micros = head
            .bytes()
            .chain(std::iter::repeat(b'0'))
            .take(6)
            .fold(0u64, |acc, b| acc * 10 + u64::from(b - b'0'));
        secs.checked_mul(MICROS_PER_SEC)
            .and_then(|v| v.checked_add(micros))
            .map(TimeOffset)
            .ok_or_else(err)
    }
}

impl fmt::Display for TimeOffset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.0 / MICROS_PER_SEC, self.0 % MICROS_PER_SEC)
    }
}

impl FromStr for TimeOffset {
    type Err = ParseTimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TimeOffset::parse(s)
    }
}

/// A closed interval of signal time, `start <= end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region {
    start: TimeOffset,
    end: TimeOffset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("region start {start} is after end {end}")]
pub struct BadRegion {
    pub start: TimeOffset,
    pub end: TimeOffset,
}

impl Region {
    pub fn new(start: TimeOffset, end: TimeOffset) -> Result<Self, BadRegion> {
        if start > end {
            return Err(BadRegion { start, end });
        }
        Ok(Region { start, end })
    }

    pub fn start(&self) -> TimeOffset {
        self.start
    }

    pub fn end(&self) -> TimeOffset {
        self.end
    }

    pub fn contains(&self, other: &Region) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    /// True when `t` lies strictly between the endpoints.
    pub fn strictly_inside(&self, t: TimeOffset) -> bool {
        self.start < t && t < self.end
    }

    pub fn hull(&self, other: &Region) -> Region {
        Region {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.start, self.end)
    }
}
