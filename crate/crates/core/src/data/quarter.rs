use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// A calendar quarter, displayed as `1965:Q1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Quarter {
    pub year: i32,
    pub quarter: u8,
}

impl Quarter {
    pub fn new(year: i32, quarter: u8) -> Option<Self> {
        (1..=4).contains(&quarter).then_some(Self { year, quarter })
    }

    pub fn from_month(year: i32, month: u32) -> Option<Self> {
        (1..=12).contains(&month).then(|| Self { year, quarter: ((month - 1) / 3 + 1) as u8 })
    }

    pub fn next(self) -> Self {
        self.offset(1)
    }

    pub fn offset(self, quarters: i64) -> Self {
        let idx = self.year as i64 * 4 + (self.quarter as i64 - 1) + quarters;
        Self { year: idx.div_euclid(4) as i32, quarter: (idx.rem_euclid(4) + 1) as u8 }
    }

    /// Quarters from `self` to `other` (positive when `other` is later).
    pub fn distance(self, other: Self) -> i64 {
        (other.year as i64 * 4 + other.quarter as i64) - (self.year as i64 * 4 + self.quarter as i64)
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:Q{}", self.year, self.quarter)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseQuarterError(pub String);

impl fmt::Display for ParseQuarterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unrecognized date '{}'", self.0)
    }
}

impl std::error::Error for ParseQuarterError {}

fn parse_year(s: &str) -> Option<i32> {
    (s.len() == 4 && s.bytes().all(|b| b.is_ascii_digit())).then(|| s.parse().ok()).flatten()
}

fn parse_small(s: &str, max: u32) -> Option<u32> {
    if s.is_empty() || s.len() > 2 || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok().filter(|v| (1..=max).contains(v))
}

/// Accepts ISO dates (`1965-03-01`), quarter labels (`1965:Q1`, `1965-Q1`,
/// `1965Q1`) and US-style `3/1/1965`.
impl FromStr for Quarter {
    type Err = ParseQuarterError;

    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        let err = || ParseQuarterError(raw.to_string());
        let s = raw.trim();
        if let Some(pos) = s.find(['Q', 'q']) {
            let year_part = s[..pos].trim_end_matches([':', '-', ' ']);
            let year = parse_year(year_part).ok_or_else(err)?;
            let q = parse_small(&s[pos + 1..], 4).ok_or_else(err)?;
            return Quarter::new(year, q as u8).ok_or_else(err);
        }
        let parts: Vec<&str> = s.split('-').collect();
        if parts.len() == 3 {
            let year = parse_year(parts[0]).ok_or_else(err)?;
            let month = parse_small(parts[1], 12).ok_or_else(err)?;
            parse_small(parts[2], 31).ok_or_else(err)?;
            return Quarter::from_month(year, month).ok_or_else(err);
        }
        let parts: Vec<&str> = s.split('/').collect();
        if parts.len() == 3 {
            let month = parse_small(parts[0], 12).ok_or_else(err)?;
            parse_small(parts[1], 31).ok_or_else(err)?;
            let year = parse_year(parts[2]).ok_or_else(err)?;
            return Quarter::from_month(year, month).ok_or_else(err);
        }
        Err(err())
    }
}
