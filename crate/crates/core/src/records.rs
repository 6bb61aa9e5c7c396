//! Harvested entities shared by every downstream stage.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::namekit::NameVariant;

pub const EARLIEST_YEAR: i32 = 1800;

/// Publication date with optional month and day. Ordering is
/// (year, month, day) with a missing component sorting first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PubDate {
    pub year: i32,
    pub month: Option<u32>,
    pub day: Option<u32>,
}

impl PubDate {
    pub fn year_only(year: i32) -> Self {
        PubDate { year, month: None, day: None }
    }

    pub fn ymd(year: i32, month: u32, day: u32) -> Self {
        PubDate { year, month: Some(month), day: Some(day) }
    }

    pub fn is_complete(&self) -> bool {
        self.month.is_some() && self.day.is_some()
    }

    /// Calendar date, with missing month/day imputed to 1 July.
    pub fn to_naive_or_midyear(&self) -> Option<NaiveDate> {
        match (self.month, self.day) {
            (Some(m), Some(d)) => NaiveDate::from_ymd_opt(self.year, m, d),
            (Some(m), None) => NaiveDate::from_ymd_opt(self.year, m, 1),
            _ => NaiveDate::from_ymd_opt(self.year, 7, 1),
        }
    }

    /// Year must lie in `[1800, latest_year]`.
    pub fn is_plausible(&self, latest_year: i32) -> bool {
        (EARLIEST_YEAR..=latest_year).contains(&self.year)
    }

    pub fn latest_plausible_year() -> i32 {
        chrono::Utc::now().year() + 1
    }
}

impl fmt::Display for PubDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}", self.year)?;
        if let Some(m) = self.month {
            write!(f, "-{m:02}")?;
            if let Some(d) = self.day {
                write!(f, "-{d:02}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PubDateParseError(pub String);

impl fmt::Display for PubDateParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid publication date `{}`", self.0)
    }
}

impl std::error::Error for PubDateParseError {}

impl FromStr for PubDate {
    type Err = PubDateParseError;

    /// Accepts `YYYY`, `YYYY-MM` and `YYYY-MM-DD`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PubDateParseError(s.to_string());
        let mut parts = s.trim().split('-');
        let year = parts.next().filter(|p| p.len() == 4).ok_or_else(err)?.parse().map_err(|_| err())?;
        let month: Option<u32> = parts.next().map(|p| p.parse().map_err(|_| err())).transpose()?;
        let day: Option<u32> = parts.next().map(|p| p.parse().map_err(|_| err())).transpose()?;
        if parts.next().is_some() {
            return Err(err());
        }
        let date = PubDate { year, month, day };
        match (month, day) {
            (Some(m), Some(d)) if NaiveDate::from_ymd_opt(year, m, d).is_none() => Err(err()),
            (Some(m), None) if !(1..=12).contains(&m) => Err(err()),
            _ => Ok(date),
        }
    }
}

impl Serialize for PubDate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PubDate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

/// An OpenAlex author entity returned for a name-variant query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorCandidate {
    pub author_id: String,
    pub display_name: String,
    pub works_count: u64,
    pub queried_variant: NameVariant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkRecord {
    pub work_id: String,
    pub doi: Option<String>,
    pub title: String,
    pub publication_date: PubDate,
    pub work_type: String,
    pub oa_status_raw: Option<String>,
    pub host_venue_url: Option<String>,
    pub location_urls: Vec<String>,
    pub author_country_codes: BTreeSet<String>,
}

impl WorkRecord {
    pub fn year(&self) -> i32 {
        self.publication_date.year
    }

    pub fn is_article(&self, article_types: &[String]) -> bool {
        article_types.iter().any(|t| t.eq_ignore_ascii_case(&self.work_type))
    }

    /// Host venue URL followed by every location URL.
    pub fn all_urls(&self) -> impl Iterator<Item = &str> {
        self.host_venue_url.iter().chain(self.location_urls.iter()).map(String::as_str)
    }
}
