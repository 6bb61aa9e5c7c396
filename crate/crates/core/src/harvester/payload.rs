//! OpenAlex response bodies and their mapping onto domain records.

use std::collections::BTreeSet;

use serde::Deserialize;

use crate::records::{PubDate, WorkRecord};

#[derive(Debug, Deserialize)]
pub struct Page<T> {
    #[serde(default)]
    pub meta: Meta,
    #[serde(default = "Vec::new")]
    pub results: Vec<T>,
}

#[derive(Debug, Default, Deserialize)]
pub struct Meta {
    pub count: Option<u64>,
    pub next_cursor: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct RawAuthor {
    pub id: String,
    pub display_name: Option<String>,
    pub works_count: Option<u64>,
}

#[derive(Debug, Deserialize)]
pub struct RawWork {
    pub id: String,
    pub doi: Option<String>,
    pub title: Option<String>,
    pub display_name: Option<String>,
    pub publication_date: Option<String>,
    pub publication_year: Option<i32>,
    #[serde(rename = "type")]
    pub work_type: Option<String>,
    pub open_access: Option<RawOpenAccess>,
    pub host_venue: Option<RawUrlHolder>,
    #[serde(default)]
    pub locations: Vec<RawLocation>,
    #[serde(default)]
    pub authorships: Vec<RawAuthorship>,
}

#[derive(Debug, Deserialize)]
pub struct RawOpenAccess {
    pub oa_status: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct RawUrlHolder {
    pub url: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct RawLocation {
    pub landing_page_url: Option<String>,
    pub pdf_url: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct RawAuthorship {
    #[serde(default)]
    pub institutions: Vec<RawInstitution>,
    #[serde(default)]
    pub countries: Vec<String>,
}

#[derive(Debug, Deserialize)]
pub struct RawInstitution {
    pub country_code: Option<String>,
}

const ENTITY_PREFIX: &str = "https://openalex.org/";
const DOI_PREFIXES: [&str; 3] = ["https://doi.org/", "http://doi.org/", "doi:"];

/// `https://openalex.org/A123` → `A123`.
pub fn short_id(id: &str) -> String {
    id.trim().strip_prefix(ENTITY_PREFIX).unwrap_or(id.trim()).to_string()
}

fn clean_doi(raw: &str) -> Option<String> {
    let mut doi = raw.trim();
    for prefix in DOI_PREFIXES {
        if let Some(rest) = doi.strip_prefix(prefix) {
            doi = rest;
            break;
        }
    }
    doi.starts_with("10.").then(|| doi.to_lowercase())
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.map(|s| s.trim().to_string()).filter(|s| !s.is_empty())
}

/// Why a raw work was not turned into a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    MissingYear,
    ImplausibleYear,
    MissingId,
}

impl RawWork {
    pub fn into_record(self, latest_year: i32) -> Result<WorkRecord, SkipReason> {
        let work_id = short_id(&self.id);
        if work_id.is_empty() {
            return Err(SkipReason::MissingId);
        }
        let date = self
            .publication_date
            .as_deref()
            .and_then(|d| d.parse::<PubDate>().ok())
            .filter(|d| Some(d.year) == self.publication_year || self.publication_year.is_none())
            .or_else(|| self.publication_year.map(PubDate::year_only))
            .ok_or(SkipReason::MissingYear)?;
        if !date.is_plausible(latest_year) {
            return Err(SkipReason::ImplausibleYear);
        }

        let mut location_urls = BTreeSet::new();
        for loc in self.locations {
            location_urls.extend(non_empty(loc.landing_page_url));
            location_urls.extend(non_empty(loc.pdf_url));
        }
        let mut countries = BTreeSet::new();
        for a in self.authorships {
            countries.extend(a.countries.iter().map(|c| c.trim().to_ascii_uppercase()));
            countries.extend(
                a.institutions.into_iter().filter_map(|i| non_empty(i.country_code)).map(|c| c.to_ascii_uppercase()),
            );
        }
        countries.retain(|c| c.len() == 2);

        Ok(WorkRecord {
            work_id,
            doi: self.doi.as_deref().and_then(clean_doi),
            title: non_empty(self.title).or(non_empty(self.display_name)).unwrap_or_default(),
            publication_date: date,
            work_type: non_empty(self.work_type).unwrap_or_default(),
            oa_status_raw: non_empty(self.open_access.and_then(|o| o.oa_status)),
            host_venue_url: non_empty(self.host_venue.and_then(|h| h.url)),
            location_urls: location_urls.into_iter().collect(),
            author_country_codes: countries,
        })
    }
}

/// Byte offset of a 1-based (line, column) position in `body`.
pub fn byte_offset(body: &str, line: usize, column: usize) -> usize {
    let line_start: usize = body.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (line_start + column.saturating_sub(1)).min(body.len())
}
