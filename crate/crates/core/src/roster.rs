//! Researcher roster ingest.
//!
//! The roster is a UTF-8, comma-delimited file with a mandatory header:
//! `id,given_names,surnames,area,discipline,declared_articles`. The
//! `discipline` column is optional; every other column is required.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const REQUIRED_COLUMNS: [&str; 5] = ["id", "given_names", "surnames", "area", "declared_articles"];

/// Institutional subject area. `Unspecified` collects researchers whose
/// area string is missing or not recognised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Area {
    #[serde(rename = "CAIM")]
    Caim,
    #[serde(rename = "CBS")]
    Cbs,
    #[serde(rename = "CEN")]
    Cen,
    #[serde(rename = "CSH")]
    Csh,
    Unspecified,
}

impl Area {
    pub const ALL: [Area; 5] = [Area::Caim, Area::Cbs, Area::Cen, Area::Csh, Area::Unspecified];

    pub fn code(self) -> &'static str {
        match self {
            Area::Caim => "CAIM",
            Area::Cbs => "CBS",
            Area::Cen => "CEN",
            Area::Csh => "CSH",
            Area::Unspecified => "Unspecified",
        }
    }

    /// Case-insensitive; anything unknown maps to `Unspecified`.
    pub fn parse_lenient(s: &str) -> Area {
        match s.trim().to_ascii_uppercase().as_str() {
            "CAIM" => Area::Caim,
            "CBS" => Area::Cbs,
            "CEN" => Area::Cen,
            "CSH" => Area::Csh,
            _ => Area::Unspecified,
        }
    }
}

impl fmt::Display for Area {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Area {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Area::parse_lenient(s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Researcher {
    pub id: String,
    pub given_names: String,
    pub surnames: String,
    pub area: Area,
    pub discipline: Option<String>,
    pub declared_articles: u64,
}

#[derive(Debug, Error)]
pub enum RosterError {
    #[error("roster schema error: missing required column `{0}`")]
    MissingColumn(String),
    #[error("duplicate researcher id `{0}`")]
    DuplicateId(String),
    #[error("row {row}: declared_articles `{value}` is not a non-negative integer")]
    InvalidCount { row: u64, value: String },
    #[error("row {row}: {field} is empty")]
    EmptyField { row: u64, field: &'static str },
    #[error("malformed roster: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot read roster {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub fn read_roster(path: &Path) -> Result<Vec<Researcher>, RosterError> {
    let raw =
        std::fs::read_to_string(path).map_err(|source| RosterError::Io { path: path.display().to_string(), source })?;
    parse_roster(&raw)
}

pub fn parse_roster(raw: &str) -> Result<Vec<Researcher>, RosterError> {
    let raw = raw.strip_prefix('\u{feff}').unwrap_or(raw);
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::Headers).from_reader(raw.as_bytes());

    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = column(name).ok_or_else(|| RosterError::MissingColumn(name.to_string()))?;
    }
    let [id_col, given_col, surname_col, area_col, count_col] = idx;
    let discipline_col = column("discipline");

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("").trim();

        let id = field(id_col);
        if id.is_empty() {
            return Err(RosterError::EmptyField { row, field: "id" });
        }
        let surnames = field(surname_col);
        if surnames.is_empty() {
            return Err(RosterError::EmptyField { row, field: "surnames" });
        }
        let count_raw = field(count_col);
        let declared_articles =
            count_raw.parse::<u64>().map_err(|_| RosterError::InvalidCount { row, value: count_raw.to_string() })?;
        if !seen.insert(id.to_string()) {
            return Err(RosterError::DuplicateId(id.to_string()));
        }
        let discipline = discipline_col.map(field).filter(|d| !d.is_empty()).map(str::to_string);

        out.push(Researcher {
            id: id.to_string(),
            given_names: field(given_col).to_string(),
            surnames: surnames.to_string(),
            area: Area::parse_lenient(field(area_col)),
            discipline,
            declared_articles,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RosterSummary {
    pub researchers_by_area: BTreeMap<Area, u64>,
    pub articles_by_area: BTreeMap<Area, u64>,
    pub total_researchers: u64,
    pub total_articles: u64,
}

pub fn summarize_roster(roster: &[Researcher]) -> RosterSummary {
    let mut summary = RosterSummary::default();
    for r in roster {
        *summary.researchers_by_area.entry(r.area).or_default() += 1;
        *summary.articles_by_area.entry(r.area).or_default() += r.declared_articles;
    }
    summary.total_researchers = summary.researchers_by_area.values().sum();
    summary.total_articles = summary.articles_by_area.values().sum();
    summary
}
