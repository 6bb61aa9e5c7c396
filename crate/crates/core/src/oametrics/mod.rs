//! Access-mode and repository classification, and the aggregates built on
//! them: coverage by area, yearly status and repository shares, period
//! totals, and per-area / per-discipline breakdowns.

mod repo;
pub mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{unique_works, AttributedCorpus, PeriodSlice};
use crate::records::WorkRecord;
use crate::roster::{Area, Researcher};

pub use repo::{classify_repo, HostRule, RepoRules, RepoRulesError, DEFAULT_REPOSITORIES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OAStatus {
    Gold,
    Green,
    Bronze,
    Hybrid,
    Closed,
    Unknown,
}

impl OAStatus {
    pub const ALL: [OAStatus; 6] =
        [OAStatus::Gold, OAStatus::Green, OAStatus::Bronze, OAStatus::Hybrid, OAStatus::Closed, OAStatus::Unknown];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_open(self) -> bool {
        matches!(self, OAStatus::Gold | OAStatus::Green | OAStatus::Bronze | OAStatus::Hybrid)
    }

    pub fn name(self) -> &'static str {
        match self {
            OAStatus::Gold => "gold",
            OAStatus::Green => "green",
            OAStatus::Bronze => "bronze",
            OAStatus::Hybrid => "hybrid",
            OAStatus::Closed => "closed",
            OAStatus::Unknown => "unknown",
        }
    }
}

impl fmt::Display for OAStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Upstream `open_access.oa_status`, case-insensitive. Anything absent or
/// unrecognised is `Unknown`.
pub fn classify_status(w: &WorkRecord) -> OAStatus {
    let Some(raw) = w.oa_status_raw.as_deref() else {
        return OAStatus::Unknown;
    };
    match raw.trim().to_ascii_lowercase().as_str() {
        "gold" => OAStatus::Gold,
        "green" => OAStatus::Green,
        "bronze" => OAStatus::Bronze,
        "hybrid" => OAStatus::Hybrid,
        "closed" => OAStatus::Closed,
        _ => OAStatus::Unknown,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RepoClass {
    ArgentineRepository,
    InternationalRepository,
    NotRepository,
}

/// Repository evidence across all of a work's URLs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RepoPresence {
    pub argentine: bool,
    pub international: bool,
}

impl RepoPresence {
    pub fn any(&self) -> bool {
        self.argentine || self.international
    }
}

pub fn repo_presence(w: &WorkRecord, rules: &RepoRules) -> RepoPresence {
    let mut p = RepoPresence::default();
    for url in w.all_urls() {
        match classify_repo(Some(url), rules) {
            RepoClass::ArgentineRepository => p.argentine = true,
            RepoClass::InternationalRepository => p.international = true,
            RepoClass::NotRepository => {}
        }
    }
    p
}

/// A percentage held in tenths, rounded half-up, e.g. `931` is 93.1%.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Percent(pub u64);

impl Percent {
    /// `100 · num / den` rounded half-up to one decimal; zero when `den = 0`.
    pub fn of(num: u64, den: u64) -> Percent {
        if den == 0 {
            return Percent(0);
        }
        let scaled = u128::from(num) * 1000;
        let den = u128::from(den);
        Percent(((2 * scaled + den) / (2 * den)) as u64)
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 10.0
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.0 / 10, self.0 % 10)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageRow {
    /// `None` for the total row.
    pub area: Option<Area>,
    pub researchers_informed: u64,
    pub articles_informed: u64,
    pub researchers_recovered: u64,
    pub articles_recovered: u64,
    pub researchers_kept: u64,
    pub articles_kept: u64,
}

impl CoverageRow {
    fn empty(area: Option<Area>) -> Self {
        CoverageRow {
            area,
            researchers_informed: 0,
            articles_informed: 0,
            researchers_recovered: 0,
            articles_recovered: 0,
            researchers_kept: 0,
            articles_kept: 0,
        }
    }

    fn add(&mut self, other: &CoverageRow) {
        self.researchers_informed += other.researchers_informed;
        self.articles_informed += other.articles_informed;
        self.researchers_recovered += other.researchers_recovered;
        self.articles_recovered += other.articles_recovered;
        self.researchers_kept += other.researchers_kept;
        self.articles_kept += other.articles_kept;
    }

    pub fn pct_researchers_recovered(&self) -> Percent {
        Percent::of(self.researchers_recovered, self.researchers_informed)
    }

    pub fn pct_articles_recovered(&self) -> Percent {
        Percent::of(self.articles_recovered, self.articles_informed)
    }

    pub fn pct_researchers_kept(&self) -> Percent {
        Percent::of(self.researchers_kept, self.researchers_informed)
    }

    pub fn pct_articles_kept(&self) -> Percent {
        Percent::of(self.articles_kept, self.articles_informed)
    }

    pub fn label(&self) -> &'static str {
        self.area.map(Area::code).unwrap_or("Total")
    }
}

/// Declared versus recovered versus retained, per area plus a total row.
///
/// A researcher counts as recovered when at least one article was
/// attributed, and as kept when they survived depuration with at least one
/// article. Areas absent from the roster get no row.
pub fn coverage_table(
    roster: &[Researcher],
    recovered: &BTreeMap<String, u64>,
    corpus: &AttributedCorpus,
) -> Vec<CoverageRow> {
    let mut kept_articles: BTreeMap<&str, u64> = BTreeMap::new();
    for (r, _) in &corpus.attributions {
        *kept_articles.entry(r.as_str()).or_default() += 1;
    }
    let mut rows: BTreeMap<Area, CoverageRow> = BTreeMap::new();
    for r in roster {
        let row = rows.entry(r.area).or_insert_with(|| CoverageRow::empty(Some(r.area)));
        let got = recovered.get(&r.id).copied().unwrap_or(0);
        let kept = if corpus.researchers_kept.contains(&r.id) {
            kept_articles.get(r.id.as_str()).copied().unwrap_or(0)
        } else {
            0
        };
        row.researchers_informed += 1;
        row.articles_informed += r.declared_articles;
        row.researchers_recovered += u64::from(got > 0);
        row.articles_recovered += got;
        row.researchers_kept += u64::from(kept > 0);
        row.articles_kept += kept;
    }
    let mut out: Vec<CoverageRow> = rows.into_values().collect();
    if !out.is_empty() {
        let mut total = CoverageRow::empty(None);
        for row in &out {
            total.add(row);
        }
        out.push(total);
    }
    out
}

/// Per-status counts in [`OAStatus::ALL`] order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StatusCounts {
    pub counts: [u64; 6],
}

impl StatusCounts {
    pub fn add(&mut self, s: OAStatus) {
        self.counts[s.index()] += 1;
    }

    pub fn get(&self, s: OAStatus) -> u64 {
        self.counts[s.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn open(&self) -> u64 {
        OAStatus::ALL.iter().filter(|s| s.is_open()).map(|s| self.get(*s)).sum()
    }

    pub fn share(&self, s: OAStatus) -> f64 {
        ratio(self.get(s), self.total())
    }

    pub fn open_share(&self) -> f64 {
        ratio(self.open(), self.total())
    }

    pub fn shares(&self) -> [f64; 6] {
        OAStatus::ALL.map(|s| self.share(s))
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearlyStatusShares {
    pub year: i32,
    pub counts: StatusCounts,
}

impl YearlyStatusShares {
    pub fn n(&self) -> u64 {
        self.counts.total()
    }

    pub fn shares(&self) -> [f64; 6] {
        self.counts.shares()
    }
}

/// Status mix of each publication year in the period. Years without works
/// are omitted.
pub fn status_timeseries(works: &[WorkRecord], period: &PeriodSlice) -> Vec<YearlyStatusShares> {
    let mut by_year: BTreeMap<i32, StatusCounts> = BTreeMap::new();
    for w in works.iter().filter(|w| period.contains(w.year())) {
        by_year.entry(w.year()).or_default().add(classify_status(w));
    }
    by_year.into_iter().map(|(year, counts)| YearlyStatusShares { year, counts }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct YearlyRepoShares {
    pub year: i32,
    pub n: u64,
    pub argentine: u64,
    pub international: u64,
    pub any: u64,
}

impl YearlyRepoShares {
    pub fn argentine_share(&self) -> f64 {
        ratio(self.argentine, self.n)
    }

    pub fn international_share(&self) -> f64 {
        ratio(self.international, self.n)
    }

    pub fn any_repo_share(&self) -> f64 {
        ratio(self.any, self.n)
    }
}

/// Share of each year's works with a copy in an Argentine repository, an
/// international one, or either. Denominator: all works of the year.
pub fn repo_timeseries(works: &[WorkRecord], period: &PeriodSlice, rules: &RepoRules) -> Vec<YearlyRepoShares> {
    let mut by_year: BTreeMap<i32, YearlyRepoShares> = BTreeMap::new();
    for w in works.iter().filter(|w| period.contains(w.year())) {
        let p = repo_presence(w, rules);
        let row = by_year.entry(w.year()).or_insert(YearlyRepoShares {
            year: w.year(),
            n: 0,
            argentine: 0,
            international: 0,
            any: 0,
        });
        row.n += 1;
        row.argentine += u64::from(p.argentine);
        row.international += u64::from(p.international);
        row.any += u64::from(p.any());
    }
    by_year.into_values().collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StatusTotals {
    pub counts: StatusCounts,
    /// Unknown-status works that also lack a DOI.
    pub unknown_without_doi: u64,
}

impl StatusTotals {
    pub fn n(&self) -> u64 {
        self.counts.total()
    }
}

pub fn summarize_totals(works: &[WorkRecord]) -> StatusTotals {
    let mut t = StatusTotals::default();
    for w in works {
        let s = classify_status(w);
        t.counts.add(s);
        if s == OAStatus::Unknown && w.doi.is_none() {
            t.unknown_without_doi += 1;
        }
    }
    t
}

/// Status mix per area and per (area, discipline) of the kept co-authors.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Breakdown {
    pub by_area: BTreeMap<Area, StatusCounts>,
    pub by_discipline: BTreeMap<(Area, String), StatusCounts>,
}

pub const UNSPECIFIED_DISCIPLINE: &str = "Unspecified";

/// A work with co-authors in several areas (or disciplines) counts once in
/// each distinct one.
pub fn discipline_breakdown(corpus: &AttributedCorpus, roster: &[Researcher], period: &PeriodSlice) -> Breakdown {
    let people: BTreeMap<&str, &Researcher> = roster.iter().map(|r| (r.id.as_str(), r)).collect();
    let authors = corpus.authors_of();
    let mut out = Breakdown::default();
    for w in unique_works(corpus).iter().filter(|w| period.contains(w.year())) {
        let status = classify_status(w);
        let mut areas = BTreeSet::new();
        let mut disciplines = BTreeSet::new();
        for rid in authors.get(w.work_id.as_str()).into_iter().flatten() {
            if let Some(r) = people.get(rid) {
                areas.insert(r.area);
                let d = r.discipline.clone().unwrap_or_else(|| UNSPECIFIED_DISCIPLINE.to_string());
                disciplines.insert((r.area, d));
            }
        }
        for a in areas {
            out.by_area.entry(a).or_default().add(status);
        }
        for d in disciplines {
            out.by_discipline.entry(d).or_default().add(status);
        }
    }
    out
}
