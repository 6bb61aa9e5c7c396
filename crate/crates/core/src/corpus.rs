//! Analytic corpus: article filter, declared-versus-recovered depuration,
//! unique-work deduplication and study-period slicing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::disambiguator::Attribution;
use crate::records::WorkRecord;
use crate::roster::Researcher;

pub const DEFAULT_ARTICLE_TYPES: [&str; 2] = ["journal-article", "article"];

/// Which side of the declared/recovered gap the depuration rule checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DiscrepancyRule {
    /// `|declared − recovered| ≤ t · declared`.
    #[default]
    Symmetric,
    /// Only under-recovery counts: `declared − recovered ≤ t · declared`.
    UnderOnly,
}

impl std::str::FromStr for DiscrepancyRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "symmetric" => Ok(Self::Symmetric),
            "under-only" | "under_only" | "one-sided" => Ok(Self::UnderOnly),
            other => Err(format!("unknown discrepancy rule `{other}` (symmetric|under-only)")),
        }
    }
}

/// Keeps a researcher when the recovered count is within `threshold` of the
/// declared count, measured as a fraction of the declared count. A
/// researcher declaring zero articles is kept only if nothing was recovered.
pub fn discrepancy_keep(declared: u64, recovered: u64, threshold: f64) -> bool {
    discrepancy_keep_with(declared, recovered, threshold, DiscrepancyRule::Symmetric)
}

pub fn discrepancy_keep_with(declared: u64, recovered: u64, threshold: f64, rule: DiscrepancyRule) -> bool {
    if declared == 0 {
        return recovered == 0;
    }
    let gap = match rule {
        DiscrepancyRule::Symmetric => declared.abs_diff(recovered),
        DiscrepancyRule::UnderOnly => declared.saturating_sub(recovered),
    };
    gap as f64 <= threshold * declared as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub threshold: f64,
    pub article_types: Vec<String>,
    pub rule: DiscrepancyRule,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            threshold: 0.5,
            article_types: DEFAULT_ARTICLE_TYPES.iter().map(|s| s.to_string()).collect(),
            rule: DiscrepancyRule::Symmetric,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributedCorpus {
    /// `(researcher_id, work_id)` pairs of kept researchers.
    pub attributions: BTreeSet<(String, String)>,
    pub works: BTreeMap<String, WorkRecord>,
    pub researchers_kept: BTreeSet<String>,
    pub researchers_dropped: BTreeSet<String>,
    /// Articles recovered per roster researcher, before depuration.
    pub recovered: BTreeMap<String, u64>,
}

impl AttributedCorpus {
    /// Number of kept researchers credited with each work.
    pub fn attribution_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for (_, w) in &self.attributions {
            *counts.entry(w.as_str()).or_default() += 1;
        }
        counts
    }

    /// Kept researchers credited with each work.
    pub fn authors_of(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut by_work: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (r, w) in &self.attributions {
            by_work.entry(w.as_str()).or_default().push(r.as_str());
        }
        by_work
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        for (r, w) in &self.attributions {
            if !self.researchers_kept.contains(r) {
                return Err(format!("attribution ({r}, {w}) references a researcher that was not kept"));
            }
            if !self.works.contains_key(w) {
                return Err(format!("attribution ({r}, {w}) references a missing work"));
            }
        }
        if let Some(r) = self.researchers_kept.intersection(&self.researchers_dropped).next() {
            return Err(format!("researcher {r} is both kept and dropped"));
        }
        Ok(())
    }
}

/// Filters each researcher's works to articles, applies the depuration rule
/// and stores every surviving work once.
pub fn build_corpus(
    roster: &[Researcher],
    attributed: &BTreeMap<String, Attribution>,
    cfg: &CorpusConfig,
) -> AttributedCorpus {
    let mut corpus = AttributedCorpus::default();
    for r in roster {
        let articles: Vec<&WorkRecord> = attributed
            .get(&r.id)
            .map(|a| a.works.values().filter(|w| w.is_article(&cfg.article_types)).collect())
            .unwrap_or_default();
        let recovered = articles.len() as u64;
        corpus.recovered.insert(r.id.clone(), recovered);
        if !discrepancy_keep_with(r.declared_articles, recovered, cfg.threshold, cfg.rule) {
            corpus.researchers_dropped.insert(r.id.clone());
            continue;
        }
        corpus.researchers_kept.insert(r.id.clone());
        for w in articles {
            corpus.attributions.insert((r.id.clone(), w.work_id.clone()));
            corpus.works.entry(w.work_id.clone()).or_insert_with(|| w.clone());
        }
    }
    corpus
}

/// One record per distinct attributed work, ordered by date then id.
pub fn unique_works(c: &AttributedCorpus) -> Vec<WorkRecord> {
    let ids: BTreeSet<&str> = c.attributions.iter().map(|(_, w)| w.as_str()).collect();
    let mut works: Vec<WorkRecord> = ids.into_iter().filter_map(|id| c.works.get(id).cloned()).collect();
    sort_works(&mut works);
    works
}

pub fn sort_works(works: &mut [WorkRecord]) {
    works.sort_by(|a, b| (a.publication_date, &a.work_id).cmp(&(b.publication_date, &b.work_id)));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PeriodLabel {
    Full1953_2021,
    Pre2006_2013,
    Post2014_2021,
    Window2006_2021,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodSlice {
    pub label: PeriodLabel,
    pub start_year: i32,
    pub end_year: i32,
}

impl PeriodSlice {
    pub const FULL: PeriodSlice = PeriodSlice { label: PeriodLabel::Full1953_2021, start_year: 1953, end_year: 2021 };
    pub const PRE: PeriodSlice = PeriodSlice { label: PeriodLabel::Pre2006_2013, start_year: 2006, end_year: 2013 };
    pub const POST: PeriodSlice = PeriodSlice { label: PeriodLabel::Post2014_2021, start_year: 2014, end_year: 2021 };
    pub const WINDOW: PeriodSlice =
        PeriodSlice { label: PeriodLabel::Window2006_2021, start_year: 2006, end_year: 2021 };
    pub const ALL: [PeriodSlice; 4] = [Self::FULL, Self::PRE, Self::POST, Self::WINDOW];

    pub fn contains(&self, year: i32) -> bool {
        (self.start_year..=self.end_year).contains(&year)
    }
}

impl fmt::Display for PeriodSlice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start_year, self.end_year)
    }
}

/// Works published within the period, order preserved.
pub fn slice(works: &[WorkRecord], p: &PeriodSlice) -> Vec<WorkRecord> {
    works.iter().filter(|w| p.contains(w.year())).cloned().collect()
}

fn tsv_field(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// `corpus.tsv`: one row per unique work, sorted like [`unique_works`].
pub fn corpus_tsv(c: &AttributedCorpus) -> String {
    let counts = c.attribution_counts();
    let mut out = String::from("work_id\tdoi\tyear\toa_status_raw\thost_venue_url\tattributed_researchers\n");
    for w in unique_works(c) {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            tsv_field(&w.work_id),
            tsv_field(w.doi.as_deref().unwrap_or("")),
            w.year(),
            tsv_field(w.oa_status_raw.as_deref().unwrap_or("")),
            tsv_field(w.host_venue_url.as_deref().unwrap_or("")),
            counts.get(w.work_id.as_str()).copied().unwrap_or(0),
        ));
    }
    out
}
