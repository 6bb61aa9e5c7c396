//! Decides which harvested author entities belong to a researcher, using the
//! display name and the share of the entity's works affiliated with the
//! target country.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::namekit::{names_match, AccentLexicon};
use crate::records::{AuthorCandidate, WorkRecord};
use crate::roster::Researcher;

/// How works without any affiliation country count toward the share.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MissingCountryPolicy {
    /// Excluded from the denominator.
    #[default]
    Neutral,
    /// Kept in the denominator as non-matching.
    Foreign,
}

impl std::str::FromStr for MissingCountryPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "neutral" => Ok(Self::Neutral),
            "foreign" => Ok(Self::Foreign),
            other => Err(format!("unknown missing-country policy `{other}` (neutral|foreign)")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DisambiguationError {
    #[error("match_percentage {0} outside [0, 1]")]
    Threshold(f64),
    #[error("country code `{0}` is not a two-letter ISO code")]
    Country(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisambiguationConfig {
    pub country_code: String,
    pub match_percentage: f64,
    pub count_missing_country_as: MissingCountryPolicy,
}

impl Default for DisambiguationConfig {
    fn default() -> Self {
        DisambiguationConfig {
            country_code: "AR".into(),
            match_percentage: 0.5,
            count_missing_country_as: MissingCountryPolicy::Neutral,
        }
    }
}

impl DisambiguationConfig {
    pub fn new(country_code: &str, match_percentage: f64) -> Result<Self, DisambiguationError> {
        let cfg = DisambiguationConfig {
            country_code: country_code.trim().to_ascii_uppercase(),
            match_percentage,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DisambiguationError> {
        if !(0.0..=1.0).contains(&self.match_percentage) {
            return Err(DisambiguationError::Threshold(self.match_percentage));
        }
        if self.country_code.len() != 2 || !self.country_code.chars().all(|c| c.is_ascii_alphabetic()) {
            return Err(DisambiguationError::Country(self.country_code.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DecisionReason {
    PassedThreshold,
    BelowThreshold,
    NoCountryEvidence,
    NameMismatch,
}

impl fmt::Display for DecisionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DecisionReason::PassedThreshold => "PassedThreshold",
            DecisionReason::BelowThreshold => "BelowThreshold",
            DecisionReason::NoCountryEvidence => "NoCountryEvidence",
            DecisionReason::NameMismatch => "NameMismatch",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceDecision {
    pub accepted: bool,
    pub country_share: f64,
    pub works_with_country: usize,
    pub works_total: usize,
    /// Works that entered the share's denominator.
    pub works_considered: usize,
    pub reason: DecisionReason,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountryShare {
    pub share: f64,
    pub with_country: usize,
    pub considered: usize,
}

pub fn country_share(works: &[WorkRecord], cc: &str, policy: MissingCountryPolicy) -> CountryShare {
    let mut with_country = 0;
    let mut considered = 0;
    for w in works {
        if w.author_country_codes.is_empty() && policy == MissingCountryPolicy::Neutral {
            continue;
        }
        considered += 1;
        if w.author_country_codes.iter().any(|c| c.eq_ignore_ascii_case(cc)) {
            with_country += 1;
        }
    }
    let share = if considered == 0 { 0.0 } else { with_country as f64 / considered as f64 };
    CountryShare { share, with_country, considered }
}

/// Accepts a candidate when its display name matches the researcher, some
/// work carries country evidence, and the country share reaches the
/// threshold. Rejection reasons take precedence in that same order.
pub fn accept_author(
    candidate: &AuthorCandidate,
    candidate_works: &[WorkRecord],
    r: &Researcher,
    cfg: &DisambiguationConfig,
    lex: &AccentLexicon,
) -> AcceptanceDecision {
    let cs = country_share(candidate_works, &cfg.country_code, cfg.count_missing_country_as);
    let reason = if !names_match(&candidate.display_name, r, lex).matched {
        DecisionReason::NameMismatch
    } else if cs.considered == 0 {
        DecisionReason::NoCountryEvidence
    } else if cs.share >= cfg.match_percentage {
        DecisionReason::PassedThreshold
    } else {
        DecisionReason::BelowThreshold
    };
    AcceptanceDecision {
        accepted: reason == DecisionReason::PassedThreshold,
        country_share: cs.share,
        works_with_country: cs.with_country,
        works_total: candidate_works.len(),
        works_considered: cs.considered,
        reason,
    }
}

/// Works credited to one researcher after merging every accepted entity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Attribution {
    pub researcher_id: String,
    pub works: BTreeMap<String, WorkRecord>,
}

impl Attribution {
    pub fn pairs(&self) -> BTreeSet<(String, String)> {
        self.works.keys().map(|w| (self.researcher_id.clone(), w.clone())).collect()
    }

    pub fn len(&self) -> usize {
        self.works.len()
    }

    pub fn is_empty(&self) -> bool {
        self.works.is_empty()
    }
}

/// Union of the accepted entities' works, deduplicated by work id. When two
/// entities list the same work, the first occurrence wins.
pub fn merge_accepted(researcher: &Researcher, accepted: &[(AuthorCandidate, Vec<WorkRecord>)]) -> Attribution {
    let mut works = BTreeMap::new();
    for (_, ws) in accepted {
        for w in ws {
            works.entry(w.work_id.clone()).or_insert_with(|| w.clone());
        }
    }
    Attribution { researcher_id: researcher.id.clone(), works }
}

/// One audit line: `researcher_id<TAB>author_id<TAB>reason<TAB>share<TAB>considered`.
pub fn audit_line(researcher_id: &str, author_id: &str, d: &AcceptanceDecision) -> String {
    format!("{researcher_id}\t{author_id}\t{}\t{:.6}\t{}", d.reason, d.country_share, d.works_considered)
}
