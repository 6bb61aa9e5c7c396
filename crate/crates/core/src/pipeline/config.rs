use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use sha2::{Digest, Sha256};

use crate::corpus::{DiscrepancyRule, DEFAULT_ARTICLE_TYPES};
use crate::disambiguator::MissingCountryPolicy;
use crate::harvester::{HarvestConfig, DEFAULT_BASE_URL};
use crate::impact::{CovarianceKind, ImpactWindow};

use super::PipelineError;

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// Replay recorded responses from this directory.
    Fixtures(PathBuf),
    /// Query the API, caching responses under `cache_dir` (default `{out}/http_cache`).
    Live { cache_dir: Option<PathBuf> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub roster_path: PathBuf,
    pub source: Source,
    pub base_url: String,
    pub mailto: Option<String>,
    pub max_requests_per_second: f64,
    pub country_code: String,
    pub match_percentage: f64,
    pub missing_country: MissingCountryPolicy,
    pub discrepancy_threshold: f64,
    pub discrepancy_rule: DiscrepancyRule,
    pub article_types: Vec<String>,
    pub window: ImpactWindow,
    pub output_dir: PathBuf,
    pub national_domains: Vec<String>,
    pub repo_allowlist_path: Option<PathBuf>,
    pub lexicon_path: Option<PathBuf>,
    pub include_month_effects: bool,
    pub covariance: CovarianceKind,
    pub concurrency: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            roster_path: PathBuf::from("roster.csv"),
            source: Source::Live { cache_dir: None },
            base_url: DEFAULT_BASE_URL.to_string(),
            mailto: None,
            max_requests_per_second: 8.0,
            country_code: "AR".into(),
            match_percentage: 0.5,
            missing_country: MissingCountryPolicy::Neutral,
            discrepancy_threshold: 0.5,
            discrepancy_rule: DiscrepancyRule::Symmetric,
            article_types: DEFAULT_ARTICLE_TYPES.iter().map(|s| s.to_string()).collect(),
            window: ImpactWindow::default(),
            output_dir: PathBuf::from("out"),
            national_domains: vec![".ar".into()],
            repo_allowlist_path: None,
            lexicon_path: None,
            include_month_effects: true,
            covariance: CovarianceKind::Classical,
            concurrency: 4,
        }
    }
}

fn bad(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(msg.into())
}

pub fn parse_date(key: &str, v: &str) -> Result<NaiveDate, PipelineError> {
    NaiveDate::parse_from_str(v.trim(), "%Y-%m-%d")
        .map_err(|_| bad(format!("{key}: `{v}` is not an ISO date (YYYY-MM-DD)")))
}

pub fn parse_fraction(key: &str, v: &str) -> Result<f64, PipelineError> {
    match v.trim().parse::<f64>() {
        Ok(x) if (0.0..=1.0).contains(&x) => Ok(x),
        _ => Err(bad(format!("{key}: `{v}` is not a fraction in [0, 1]"))),
    }
}

pub fn parse_switch(key: &str, v: &str) -> Result<bool, PipelineError> {
    match v.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(bad(format!("{key}: `{v}` is not on/off"))),
    }
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

impl RunConfig {
    /// Reads a `key = value` file over the defaults. Relative paths are
    /// resolved against the file's directory.
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read config file {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let mut cfg = RunConfig::default();
        cfg.apply_kv(&raw, base)?;
        Ok(cfg)
    }

    pub fn apply_kv(&mut self, raw: &str, base: &Path) -> Result<(), PipelineError> {
        for (n, line) in raw.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| bad(format!("config line {}: expected `key = value`", n + 1)))?;
            self.set(k.trim(), v.trim(), base)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, v: &str, base: &Path) -> Result<(), PipelineError> {
        let path = |v: &str| base.join(v);
        match key {
            "roster" | "roster_path" => self.roster_path = path(v),
            "fixtures" | "fixture_dir" => self.source = Source::Fixtures(path(v)),
            "live" => {
                if parse_switch(key, v)? {
                    self.source = Source::Live { cache_dir: None };
                }
            }
            "cache_dir" => self.source = Source::Live { cache_dir: Some(path(v)) },
            "base_url" => self.base_url = v.to_string(),
            "mailto" => self.mailto = Some(v.to_string()).filter(|m| !m.is_empty()),
            "max_requests_per_second" => {
                self.max_requests_per_second = v.parse().map_err(|_| bad(format!("{key}: `{v}` is not a number")))?
            }
            "country" | "country_code" => self.country_code = v.to_ascii_uppercase(),
            "match_percentage" => self.match_percentage = parse_fraction(key, v)?,
            "count_missing_country_as" => self.missing_country = v.parse().map_err(|e: String| bad(e))?,
            "discrepancy_threshold" => self.discrepancy_threshold = parse_fraction(key, v)?,
            "discrepancy_rule" => {
                self.discrepancy_rule = match v {
                    "symmetric" => DiscrepancyRule::Symmetric,
                    "under_only" => DiscrepancyRule::UnderOnly,
                    _ => return Err(bad(format!("{key}: `{v}` is not symmetric/under_only"))),
                }
            }
            "article_types" => self.article_types = list(v),
            "law_date" => self.window.law_date = parse_date(key, v)?,
            "window_start" => self.window.window_start = parse_date(key, v)?,
            "cutoff" => self.window.cutoff = parse_date(key, v)?,
            "out" | "output_dir" => self.output_dir = path(v),
            "national_domains" => self.national_domains = list(v),
            "repo_allowlist" | "repo_allowlist_path" => self.repo_allowlist_path = Some(path(v)),
            "lexicon" | "lexicon_path" => self.lexicon_path = Some(path(v)),
            "month_effects" | "include_month_effects" => self.include_month_effects = parse_switch(key, v)?,
            "robust_se" => {
                self.covariance = if parse_switch(key, v)? { CovarianceKind::Robust } else { CovarianceKind::Classical }
            }
            "concurrency" => {
                self.concurrency = match v.parse::<usize>() {
                    Ok(c) if c >= 1 => c,
                    _ => return Err(bad(format!("{key}: `{v}` is not a positive integer"))),
                }
            }
            _ => return Err(bad(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !self.roster_path.is_file() {
            return Err(bad(format!("roster {} not found", self.roster_path.display())));
        }
        if let Source::Fixtures(dir) = &self.source {
            if !dir.is_dir() {
                return Err(bad(format!("fixture directory {} not found", dir.display())));
            }
        }
        for (name, p) in [("lexicon", &self.lexicon_path), ("repository list", &self.repo_allowlist_path)] {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(bad(format!("{name} {} not found", p.display())));
                }
            }
        }
        if self.country_code.len() != 2 || !self.country_code.chars().all(|c| c.is_ascii_alphabetic()) {
            return Err(bad(format!("country code `{}` is not ISO-3166 alpha-2", self.country_code)));
        }
        if self.concurrency == 0 {
            return Err(bad("concurrency must be at least 1"));
        }
        self.window.validate().map_err(|e| bad(e.to_string()))?;
        self.harvest_config().validate().map_err(|e| bad(e.to_string()))
    }

    pub fn harvest_config(&self) -> HarvestConfig {
        let mut h = match &self.source {
            Source::Fixtures(dir) => HarvestConfig::fixture(dir.clone()),
            Source::Live { cache_dir } => {
                HarvestConfig::live(Some(cache_dir.clone().unwrap_or_else(|| self.output_dir.join("http_cache"))))
            }
        };
        h.base_url = self.base_url.clone();
        h.mailto = self.mailto.clone();
        h.max_requests_per_second = self.max_requests_per_second;
        h.apply_env()
    }

    /// Hash of every setting that affects results, plus the contents of the
    /// input files. Paths, output location and concurrency are excluded so
    /// the same analysis hashes the same wherever it runs.
    pub fn hash(&self) -> Result<String, PipelineError> {
        let mut h = Sha256::new();
        let mut line = |k: &str, v: &str| {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        };
        let file_digest = |p: &Path| -> Result<String, PipelineError> {
            let bytes =
                std::fs::read(p).map_err(|source| PipelineError::Io { path: p.display().to_string(), source })?;
            Ok(hex::encode(Sha256::digest(&bytes)))
        };
        line("roster", &file_digest(&self.roster_path)?);
        line(
            "lexicon",
            &self.lexicon_path.as_deref().map(file_digest).transpose()?.unwrap_or_else(|| "bundled".into()),
        );
        line(
            "repo_allowlist",
            &self.repo_allowlist_path.as_deref().map(file_digest).transpose()?.unwrap_or_else(|| "bundled".into()),
        );
        line("country_code", &self.country_code);
        line("match_percentage", &self.match_percentage.to_string());
        line("count_missing_country_as", &format!("{:?}", self.missing_country));
        line("discrepancy_threshold", &self.discrepancy_threshold.to_string());
        line("discrepancy_rule", &format!("{:?}", self.discrepancy_rule));
        line("article_types", &self.article_types.join(","));
        line("window_start", &self.window.window_start.to_string());
        line("law_date", &self.window.law_date.to_string());
        line("cutoff", &self.window.cutoff.to_string());
        line("national_domains", &self.national_domains.join(","));
        line("include_month_effects", &self.include_month_effects.to_string());
        line("covariance", &format!("{:?}", self.covariance));
        Ok(hex::encode(h.finalize()))
    }
}
