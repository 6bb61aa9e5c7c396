//! Stage orchestration. Each stage reads the previous stage's snapshot from
//! the output directory and writes its own:
//!
//! ```text
//! out/harvest/researchers/{id}.json   candidates and works per researcher
//! out/harvest/summary.json
//! out/corpus/{corpus.json, corpus.tsv, audit.tsv}
//! out/reports/*.csv, run_metadata.json
//! out/impact/{impact_report.json, weekly_series.csv}
//! ```
//!
//! Every file is a pure function of the configuration and the inputs, so
//! re-running a stage rewrites identical bytes.

mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tracing::{info, warn};

use crate::corpus::{build_corpus, corpus_tsv, unique_works, AttributedCorpus, CorpusConfig, PeriodSlice};
use crate::disambiguator::{accept_author, audit_line, merge_accepted, Attribution, DisambiguationConfig};
use crate::harvester::{Clock, HarvestError, Harvester, SystemClock, Transport};
use crate::impact::{
    build_observations_with_rules, fit_segmented, weekly_deposit_series, weekly_series_csv, FitOptions, ImpactError,
    RegressionFit,
};
use crate::namekit::{generate_variants, names_match, AccentLexicon, LexiconError, NameVariant};
use crate::oametrics::{
    coverage_table, discipline_breakdown, repo_timeseries, report, status_timeseries, summarize_totals, RepoRules,
    RepoRulesError,
};
use crate::records::{AuthorCandidate, WorkRecord};
use crate::roster::{read_roster, Researcher, RosterError};

pub use config::{parse_date, parse_fraction, parse_switch, RunConfig, Source};

pub const REPORT_FILES: [&str; 6] =
    ["coverage.csv", "status_by_year.csv", "repos_by_year.csv", "totals.csv", "by_area.csv", "by_discipline.csv"];
pub const SOURCE_DATE_EPOCH: &str = "SOURCE_DATE_EPOCH";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Roster(#[from] RosterError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    RepoRules(#[from] RepoRulesError),
    #[error("harvest failed for researcher {researcher_id}: {source}")]
    Harvest {
        researcher_id: String,
        #[source]
        source: HarvestError,
    },
    #[error(transparent)]
    Harvester(#[from] HarvestError),
    #[error("missing {what} at {path}; run the `{stage}` stage first")]
    MissingSnapshot { what: String, path: String, stage: &'static str },
    #[error(transparent)]
    Impact(#[from] ImpactError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed snapshot {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl PipelineError {
    /// 2 for configuration and input errors, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_)
            | PipelineError::Roster(_)
            | PipelineError::Lexicon(_)
            | PipelineError::RepoRules(_)
            | PipelineError::Impact(ImpactError::Config(_)) => 2,
            _ => 1,
        }
    }
}

/// One candidate entity found for a researcher. Works are fetched only for
/// candidates whose display name matches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateHarvest {
    pub candidate: AuthorCandidate,
    pub name_match: bool,
    pub works: Vec<WorkRecord>,
    pub skipped_works: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResearcherHarvest {
    pub researcher_id: String,
    pub variants: Vec<NameVariant>,
    pub candidates: Vec<CandidateHarvest>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestSummary {
    pub researchers: usize,
    pub candidates: usize,
    pub name_matched_candidates: usize,
    pub works: usize,
    pub skipped_works: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BuildSummary {
    pub researchers_kept: usize,
    pub researchers_dropped: usize,
    pub attributions: usize,
    pub unique_works: usize,
}

/// File name for a researcher snapshot. Ids that are not plain get a hash
/// suffix so distinct ids never collide.
pub fn snapshot_name(id: &str) -> String {
    let clean: String =
        id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
    if clean == id && !id.is_empty() {
        format!("{id}.json")
    } else {
        format!("{clean}-{}.json", &hex::encode(Sha256::digest(id.as_bytes()))[..8])
    }
}

/// Rounds to six significant digits; non-finite values become null.
pub fn sig6(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    json!(rounded)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.display().to_string(), source }
}

fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(path, contents).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|source| PipelineError::Json { path: path.display().to_string(), source })?;
    s.push('\n');
    write_file(path, &s)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str, stage: &'static str) -> Result<T, PipelineError> {
    let raw = match std::fs::read_to_string(path) {
        Ok(r) => r,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(PipelineError::MissingSnapshot {
                what: what.to_string(),
                path: path.display().to_string(),
                stage,
            })
        }
        Err(e) => return Err(io_err(path)(e)),
    };
    serde_json::from_str(&raw).map_err(|source| PipelineError::Json { path: path.display().to_string(), source })
}

pub struct Pipeline {
    cfg: RunConfig,
    transport: Option<Arc<dyn Transport>>,
    clock: Arc<dyn Clock>,
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Self {
        Pipeline { cfg, transport: None, clock: Arc::new(SystemClock::new()) }
    }

    /// Replaces the HTTP client used in live mode.
    pub fn with_transport(mut self, transport: Arc<dyn Transport>) -> Self {
        self.transport = Some(transport);
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    fn out(&self, parts: &[&str]) -> PathBuf {
        parts.iter().fold(self.cfg.output_dir.clone(), |p, s| p.join(s))
    }

    fn roster(&self) -> Result<Vec<Researcher>, PipelineError> {
        Ok(read_roster(&self.cfg.roster_path)?)
    }

    fn lexicon(&self) -> Result<AccentLexicon, PipelineError> {
        Ok(match &self.cfg.lexicon_path {
            Some(p) => AccentLexicon::load(p)?,
            None => AccentLexicon::bundled(),
        })
    }

    fn repo_rules(&self) -> Result<RepoRules, PipelineError> {
        Ok(match &self.cfg.repo_allowlist_path {
            Some(p) => RepoRules::load(p, &self.cfg.national_domains)?,
            None => RepoRules::default().with_national_suffixes(&self.cfg.national_domains),
        })
    }

    fn thread_pool(&self) -> Result<rayon::ThreadPool, PipelineError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.cfg.concurrency)
            .build()
            .map_err(|e| PipelineError::Config(format!("cannot start worker pool: {e}")))
    }

    pub fn harvest(&self) -> Result<HarvestSummary, PipelineError> {
        self.cfg.validate()?;
        let roster = self.roster()?;
        let lex = self.lexicon()?;
        let hcfg = self.cfg.harvest_config();
        let transport = match (&self.transport, &self.cfg.source) {
            (Some(t), Source::Live { .. }) => Some(t.clone()),
            (None, Source::Live { .. }) => Some(Arc::new(
                crate::harvester::HttpTransport::new(hcfg.timeout).map_err(|e| PipelineError::Config(e.0))?,
            ) as Arc<dyn Transport>),
            (_, Source::Fixtures(_)) => None,
        };
        let harvester = Harvester::with_parts(hcfg, transport, self.clock.clone())?;

        let pool = self.thread_pool()?;
        let results: Vec<Result<ResearcherHarvest, PipelineError>> = pool.install(|| {
            roster
                .par_iter()
                .map(|r| {
                    harvest_researcher(&harvester, r, &lex)
                        .map_err(|source| PipelineError::Harvest { researcher_id: r.id.clone(), source })
                })
                .collect()
        });
        // keep whatever was recorded, even when a researcher failed
        harvester.flush()?;

        let mut summary = HarvestSummary { researchers: roster.len(), ..Default::default() };
        let mut harvested = Vec::with_capacity(results.len());
        for res in results {
            harvested.push(res?);
        }
        let dir = self.out(&["harvest", "researchers"]);
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(io_err(&dir))?;
        }
        for h in &harvested {
            summary.candidates += h.candidates.len();
            for c in &h.candidates {
                summary.name_matched_candidates += usize::from(c.name_match);
                summary.works += c.works.len();
                summary.skipped_works += c.skipped_works;
            }
            write_json(&dir.join(snapshot_name(&h.researcher_id)), h)?;
        }
        write_json(&self.out(&["harvest", "summary.json"]), &summary)?;
        let stats = harvester.stats();
        info!(
            researchers = summary.researchers,
            candidates = summary.candidates,
            works = summary.works,
            network_requests = stats.network_requests,
            replayed = stats.replayed,
            "harvest complete"
        );
        Ok(summary)
    }

    pub fn build(&self) -> Result<BuildSummary, PipelineError> {
        self.cfg.validate()?;
        let roster = self.roster()?;
        let lex = self.lexicon()?;
        let dcfg = DisambiguationConfig {
            count_missing_country_as: self.cfg.missing_country,
            ..DisambiguationConfig::new(&self.cfg.country_code, self.cfg.match_percentage)
                .map_err(|e| PipelineError::Config(e.to_string()))?
        };
        let dir = self.out(&["harvest", "researchers"]);
        let harvests: Vec<ResearcherHarvest> = roster
            .iter()
            .map(|r| read_json(&dir.join(snapshot_name(&r.id)), &format!("harvest snapshot for {}", r.id), "harvest"))
            .collect::<Result<_, _>>()?;

        let mut audit = String::from("researcher_id\tauthor_id\treason\tshare\tconsidered\n");
        let mut attributed: BTreeMap<String, Attribution> = BTreeMap::new();
        for (r, h) in roster.iter().zip(&harvests) {
            let mut accepted = Vec::new();
            for c in &h.candidates {
                let d = accept_author(&c.candidate, &c.works, r, &dcfg, &lex);
                audit.push_str(&audit_line(&r.id, &c.candidate.author_id, &d));
                audit.push('\n');
                if d.accepted {
                    accepted.push((c.candidate.clone(), c.works.clone()));
                }
            }
            attributed.insert(r.id.clone(), merge_accepted(r, &accepted));
        }

        let ccfg = CorpusConfig {
            threshold: self.cfg.discrepancy_threshold,
            article_types: self.cfg.article_types.clone(),
            rule: self.cfg.discrepancy_rule,
        };
        let corpus = build_corpus(&roster, &attributed, &ccfg);
        corpus.check_invariants().map_err(PipelineError::Config)?;
        write_json(&self.out(&["corpus", "corpus.json"]), &corpus)?;
        write_file(&self.out(&["corpus", "corpus.tsv"]), &corpus_tsv(&corpus))?;
        write_file(&self.out(&["corpus", "audit.tsv"]), &audit)?;
        let summary = BuildSummary {
            researchers_kept: corpus.researchers_kept.len(),
            researchers_dropped: corpus.researchers_dropped.len(),
            attributions: corpus.attributions.len(),
            unique_works: corpus.works.len(),
        };
        info!(?summary, "corpus built");
        Ok(summary)
    }

    fn corpus(&self) -> Result<AttributedCorpus, PipelineError> {
        read_json(&self.out(&["corpus", "corpus.json"]), "corpus snapshot", "build")
    }

    pub fn report(&self) -> Result<(), PipelineError> {
        self.cfg.validate()?;
        let roster = self.roster()?;
        let rules = self.repo_rules()?;
        let corpus = self.corpus()?;
        let works = unique_works(&corpus);

        let dir = self.out(&["reports"]);
        let coverage = coverage_table(&roster, &corpus.recovered, &corpus);
        write_file(&dir.join("coverage.csv"), &report::coverage_csv(&coverage))?;
        let status = status_timeseries(&works, &PeriodSlice::WINDOW);
        write_file(&dir.join("status_by_year.csv"), &report::status_by_year_csv(&status))?;
        let repos = repo_timeseries(&works, &PeriodSlice::WINDOW, &rules);
        write_file(&dir.join("repos_by_year.csv"), &report::repos_by_year_csv(&repos))?;
        let totals: Vec<_> = PeriodSlice::ALL
            .iter()
            .map(|p| {
                let sliced: Vec<WorkRecord> = works.iter().filter(|w| p.contains(w.year())).cloned().collect();
                (*p, summarize_totals(&sliced))
            })
            .collect();
        write_file(&dir.join("totals.csv"), &report::totals_csv(&totals))?;

        let mut by_area = String::from(report::BY_AREA_HEADER);
        by_area.push('\n');
        let mut by_discipline = String::from(report::BY_DISCIPLINE_HEADER);
        by_discipline.push('\n');
        for p in PeriodSlice::ALL {
            let b = discipline_breakdown(&corpus, &roster, &p);
            by_area.extend(report::by_area_csv(&p, &b).lines().skip(1).map(|l| format!("{l}\n")));
            by_discipline.extend(report::by_discipline_csv(&p, &b).lines().skip(1).map(|l| format!("{l}\n")));
        }
        write_file(&dir.join("by_area.csv"), &by_area)?;
        write_file(&dir.join("by_discipline.csv"), &by_discipline)?;

        let meta = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "config_hash": self.cfg.hash()?,
            "generated_at": generated_at(),
            "counts": {
                "researchers": roster.len(),
                "researchers_kept": corpus.researchers_kept.len(),
                "researchers_dropped": corpus.researchers_dropped.len(),
                "attributions": corpus.attributions.len(),
                "unique_works": works.len(),
            },
            "files": REPORT_FILES,
        });
        write_json(&dir.join("run_metadata.json"), &meta)?;
        info!(dir = %dir.display(), "reports written");
        Ok(())
    }

    pub fn impact(&self) -> Result<Value, PipelineError> {
        self.cfg.validate()?;
        let rules = self.repo_rules()?;
        let corpus = self.corpus()?;
        let works = unique_works(&corpus);
        let set = build_observations_with_rules(&works, &rules, &self.cfg.window)?;

        let mut models = serde_json::Map::new();
        for (name, month_effects) in [("no_month_effects", false), ("month_effects", true)] {
            let opts = FitOptions { month_effects, covariance: self.cfg.covariance };
            let v = match fit_segmented(&set.observations, opts) {
                Ok(fit) => fit_json(&fit),
                Err(e) => {
                    warn!(model = name, error = %e, "model not estimable");
                    json!({ "error": e.to_string() })
                }
            };
            models.insert(name.to_string(), v);
        }
        let primary = if self.cfg.include_month_effects { "month_effects" } else { "no_month_effects" };
        let report = json!({
            "window": {
                "window_start": self.cfg.window.window_start.to_string(),
                "law_date": self.cfg.window.law_date.to_string(),
                "cutoff": self.cfg.window.cutoff.to_string(),
            },
            "flags": {
                "include_month_effects": self.cfg.include_month_effects,
                "covariance": self.cfg.covariance,
            },
            "primary_model": primary,
            "n_works": works.len(),
            "n_obs": set.observations.len(),
            "imputed_dates": set.imputed,
            "excluded_outside_window": set.excluded,
            "deposited": set.observations.iter().filter(|o| o.y == 1).count(),
            "models": models,
        });
        let dir = self.out(&["impact"]);
        write_json(&dir.join("impact_report.json"), &report)?;
        write_file(&dir.join("weekly_series.csv"), &weekly_series_csv(&weekly_deposit_series(&set.observations)))?;
        info!(dir = %dir.display(), n_obs = set.observations.len(), "impact written");
        Ok(report)
    }

    pub fn all(&self) -> Result<(), PipelineError> {
        self.harvest()?;
        self.build()?;
        self.report()?;
        self.impact()?;
        Ok(())
    }
}

fn harvest_researcher(h: &Harvester, r: &Researcher, lex: &AccentLexicon) -> Result<ResearcherHarvest, HarvestError> {
    let variants = generate_variants(r, lex);
    // first variant to surface an entity is the one recorded for it
    let mut seen: BTreeMap<String, AuthorCandidate> = BTreeMap::new();
    for v in &variants {
        for c in h.search_authors(v)? {
            seen.entry(c.author_id.clone()).or_insert(c);
        }
    }
    let mut candidates = Vec::with_capacity(seen.len());
    for (_, c) in seen {
        let name_match = names_match(&c.display_name, r, lex).matched;
        let (works, skipped_works) = if name_match {
            let f = h.fetch_works(&c.author_id)?;
            (f.works, f.skipped)
        } else {
            (Vec::new(), 0)
        };
        candidates.push(CandidateHarvest { candidate: c, name_match, works, skipped_works });
    }
    Ok(ResearcherHarvest { researcher_id: r.id.clone(), variants, candidates })
}

fn generated_at() -> Value {
    std::env::var(SOURCE_DATE_EPOCH)
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| chrono::DateTime::from_timestamp(secs, 0))
        .map(|t| json!(t.format("%Y-%m-%dT%H:%M:%SZ").to_string()))
        .unwrap_or(Value::Null)
}

/// Coefficient table keyed by column name, numbers at six significant digits.
pub fn fit_json(fit: &RegressionFit) -> Value {
    let mut coefs = serde_json::Map::new();
    for (i, name) in fit.names.iter().enumerate() {
        coefs.insert(
            name.clone(),
            json!({
                "estimate": sig6(fit.coefficients[i]),
                "std_error": sig6(fit.standard_errors[i]),
                "t_stat": sig6(fit.t_stats[i]),
                "p_value": sig6(fit.p_values[i]),
            }),
        );
    }
    json!({
        "coefficients": coefs,
        "n_obs": fit.n_obs,
        "df": fit.df,
        "r_squared": sig6(fit.r_squared),
    })
}

/// Relative paths and contents of every file under `dir`, sorted.
pub fn snapshot_tree(dir: &Path) -> std::io::Result<BTreeMap<String, Vec<u8>>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) -> std::io::Result<()> {
        let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
        entries.sort_by_key(|e| e.file_name());
        for e in entries {
            let p = e.path();
            if p.is_dir() {
                walk(root, &p, out)?;
            } else {
                let rel = p.strip_prefix(root).expect("under root").to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&p)?);
            }
        }
        Ok(())
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out)?;
    Ok(out)
}
