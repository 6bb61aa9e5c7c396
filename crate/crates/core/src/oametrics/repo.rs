use std::path::Path;

use thiserror::Error;
use tracing::debug;
use url::Url;

use super::RepoClass;

/// Repository hosts shipped with the crate (`data/repositories.csv`).
pub const DEFAULT_REPOSITORIES: &str = include_str!("../../../../data/repositories.csv");

#[derive(Debug, Error)]
pub enum RepoRulesError {
    #[error("repository list line {line}: unknown scope `{scope}` (national|international)")]
    Scope { line: u64, scope: String },
    #[error("repository list schema error: missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("malformed repository list: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot read repository list {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// `host` or `host/path-prefix`. A host rule also covers its subdomains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostRule {
    pub host: String,
    pub path_prefix: Option<String>,
}

impl HostRule {
    pub fn parse(entry: &str) -> Self {
        let entry = entry.trim().trim_start_matches("https://").trim_start_matches("http://");
        let (host, path) = entry.split_once('/').unwrap_or((entry, ""));
        let path = path.trim_end_matches('/');
        HostRule { host: host.to_ascii_lowercase(), path_prefix: (!path.is_empty()).then(|| format!("/{path}")) }
    }

    fn matches(&self, host: &str, path: &str) -> bool {
        let host_ok = host == self.host || host.ends_with(&format!(".{}", self.host));
        host_ok && self.path_prefix.as_deref().is_none_or(|p| path.starts_with(p))
    }
}

/// Evidence sets for repository classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepoRules {
    /// Host suffixes that mark a national repository, e.g. `.ar`.
    pub national_suffixes: Vec<String>,
    pub national_hosts: Vec<HostRule>,
    pub international_hosts: Vec<HostRule>,
}

impl Default for RepoRules {
    fn default() -> Self {
        let mut rules = RepoRules::parse(DEFAULT_REPOSITORIES).expect("bundled repository list is well formed");
        rules.national_suffixes = vec![".ar".into()];
        rules
    }
}

impl RepoRules {
    pub fn empty() -> Self {
        RepoRules { national_suffixes: Vec::new(), national_hosts: Vec::new(), international_hosts: Vec::new() }
    }

    /// Parses `host,scope` rows (scope `national` or `international`).
    /// Lines starting with `#` are comments. Suffixes are left empty.
    pub fn parse(raw: &str) -> Result<Self, RepoRulesError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(raw.as_bytes());
        let headers = reader.headers()?.clone();
        let host_col = headers.iter().position(|h| h == "host").ok_or(RepoRulesError::MissingColumn("host"))?;
        let scope_col = headers.iter().position(|h| h == "scope").ok_or(RepoRulesError::MissingColumn("scope"))?;
        let mut rules = RepoRules::empty();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let host = record.get(host_col).unwrap_or("");
            if host.is_empty() {
                continue;
            }
            let scope = record.get(scope_col).unwrap_or("").to_ascii_lowercase();
            match scope.as_str() {
                "national" => rules.national_hosts.push(HostRule::parse(host)),
                "international" => rules.international_hosts.push(HostRule::parse(host)),
                _ => return Err(RepoRulesError::Scope { line, scope }),
            }
        }
        Ok(rules)
    }

    pub fn load(path: &Path, national_suffixes: &[String]) -> Result<Self, RepoRulesError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|source| RepoRulesError::Io { path: path.display().to_string(), source })?;
        let mut rules = Self::parse(&raw)?;
        rules.national_suffixes = national_suffixes.to_vec();
        Ok(rules)
    }

    pub fn with_national_suffixes(mut self, suffixes: &[String]) -> Self {
        self.national_suffixes = suffixes.to_vec();
        self
    }

    fn is_national_suffix(&self, host: &str) -> bool {
        self.national_suffixes.iter().any(|s| {
            let s = s.trim().to_ascii_lowercase();
            let dotted = if s.starts_with('.') { s } else { format!(".{s}") };
            dotted.len() > 1 && host.ends_with(&dotted)
        })
    }
}

/// Classifies a URL by its host. National suffixes and national hosts win
/// over the international list; unparsable URLs are not repositories.
pub fn classify_repo(url: Option<&str>, rules: &RepoRules) -> RepoClass {
    let Some(raw) = url.map(str::trim).filter(|u| !u.is_empty()) else {
        return RepoClass::NotRepository;
    };
    let parsed = match Url::parse(raw) {
        Ok(u) => u,
        Err(e) => {
            debug!(url = raw, error = %e, "malformed URL treated as non-repository");
            return RepoClass::NotRepository;
        }
    };
    let Some(host) = parsed.host_str() else {
        debug!(url = raw, "URL without host treated as non-repository");
        return RepoClass::NotRepository;
    };
    let host = host.trim_end_matches('.').to_ascii_lowercase();
    let path = parsed.path();
    if rules.is_national_suffix(&host) || rules.national_hosts.iter().any(|h| h.matches(&host, path)) {
        RepoClass::ArgentineRepository
    } else if rules.international_hosts.iter().any(|h| h.matches(&host, path)) {
        RepoClass::InternationalRepository
    } else {
        RepoClass::NotRepository
    }
}
