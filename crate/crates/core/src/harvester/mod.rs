//! OpenAlex client: author search and per-author works listing with cursor
//! pagination, polite rate limiting, retries and record/replay fixtures.
//!
//! In [`HarvestMode::Fixture`] every request is answered from
//! `{fixture_dir}/{request_key}.json` and the network is never touched. In
//! [`HarvestMode::Live`] responses are optionally recorded into the same
//! layout; a recorded key is served from disk instead of being re-fetched,
//! which is what makes an interrupted harvest resumable.

mod fixture;
mod payload;
mod ratelimit;
mod request;
mod transport;

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::de::DeserializeOwned;
use thiserror::Error;
use tracing::{debug, warn};

use crate::namekit::NameVariant;
pub use crate::records::{AuthorCandidate, WorkRecord};
pub use fixture::{FixtureStore, MANIFEST_FILE};
pub use payload::{short_id, Page, RawAuthor, RawWork, SkipReason};
pub use ratelimit::{Clock, RateLimiter, SimulatedClock, SystemClock};
pub use request::{request_key, ApiRequest};
pub use transport::{HttpResponse, HttpTransport, Transport, TransportError};

pub const DEFAULT_BASE_URL: &str = "https://api.openalex.org";
pub const MAILTO_ENV: &str = "OA_MONITOR_MAILTO";
/// OpenAlex polite-pool ceiling.
pub const LIVE_RATE_CEILING: f64 = 10.0;
const MAX_PAGES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarvestMode {
    Live,
    Fixture,
}

#[derive(Debug, Clone)]
pub struct HarvestConfig {
    pub base_url: String,
    pub mailto: Option<String>,
    pub max_requests_per_second: f64,
    pub max_retries: u32,
    pub page_size: u32,
    pub mode: HarvestMode,
    /// Replay source in fixture mode; record target in live mode.
    pub fixture_dir: Option<PathBuf>,
    pub backoff_base: Duration,
    pub timeout: Duration,
}

impl Default for HarvestConfig {
    fn default() -> Self {
        HarvestConfig {
            base_url: DEFAULT_BASE_URL.to_string(),
            mailto: None,
            max_requests_per_second: 8.0,
            max_retries: 4,
            page_size: 200,
            mode: HarvestMode::Fixture,
            fixture_dir: None,
            backoff_base: Duration::from_millis(500),
            timeout: Duration::from_secs(30),
        }
    }
}

impl HarvestConfig {
    pub fn fixture(dir: impl Into<PathBuf>) -> Self {
        HarvestConfig { mode: HarvestMode::Fixture, fixture_dir: Some(dir.into()), ..Default::default() }
    }

    pub fn live(record_dir: Option<PathBuf>) -> Self {
        HarvestConfig { mode: HarvestMode::Live, fixture_dir: record_dir, ..Default::default() }
    }

    /// `OA_MONITOR_MAILTO`, when set and non-empty, replaces `mailto`.
    pub fn apply_env(mut self) -> Self {
        if let Ok(m) = std::env::var(MAILTO_ENV) {
            if !m.trim().is_empty() {
                self.mailto = Some(m.trim().to_string());
            }
        }
        self
    }

    pub fn validate(&self) -> Result<(), HarvestError> {
        let bad = |m: String| Err(HarvestError::Config(m));
        if !(1..=200).contains(&self.page_size) {
            return bad(format!("page_size {} outside [1, 200]", self.page_size));
        }
        if !(self.max_requests_per_second > 0.0 && self.max_requests_per_second.is_finite()) {
            return bad(format!("max_requests_per_second {} must be positive", self.max_requests_per_second));
        }
        match self.mode {
            HarvestMode::Live if self.max_requests_per_second > LIVE_RATE_CEILING => bad(format!(
                "max_requests_per_second {} exceeds the live ceiling of {LIVE_RATE_CEILING}",
                self.max_requests_per_second
            )),
            HarvestMode::Fixture if self.fixture_dir.is_none() => bad("fixture mode needs a fixture directory".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Error)]
pub enum HarvestError {
    #[error("harvest configuration: {0}")]
    Config(String),
    #[error("request to {url} failed after {attempts} attempts (last status {}): {message}", .last_status.map(|s| s.to_string()).unwrap_or_else(|| "none".into()))]
    Transport { url: String, last_status: Option<u16>, attempts: u32, message: String },
    #[error("request to {url} rejected with HTTP {status}")]
    Http { url: String, status: u16 },
    #[error("cannot decode response {key} at byte {offset}: {message}")]
    Decode { key: String, offset: usize, message: String },
    #[error("no fixture for request {key} ({request})")]
    FixtureMiss { key: String, request: String },
    #[error("pagination of {request} did not terminate: {message}")]
    Pagination { request: String, message: String },
    #[error("fixture store I/O at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Works of one author plus the number of raw records dropped at ingest
/// (missing or implausible publication year).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FetchedWorks {
    pub works: Vec<WorkRecord>,
    pub skipped: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HarvestStats {
    pub network_requests: u64,
    pub replayed: u64,
    pub pages: u64,
}

pub struct Harvester {
    cfg: HarvestConfig,
    transport: Option<Arc<dyn Transport>>,
    store: Option<FixtureStore>,
    limiter: RateLimiter,
    clock: Arc<dyn Clock>,
    latest_year: i32,
    network_requests: AtomicU64,
    replayed: AtomicU64,
    pages: AtomicU64,
}

impl Harvester {
    /// Builds a harvester with the real HTTP client and wall clock.
    pub fn new(cfg: HarvestConfig) -> Result<Self, HarvestError> {
        let transport: Option<Arc<dyn Transport>> = match cfg.mode {
            HarvestMode::Live => {
                Some(Arc::new(HttpTransport::new(cfg.timeout).map_err(|e| HarvestError::Config(e.0))?))
            }
            HarvestMode::Fixture => None,
        };
        Self::with_parts(cfg, transport, Arc::new(SystemClock::new()))
    }

    pub fn with_parts(
        cfg: HarvestConfig,
        transport: Option<Arc<dyn Transport>>,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, HarvestError> {
        cfg.validate()?;
        if cfg.mode == HarvestMode::Live && transport.is_none() {
            return Err(HarvestError::Config("live mode needs a transport".into()));
        }
        let store = match &cfg.fixture_dir {
            Some(dir) => {
                if cfg.mode == HarvestMode::Fixture && !dir.is_dir() {
                    return Err(HarvestError::Config(format!("fixture directory {} does not exist", dir.display())));
                }
                Some(
                    FixtureStore::open(dir.clone())
                        .map_err(|source| HarvestError::Io { path: dir.display().to_string(), source })?,
                )
            }
            None => None,
        };
        let limiter = RateLimiter::per_second(cfg.max_requests_per_second, clock.clone());
        Ok(Harvester {
            cfg,
            transport,
            store,
            limiter,
            clock,
            latest_year: crate::records::PubDate::latest_plausible_year(),
            network_requests: AtomicU64::new(0),
            replayed: AtomicU64::new(0),
            pages: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &HarvestConfig {
        &self.cfg
    }

    pub fn stats(&self) -> HarvestStats {
        HarvestStats {
            network_requests: self.network_requests.load(Ordering::Relaxed),
            replayed: self.replayed.load(Ordering::Relaxed),
            pages: self.pages.load(Ordering::Relaxed),
        }
    }

    /// Writes the recording manifest (live mode with a record directory).
    pub fn flush(&self) -> Result<(), HarvestError> {
        match (&self.store, self.cfg.mode) {
            (Some(store), HarvestMode::Live) => store
                .flush_manifest()
                .map_err(|source| HarvestError::Io { path: store.dir().display().to_string(), source }),
            _ => Ok(()),
        }
    }

    /// All author entities matching a name variant, sorted by author id.
    pub fn search_authors(&self, variant: &NameVariant) -> Result<Vec<AuthorCandidate>, HarvestError> {
        let base = ApiRequest::new("/authors").param("search", variant.text.clone());
        let raw: Vec<RawAuthor> = self.paginate(base)?;
        let mut out: Vec<AuthorCandidate> = Vec::with_capacity(raw.len());
        for a in raw {
            let author_id = short_id(&a.id);
            if author_id.is_empty() {
                continue;
            }
            out.push(AuthorCandidate {
                author_id,
                display_name: a.display_name.unwrap_or_default(),
                works_count: a.works_count.unwrap_or(0),
                queried_variant: variant.clone(),
            });
        }
        out.sort_by(|a, b| a.author_id.cmp(&b.author_id));
        out.dedup_by(|a, b| a.author_id == b.author_id);
        Ok(out)
    }

    /// Every work listed for an author. Non-article types are kept; works
    /// without a usable publication year are dropped and counted.
    pub fn fetch_works(&self, author_id: &str) -> Result<FetchedWorks, HarvestError> {
        let base = ApiRequest::new("/works").param("filter", format!("author.id:{author_id}"));
        let raw: Vec<RawWork> = self.paginate(base)?;
        let mut fetched = FetchedWorks::default();
        for w in raw {
            match w.into_record(self.latest_year) {
                Ok(record) => fetched.works.push(record),
                Err(reason) => {
                    debug!(author_id, ?reason, "work skipped");
                    fetched.skipped += 1;
                }
            }
        }
        Ok(fetched)
    }

    fn paginate<T: DeserializeOwned>(&self, base: ApiRequest) -> Result<Vec<T>, HarvestError> {
        let base = base.param("per-page", self.cfg.page_size.to_string());
        let mut results = Vec::new();
        let mut cursor = "*".to_string();
        let mut seen = std::collections::HashSet::new();
        for _ in 0..MAX_PAGES {
            let request = base.clone().param("cursor", cursor.clone());
            let body = self.fetch(&request)?;
            self.pages.fetch_add(1, Ordering::Relaxed);
            let page: Page<T> = decode(&body, &request)?;
            let got = page.results.len();
            results.extend(page.results);
            match page.meta.next_cursor {
                Some(next) if got > 0 && !next.is_empty() => {
                    if !seen.insert(next.clone()) {
                        return Err(HarvestError::Pagination {
                            request: base.request_line(),
                            message: format!("cursor `{next}` repeated"),
                        });
                    }
                    cursor = next;
                }
                _ => return Ok(results),
            }
        }
        Err(HarvestError::Pagination { request: base.request_line(), message: format!("more than {MAX_PAGES} pages") })
    }

    fn fetch(&self, request: &ApiRequest) -> Result<String, HarvestError> {
        if let Some(store) = &self.store {
            let cached = store.read(request).map_err(|source| HarvestError::Io {
                path: store.path_for(&request.key()).display().to_string(),
                source,
            })?;
            if let Some(body) = cached {
                self.replayed.fetch_add(1, Ordering::Relaxed);
                return Ok(body);
            }
        }
        let transport = match (&self.transport, self.cfg.mode) {
            (Some(t), HarvestMode::Live) => t,
            _ => {
                return Err(HarvestError::FixtureMiss { key: request.key(), request: request.request_line() });
            }
        };

        let url = request.url(&self.cfg.base_url, self.cfg.mailto.as_deref());
        let mut attempt = 0u32;
        loop {
            self.limiter.acquire();
            self.network_requests.fetch_add(1, Ordering::Relaxed);
            let (last_status, message) = match transport.get(&url) {
                Ok(resp) if (200..300).contains(&resp.status) => {
                    if let Some(store) = &self.store {
                        store.write(request, &resp.body).map_err(|source| HarvestError::Io {
                            path: store.path_for(&request.key()).display().to_string(),
                            source,
                        })?;
                    }
                    return Ok(resp.body);
                }
                Ok(resp) if resp.status == 429 || (500..600).contains(&resp.status) => {
                    (Some(resp.status), format!("HTTP {}", resp.status))
                }
                Ok(resp) => return Err(HarvestError::Http { url, status: resp.status }),
                Err(e) => (None, e.0),
            };
            if attempt >= self.cfg.max_retries {
                return Err(HarvestError::Transport { url, last_status, attempts: attempt + 1, message });
            }
            let delay = backoff(self.cfg.backoff_base, attempt);
            warn!(%url, attempt, ?delay, %message, "retrying request");
            self.clock.sleep(delay);
            attempt += 1;
        }
    }
}

/// `base · 2^attempt`, capped at one minute.
pub fn backoff(base: Duration, attempt: u32) -> Duration {
    base.saturating_mul(1u32 << attempt.min(16)).min(Duration::from_secs(60))
}

fn decode<T: DeserializeOwned>(body: &str, request: &ApiRequest) -> Result<Page<T>, HarvestError> {
    serde_json::from_str(body).map_err(|e| HarvestError::Decode {
        key: request.key(),
        offset: payload::byte_offset(body, e.line(), e.column()),
        message: e.to_string(),
    })
}
