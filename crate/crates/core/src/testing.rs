//! In-memory stand-in for the OpenAlex API.
//!
//! [`MockApi`] implements [`Transport`] and answers `/authors?search=` and
//! `/works?filter=author.id:` with cursor-paginated JSON in the real
//! response shape. Recording a live-mode harvest against it is how the
//! bundled fixtures are produced.

use std::collections::{BTreeMap, VecDeque};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde_json::{json, Value};
use url::Url;

use crate::harvester::{Clock, HttpResponse, Transport, TransportError};

/// A scripted outcome consumed by the next request before normal serving.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockFailure {
    Status(u16),
    Transport(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoggedRequest {
    pub url: String,
    pub at: Option<Duration>,
}

#[derive(Default)]
pub struct MockApi {
    authors: BTreeMap<String, Vec<Value>>,
    works: BTreeMap<String, Vec<Value>>,
    failures: Mutex<VecDeque<MockFailure>>,
    /// Fail every request after this many successful ones.
    fail_after: Mutex<Option<usize>>,
    log: Mutex<Vec<LoggedRequest>>,
    clock: Option<Arc<dyn Clock>>,
}

impl MockApi {
    pub fn new() -> Self {
        Self::default()
    }

    /// Timestamps every logged request with `clock.now()`.
    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = Some(clock);
        self
    }

    /// Registers author entities returned for a search string (matched
    /// exactly, as the query text arrives).
    pub fn add_search(&mut self, search: &str, authors: Vec<Value>) {
        self.authors.entry(search.to_string()).or_default().extend(authors);
    }

    pub fn add_works(&mut self, author_id: &str, works: Vec<Value>) {
        self.works.entry(author_id.to_string()).or_default().extend(works);
    }

    pub fn push_failure(&self, f: MockFailure) {
        self.failures.lock().unwrap().push_back(f);
    }

    pub fn fail_after(&self, successes: Option<usize>) {
        *self.fail_after.lock().unwrap() = successes;
    }

    pub fn requests(&self) -> Vec<LoggedRequest> {
        self.log.lock().unwrap().clone()
    }

    pub fn request_count(&self) -> usize {
        self.log.lock().unwrap().len()
    }

    fn serve(&self, url: &str) -> Result<HttpResponse, TransportError> {
        let parsed = Url::parse(url).map_err(|e| TransportError(format!("bad url {url}: {e}")))?;
        let params: BTreeMap<String, String> = parsed.query_pairs().into_owned().collect();
        let per_page: usize = params.get("per-page").and_then(|p| p.parse().ok()).unwrap_or(25).max(1);
        let offset = match params.get("cursor").map(String::as_str) {
            None | Some("*") => 0,
            Some(c) => match c.strip_prefix('o').and_then(|n| n.parse::<usize>().ok()) {
                Some(n) => n,
                None => return Ok(HttpResponse { status: 400, body: "{\"error\":\"bad cursor\"}".into() }),
            },
        };
        let empty = Vec::new();
        let entities = match parsed.path() {
            "/authors" => self.authors.get(params.get("search").map(String::as_str).unwrap_or("")).unwrap_or(&empty),
            "/works" => {
                let filter = params.get("filter").map(String::as_str).unwrap_or("");
                let author = filter.strip_prefix("author.id:").unwrap_or("");
                self.works.get(author).unwrap_or(&empty)
            }
            _ => return Ok(HttpResponse { status: 404, body: "{\"error\":\"not found\"}".into() }),
        };
        Ok(HttpResponse { status: 200, body: render_page(entities, offset, per_page) })
    }
}

/// One page of a cursor-paginated listing. The cursor is the offset of the
/// next page, prefixed with `o`.
pub fn render_page(entities: &[Value], offset: usize, per_page: usize) -> String {
    let start = offset.min(entities.len());
    let end = (start + per_page).min(entities.len());
    let next = (end < entities.len()).then(|| format!("o{end}"));
    let body = json!({
        "meta": {"count": entities.len(), "per_page": per_page, "next_cursor": next},
        "results": &entities[start..end],
    });
    serde_json::to_string(&body).expect("json values serialize")
}

impl Transport for MockApi {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportError> {
        let at = self.clock.as_ref().map(|c| c.now());
        let served = {
            let mut log = self.log.lock().unwrap();
            log.push(LoggedRequest { url: url.to_string(), at });
            log.len()
        };
        if let Some(limit) = *self.fail_after.lock().unwrap() {
            if served > limit {
                return Err(TransportError("connection reset (scripted)".into()));
            }
        }
        if let Some(f) = self.failures.lock().unwrap().pop_front() {
            return match f {
                MockFailure::Status(status) => Ok(HttpResponse { status, body: String::new() }),
                MockFailure::Transport(m) => Err(TransportError(m)),
            };
        }
        self.serve(url)
    }
}

pub fn author_json(id: &str, display_name: &str, works_count: u64) -> Value {
    json!({
        "id": format!("https://openalex.org/{id}"),
        "display_name": display_name,
        "works_count": works_count,
    })
}

/// A work entity in the API's response shape.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MockWork {
    pub id: String,
    /// Bare DOI (`10.x/y`); rendered as a doi.org URL.
    pub doi: Option<String>,
    /// `YYYY-MM-DD`; `None` leaves only `publication_year`.
    pub date: Option<String>,
    pub year: Option<i32>,
    pub work_type: String,
    pub oa_status: Option<String>,
    pub host_url: Option<String>,
    pub location_urls: Vec<String>,
    /// One authorship per entry, each with a single institution.
    pub countries: Vec<String>,
}

impl MockWork {
    pub fn to_json(&self) -> Value {
        let year = self.year.or_else(|| self.date.as_deref().and_then(|d| d.get(..4)?.parse().ok()));
        json!({
            "id": format!("https://openalex.org/{}", self.id),
            "doi": self.doi.as_ref().map(|d| format!("https://doi.org/{d}")),
            "title": format!("Work {}", self.id),
            "publication_date": self.date,
            "publication_year": year,
            "type": self.work_type,
            "open_access": {"oa_status": self.oa_status},
            "host_venue": {"url": self.host_url},
            "locations": self.location_urls.iter().map(|u| json!({"landing_page_url": u, "pdf_url": null})).collect::<Vec<_>>(),
            "authorships": self.countries.iter().map(|c| json!({"institutions": [{"country_code": c}]})).collect::<Vec<_>>(),
        })
    }
}
