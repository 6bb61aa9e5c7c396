use std::collections::BTreeMap;

use sha2::{Digest, Sha256};
use url::form_urlencoded;

/// A logical GET request against the API. Query parameters are kept sorted
/// by name, so two requests built in different orders are the same request.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ApiRequest {
    pub path: String,
    pub params: BTreeMap<String, String>,
}

impl ApiRequest {
    pub fn new(path: impl Into<String>) -> Self {
        ApiRequest { path: path.into(), params: BTreeMap::new() }
    }

    pub fn param(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.params.insert(name.into(), value.into());
        self
    }

    pub fn query_string(&self) -> String {
        let mut q = form_urlencoded::Serializer::new(String::new());
        for (k, v) in &self.params {
            q.append_pair(k, v);
        }
        q.finish()
    }

    /// Human-readable request line, e.g. `GET /authors?per-page=200&search=j.+perez`.
    pub fn request_line(&self) -> String {
        let query = self.query_string();
        if query.is_empty() {
            format!("GET {}", self.path)
        } else {
            format!("GET {}?{}", self.path, query)
        }
    }

    pub fn url(&self, base_url: &str, mailto: Option<&str>) -> String {
        let mut with_mail = self.clone();
        if let Some(m) = mailto {
            with_mail.params.insert("mailto".into(), m.into());
        }
        let query = with_mail.query_string();
        let base = base_url.trim_end_matches('/');
        if query.is_empty() {
            format!("{base}{}", self.path)
        } else {
            format!("{base}{}?{query}", self.path)
        }
    }

    pub fn key(&self) -> String {
        request_key(self)
    }
}

/// Stable fixture address of a request: hex SHA-256 (first 16 bytes) of its
/// canonical request line. The `mailto` contact parameter never takes part.
pub fn request_key(request: &ApiRequest) -> String {
    let mut canonical = request.clone();
    canonical.params.remove("mailto");
    let digest = Sha256::digest(canonical.request_line().as_bytes());
    hex::encode(&digest[..16])
}
