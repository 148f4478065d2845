//! Remote KG backend: a `wbsearchentities`-style entity search endpoint plus
//! a SPARQL endpoint queried through fixed 1-hop templates. Responses are
//! cached on disk and calls go through a rate limiter with bounded retries.
//!
//! Free-form query generation is deliberately absent: every SPARQL query is a
//! fixed template with only entity/relation ids substituted.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::{check_cap, check_search_args, local, Direction, EntityRef, KgBackend, KgError, RelationRef};
use crate::net;

/// 1-hop SPARQL templates. Placeholders hold a single substituted id each.
pub const FORWARD_RELATIONS_TEMPLATE: &str = "SELECT DISTINCT ?p WHERE { wd:{entity} ?p ?o }";
pub const BACKWARD_RELATIONS_TEMPLATE: &str = "SELECT DISTINCT ?p WHERE { ?s ?p wd:{entity} }";
pub const LINKED_FORWARD_TEMPLATE: &str =
    "SELECT DISTINCT ?x WHERE { wd:{entity} wdt:{relation} ?x } ORDER BY ?x LIMIT {cap}";
pub const LINKED_BACKWARD_TEMPLATE: &str =
    "SELECT DISTINCT ?x WHERE { ?x wdt:{relation} wd:{entity} } ORDER BY ?x LIMIT {cap}";
pub const LABEL_TEMPLATE: &str =
    "SELECT ?label WHERE { wd:{id} rdfs:label ?label FILTER(lang(?label) = \"en\") } LIMIT 1";

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RemoteConfig {
    pub sparql_endpoint: String,
    pub search_endpoint: String,
    /// Maximum request rate in requests per second.
    pub rate_limit: f64,
    pub timeout_ms: u64,
    pub cache_dir: PathBuf,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

fn default_retries() -> u32 {
    3
}

/// HTTP GET abstraction so the client can run against recorded responses in
/// tests.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<String, KgError>;
}

/// Live transport over a blocking HTTP client.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout_ms: u64) -> Result<Self, KgError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(timeout_ms))
            .user_agent("smog/0.1")
            .build()
            .map_err(|e| KgError::Transient(e.to_string()))?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<String, KgError> {
        net::record_request();
        let resp = self
            .client
            .get(url)
            .send()
            .map_err(|e| KgError::Transient(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(KgError::Transient(format!("HTTP {}", resp.status())));
        }
        resp.text().map_err(|e| KgError::Transient(e.to_string()))
    }
}

fn percent_encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len() * 3);
    for byte in s.bytes() {
        match byte {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => {
                out.push(byte as char)
            }
            _ => out.push_str(&format!("%{byte:02X}")),
        }
    }
    out
}

/// Entity-search URL for the given query, mirroring `wbsearchentities`.
pub fn search_url(endpoint: &str, query: &str, limit: usize) -> String {
    format!(
        "{endpoint}?action=wbsearchentities&format=json&language=en&limit={limit}&search={}",
        percent_encode(query)
    )
}

/// SPARQL GET URL for a rendered template.
pub fn sparql_url(endpoint: &str, query: &str) -> String {
    format!("{endpoint}?format=json&query={}", percent_encode(query))
}

/// Renders one of the fixed templates.
pub fn render_template(template: &str, bindings: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in bindings {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

#[derive(Deserialize)]
struct SearchResponse {
    search: Vec<SearchHit>,
}

#[derive(Deserialize)]
struct SearchHit {
    id: String,
    #[serde(default)]
    label: String,
    #[serde(default)]
    description: String,
}

#[derive(Deserialize)]
struct SparqlResponse {
    results: SparqlResults,
}

#[derive(Deserialize)]
struct SparqlResults {
    bindings: Vec<HashMap<String, SparqlTerm>>,
}

#[derive(Deserialize)]
struct SparqlTerm {
    #[serde(rename = "type")]
    kind: String,
    value: String,
}

/// Remote KG backend over any [`Transport`].
pub struct RemoteKg<T: Transport> {
    config: RemoteConfig,
    transport: T,
    last_request: Mutex<Option<Instant>>,
}

impl<T: Transport> RemoteKg<T> {
    pub fn new(config: RemoteConfig, transport: T) -> Self {
        Self {
            config,
            transport,
            last_request: Mutex::new(None),
        }
    }

    /// The underlying transport, e.g. for instrumentation in tests.
    pub fn transport_ref(&self) -> &T {
        &self.transport
    }

    fn cache_path(&self, url: &str) -> PathBuf {
        let digest = Sha256::digest(url.as_bytes());
        self.config.cache_dir.join(format!("{digest:x}.json"))
    }

    fn throttle(&self) {
        if self.config.rate_limit <= 0.0 {
            return;
        }
        let min_gap = Duration::from_secs_f64(1.0 / self.config.rate_limit);
        let mut last = self.last_request.lock().unwrap();
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < min_gap {
                std::thread::sleep(min_gap - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    /// Cached, rate-limited, retried GET.
    fn fetch(&self, url: &str) -> Result<String, KgError> {
        let cache_path = self.cache_path(url);
        if let Ok(cached) = std::fs::read_to_string(&cache_path) {
            return Ok(cached);
        }
        let mut backoff = Duration::from_millis(200);
        let mut last_err = None;
        for _ in 0..=self.config.max_retries {
            self.throttle();
            match self.transport.get(url) {
                Ok(body) => {
                    if let Some(dir) = cache_path.parent() {
                        let _ = std::fs::create_dir_all(dir);
                    }
                    let _ = std::fs::write(&cache_path, &body);
                    return Ok(body);
                }
                Err(KgError::Transient(msg)) => {
                    last_err = Some(msg);
                    std::thread::sleep(backoff);
                    backoff *= 2;
                }
                Err(other) => return Err(other),
            }
        }
        Err(KgError::Transient(
            last_err.unwrap_or_else(|| "exhausted retries".into()),
        ))
    }

    fn sparql(&self, query: &str) -> Result<Vec<HashMap<String, SparqlTerm>>, KgError> {
        let url = sparql_url(&self.config.sparql_endpoint, query);
        let body = self.fetch(&url)?;
        let parsed: SparqlResponse =
            serde_json::from_str(&body).map_err(|e| KgError::Protocol(e.to_string()))?;
        Ok(parsed.results.bindings)
    }

    fn term_to_entity(term: &SparqlTerm) -> EntityRef {
        if term.kind == "uri" {
            let id = term
                .value
                .rsplit(['/', '#'])
                .next()
                .unwrap_or(&term.value)
                .to_string();
            EntityRef::new(id.clone(), id, "")
        } else {
            EntityRef::new(local::literal_id(&term.value), term.value.clone(), "")
        }
    }

    fn resolve_label(&self, id: &str) -> Result<Option<String>, KgError> {
        let query = render_template(LABEL_TEMPLATE, &[("id", id)]);
        let bindings = self.sparql(&query)?;
        Ok(bindings
            .first()
            .and_then(|b| b.get("label"))
            .map(|t| t.value.clone()))
    }
}

impl<T: Transport> KgBackend for RemoteKg<T> {
    fn search_entities(&self, query: &str, limit: usize) -> Result<Vec<EntityRef>, KgError> {
        check_search_args(query, limit)?;
        let url = search_url(&self.config.search_endpoint, query, limit);
        let body = self.fetch(&url)?;
        let parsed: SearchResponse =
            serde_json::from_str(&body).map_err(|e| KgError::Protocol(e.to_string()))?;
        Ok(parsed
            .search
            .into_iter()
            .take(limit)
            .map(|h| EntityRef::new(h.id, h.label, h.description))
            .collect())
    }

    fn adjacent_relations(
        &self,
        entity_id: &str,
        direction: Direction,
    ) -> Result<Vec<RelationRef>, KgError> {
        if entity_id.is_empty() {
            return Err(KgError::Contract("entity id must be non-empty".into()));
        }
        let template = match direction {
            Direction::Forward => FORWARD_RELATIONS_TEMPLATE,
            Direction::Backward => BACKWARD_RELATIONS_TEMPLATE,
        };
        let query = render_template(template, &[("entity", entity_id)]);
        let bindings = self.sparql(&query)?;
        let mut ids: Vec<String> = bindings
            .iter()
            .filter_map(|b| b.get("p"))
            .map(|t| {
                t.value
                    .rsplit(['/', '#'])
                    .next()
                    .unwrap_or(&t.value)
                    .to_string()
            })
            .collect();
        ids.sort();
        ids.dedup();
        let mut out = Vec::with_capacity(ids.len());
        for id in ids {
            let label = self.resolve_label(&id)?.unwrap_or_else(|| id.clone());
            out.push(RelationRef::new(id, label));
        }
        Ok(out)
    }

    fn linked_entities(
        &self,
        entity_id: &str,
        relation_id: &str,
        direction: Direction,
        cap: usize,
    ) -> Result<Vec<EntityRef>, KgError> {
        check_cap(cap)?;
        let template = match direction {
            Direction::Forward => LINKED_FORWARD_TEMPLATE,
            Direction::Backward => LINKED_BACKWARD_TEMPLATE,
        };
        let cap_str = cap.to_string();
        let query = render_template(
            template,
            &[("entity", entity_id), ("relation", relation_id), ("cap", &cap_str)],
        );
        let bindings = self.sparql(&query)?;
        let mut entities: Vec<EntityRef> = bindings
            .iter()
            .filter_map(|b| b.get("x"))
            .map(Self::term_to_entity)
            .collect();
        entities.sort();
        entities.dedup();
        entities.truncate(cap);
        for entity in &mut entities {
            if !entity.id.starts_with("literal:") {
                if let Some(label) = self.resolve_label(&entity.id)? {
                    entity.label = label;
                }
            }
        }
        Ok(entities)
    }

    fn fetch_labels(&self, ids: &[String]) -> Result<HashMap<String, String>, KgError> {
        let mut out = HashMap::new();
        for id in ids {
            if let Some(label) = self.resolve_label(id)? {
                out.insert(id.clone(), label);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_rendering_substitutes_single_ids() {
        let q = render_template(FORWARD_RELATIONS_TEMPLATE, &[("entity", "Q42")]);
        assert_eq!(q, "SELECT DISTINCT ?p WHERE { wd:Q42 ?p ?o }");
        let q = render_template(
            LINKED_BACKWARD_TEMPLATE,
            &[("entity", "Q1"), ("relation", "P2"), ("cap", "5")],
        );
        assert!(q.contains("?x wdt:P2 wd:Q1") && q.ends_with("LIMIT 5"));
    }

    #[test]
    fn urls_are_percent_encoded() {
        let url = search_url("https://example.org/w/api.php", "heart attack", 5);
        assert!(url.contains("search=heart%20attack"));
        assert!(url.contains("limit=5"));
    }
}
