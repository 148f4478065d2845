//! Uniform knowledge-graph access through two interchangeable backends: a
//! local in-memory triple store and a remote SPARQL/entity-search client.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod local;
pub mod remote;

pub use local::LocalStore;
pub use remote::{HttpTransport, RemoteConfig, RemoteKg, Transport};

/// KG entity identifier (QID-style) with display text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityRef {
    pub id: String,
    pub label: String,
    #[serde(default)]
    pub description: String,
}

impl EntityRef {
    pub fn new(id: impl Into<String>, label: impl Into<String>, description: impl Into<String>) -> Self {
        let id = id.into();
        debug_assert!(!id.is_empty(), "entity id must be non-empty");
        Self {
            id,
            label: label.into(),
            description: description.into(),
        }
    }
}

/// KG relation identifier (PID-style) with label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationRef {
    pub id: String,
    pub label: String,
}

impl RelationRef {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
        let id = id.into();
        debug_assert!(!id.is_empty(), "relation id must be non-empty");
        Self {
            id,
            label: label.into(),
        }
    }
}

/// One KG statement. Literal objects are rewritten to synthetic
/// `literal:<hash>` entities at load time, so `object` is always an id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

/// Traversal direction relative to the anchored entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    /// The anchored entity is the subject of the triple.
    Forward,
    /// The anchored entity is the object of the triple.
    Backward,
}

#[derive(Debug, Error)]
pub enum KgError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("transient backend error: {0}")]
    Transient(String),
    #[error("protocol error: malformed backend response: {0}")]
    Protocol(String),
    #[error("cannot load store: {0}")]
    Load(String),
}

/// Backend contract shared by the local store and the remote client.
///
/// Implementations must be deterministic for an unchanged graph and safe to
/// share across concurrent match jobs.
pub trait KgBackend: Send + Sync {
    /// Keyword entity search, at most `limit` results in backend relevance
    /// order.
    fn search_entities(&self, query: &str, limit: usize) -> Result<Vec<EntityRef>, KgError>;

    /// Relations adjacent to an entity in the given direction, deduplicated
    /// by relation id. Unknown entities yield an empty list.
    fn adjacent_relations(
        &self,
        entity_id: &str,
        direction: Direction,
    ) -> Result<Vec<RelationRef>, KgError>;

    /// Neighbor entities over one relation/direction, at most `cap` results.
    fn linked_entities(
        &self,
        entity_id: &str,
        relation_id: &str,
        direction: Direction,
        cap: usize,
    ) -> Result<Vec<EntityRef>, KgError>;

    /// Labels for known ids; unknown ids are absent from the map.
    fn fetch_labels(&self, ids: &[String]) -> Result<HashMap<String, String>, KgError>;
}

pub(crate) fn check_search_args(query: &str, limit: usize) -> Result<(), KgError> {
    if query.is_empty() {
        return Err(KgError::Contract("search query must be non-empty".into()));
    }
    if limit == 0 {
        return Err(KgError::Contract("search limit must be >= 1".into()));
    }
    Ok(())
}

pub(crate) fn check_cap(cap: usize) -> Result<(), KgError> {
    if cap == 0 {
        return Err(KgError::Contract("neighbor cap must be >= 1".into()));
    }
    Ok(())
}
