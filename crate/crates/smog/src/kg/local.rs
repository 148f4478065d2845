//! In-memory triple store with forward and backward edge indexes.
//!
//! Load format: newline-delimited tab-separated triples
//! (`subject<TAB>predicate<TAB>object`) plus a labels file
//! (`id<TAB>label<TAB>description`). The store is immutable after load.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{
    check_cap, check_search_args, Direction, EntityRef, KgBackend, KgError, RelationRef, Triple,
};

#[derive(Debug, Clone, Default)]
struct LabelEntry {
    label: String,
    description: String,
}

/// Immutable in-memory KG backend used for tests and offline runs.
#[derive(Debug, Default)]
pub struct LocalStore {
    triples: Vec<Triple>,
    // entity id -> (predicate, neighbor id)
    forward: HashMap<String, Vec<(String, String)>>,
    backward: HashMap<String, Vec<(String, String)>>,
    labels: HashMap<String, LabelEntry>,
}

/// Synthetic id for a literal-valued object, keeping the path representation
/// uniform.
pub fn literal_id(literal: &str) -> String {
    let digest = Sha256::digest(literal.as_bytes());
    format!("literal:{:016x}", u64::from_be_bytes(digest[..8].try_into().unwrap()))
}

/// Builder for [`LocalStore`]; the store itself never mutates after `build`.
#[derive(Debug, Default)]
pub struct LocalStoreBuilder {
    store: LocalStore,
}

impl LocalStoreBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entity(mut self, id: &str, label: &str, description: &str) -> Self {
        self.store.labels.insert(
            id.to_string(),
            LabelEntry {
                label: label.to_string(),
                description: description.to_string(),
            },
        );
        self
    }

    pub fn relation(mut self, id: &str, label: &str) -> Self {
        self.store.labels.insert(
            id.to_string(),
            LabelEntry {
                label: label.to_string(),
                description: String::new(),
            },
        );
        self
    }

    /// Adds one triple. Objects without a declared label entry are treated as
    /// literals and rewritten to `literal:<hash>` entities.
    pub fn triple(mut self, subject: &str, predicate: &str, object: &str) -> Self {
        assert!(
            !subject.is_empty() && !predicate.is_empty() && !object.is_empty(),
            "triple components must be non-empty"
        );
        let object_id = if self.store.labels.contains_key(object) {
            object.to_string()
        } else {
            let id = literal_id(object);
            self.store.labels.insert(
                id.clone(),
                LabelEntry {
                    label: object.to_string(),
                    description: String::new(),
                },
            );
            id
        };
        self.store
            .forward
            .entry(subject.to_string())
            .or_default()
            .push((predicate.to_string(), object_id.clone()));
        self.store
            .backward
            .entry(object_id.clone())
            .or_default()
            .push((predicate.to_string(), subject.to_string()));
        self.store.triples.push(Triple {
            subject: subject.to_string(),
            predicate: predicate.to_string(),
            object: object_id,
        });
        self
    }

    pub fn build(self) -> LocalStore {
        self.store
    }
}

impl LocalStore {
    pub fn builder() -> LocalStoreBuilder {
        LocalStoreBuilder::new()
    }

    /// Loads a store from the tab-separated triples and labels files.
    pub fn load(triples_path: &Path, labels_path: &Path) -> Result<Self, KgError> {
        let labels_text = std::fs::read_to_string(labels_path)
            .map_err(|e| KgError::Load(format!("{}: {e}", labels_path.display())))?;
        let mut builder = LocalStoreBuilder::new();
        for (lineno, line) in labels_text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let id = parts.next().unwrap_or_default();
            let label = parts.next().ok_or_else(|| {
                KgError::Load(format!(
                    "{}:{}: expected id<TAB>label[<TAB>description]",
                    labels_path.display(),
                    lineno + 1
                ))
            })?;
            let description = parts.next().unwrap_or("");
            builder = builder.entity(id, label, description);
        }
        let triples_text = std::fs::read_to_string(triples_path)
            .map_err(|e| KgError::Load(format!("{}: {e}", triples_path.display())))?;
        for (lineno, line) in triples_text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.splitn(3, '\t').collect();
            if parts.len() != 3 || parts.iter().any(|p| p.is_empty()) {
                return Err(KgError::Load(format!(
                    "{}:{}: expected subject<TAB>predicate<TAB>object",
                    triples_path.display(),
                    lineno + 1
                )));
            }
            builder = builder.triple(parts[0], parts[1], parts[2]);
        }
        Ok(builder.build())
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn entity(&self, id: &str) -> Option<EntityRef> {
        self.labels
            .get(id)
            .map(|e| EntityRef::new(id, e.label.clone(), e.description.clone()))
    }

    fn entity_or_bare(&self, id: &str) -> EntityRef {
        self.entity(id)
            .unwrap_or_else(|| EntityRef::new(id, id, ""))
    }
}

impl KgBackend for LocalStore {
    fn search_entities(&self, query: &str, limit: usize) -> Result<Vec<EntityRef>, KgError> {
        check_search_args(query, limit)?;
        let needle = query.to_lowercase();
        // rank: exact label < label substring < description substring
        let mut hits: Vec<(u8, &String)> = Vec::new();
        for (id, entry) in &self.labels {
            let label = entry.label.to_lowercase();
            let rank = if label == needle {
                0
            } else if label.contains(&needle) {
                1
            } else if entry.description.to_lowercase().contains(&needle) {
                2
            } else {
                continue;
            };
            hits.push((rank, id));
        }
        hits.sort();
        Ok(hits
            .into_iter()
            .take(limit)
            .map(|(_, id)| self.entity_or_bare(id))
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
        let index = match direction {
            Direction::Forward => &self.forward,
            Direction::Backward => &self.backward,
        };
        let mut ids: BTreeSet<&str> = BTreeSet::new();
        if let Some(edges) = index.get(entity_id) {
            for (predicate, _) in edges {
                ids.insert(predicate);
            }
        }
        Ok(ids
            .into_iter()
            .map(|id| {
                let label = self
                    .labels
                    .get(id)
                    .map(|e| e.label.clone())
                    .unwrap_or_else(|| id.to_string());
                RelationRef::new(id, label)
            })
            .collect())
    }

    fn linked_entities(
        &self,
        entity_id: &str,
        relation_id: &str,
        direction: Direction,
        cap: usize,
    ) -> Result<Vec<EntityRef>, KgError> {
        check_cap(cap)?;
        let index = match direction {
            Direction::Forward => &self.forward,
            Direction::Backward => &self.backward,
        };
        let mut ids: BTreeSet<&str> = BTreeSet::new();
        if let Some(edges) = index.get(entity_id) {
            for (predicate, neighbor) in edges {
                if predicate == relation_id {
                    ids.insert(neighbor);
                }
            }
        }
        // ascending lexicographic id when the backend imposes no order
        Ok(ids
            .into_iter()
            .take(cap)
            .map(|id| self.entity_or_bare(id))
            .collect())
    }

    fn fetch_labels(&self, ids: &[String]) -> Result<HashMap<String, String>, KgError> {
        let mut out = HashMap::new();
        for id in ids {
            if let Some(entry) = self.labels.get(id) {
                out.insert(id.clone(), entry.label.clone());
            }
        }
        Ok(out)
    }
}
