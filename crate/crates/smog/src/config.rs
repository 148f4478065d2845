//! Run configuration: TOML loading, validation, and construction of the
//! concrete backends a run needs.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::ColumnMap;
use crate::explore::BeamConfig;
use crate::kg::{HttpTransport, KgBackend, LocalStore, RemoteConfig, RemoteKg};
use crate::oracle::{
    CachedChatModel, ChatModel, MockChatModel, Oracle, RemoteChatConfig, RemoteChatModel,
    Temperatures,
};
use crate::text::{
    Bm25Params, HashedNgramEmbedder, HybridWeights, StopwordList, TextConfig,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(String),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Which knowledge-graph backend a run talks to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KgChoice {
    Local,
    Remote,
}

/// Which language-model oracle a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleChoice {
    Mock,
    Remote,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KgSection {
    pub backend: KgChoice,
    /// Tab-separated `subject predicate object` triples (local backend).
    pub triples_path: Option<PathBuf>,
    /// Tab-separated `id label description` lines (local backend).
    pub labels_path: Option<PathBuf>,
    pub remote: Option<RemoteConfig>,
}

impl Default for KgSection {
    fn default() -> Self {
        Self {
            backend: KgChoice::Local,
            triples_path: None,
            labels_path: None,
            remote: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub backend: OracleChoice,
    pub remote: Option<RemoteChatConfig>,
    pub temperatures: Temperatures,
    /// Reply cache for the remote oracle; replays identical prompts.
    pub cache_dir: Option<PathBuf>,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            backend: OracleChoice::Mock,
            remote: None,
            temperatures: Temperatures::default(),
            cache_dir: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringSection {
    pub k1: f64,
    pub b: f64,
    pub lexical_weight: f64,
    pub semantic_weight: f64,
    /// Optional stopword list override, one word per line.
    pub stopwords_path: Option<PathBuf>,
    pub embedding_dim: usize,
}

impl Default for ScoringSection {
    fn default() -> Self {
        let bm25 = Bm25Params::default();
        let weights = HybridWeights::default();
        Self {
            k1: bm25.k1,
            b: bm25.b,
            lexical_weight: weights.lexical,
            semantic_weight: weights.semantic,
            stopwords_path: None,
            embedding_dim: 256,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeeSection {
    pub keyword_k: usize,
    pub search_limit: usize,
    pub rerank_k: usize,
}

impl Default for TeeSection {
    fn default() -> Self {
        Self {
            keyword_k: 5,
            search_limit: 5,
            rerank_k: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Worker threads for pair matching; output order is input order
    /// regardless of the setting.
    pub workers: usize,
    /// Default decision-trace output path.
    pub out: Option<PathBuf>,
    pub columns: ColumnMap,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            workers: 1,
            out: None,
            columns: ColumnMap::default(),
        }
    }
}

/// Complete run configuration; every section has working defaults, so an
/// empty file is valid (local store empty, mock oracle).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kg: KgSection,
    pub oracle: OracleSection,
    pub scoring: ScoringSection,
    pub tee: TeeSection,
    pub beam: BeamConfig,
    pub run: RunSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        if self.kg.backend == KgChoice::Remote && self.kg.remote.is_none() {
            return fail("kg.backend = \"remote\" requires a [kg.remote] section".into());
        }
        if self.kg.backend == KgChoice::Local && self.kg.triples_path.is_some() != self.kg.labels_path.is_some() {
            return fail("local kg needs both triples_path and labels_path (or neither)".into());
        }
        if self.oracle.backend == OracleChoice::Remote && self.oracle.remote.is_none() {
            return fail("oracle.backend = \"remote\" requires an [oracle.remote] section".into());
        }
        let s = &self.scoring;
        if s.k1 < 0.0 || !(0.0..=1.0).contains(&s.b) {
            return fail(format!("bm25 parameters out of range: k1={} b={}", s.k1, s.b));
        }
        if s.lexical_weight < 0.0
            || s.semantic_weight < 0.0
            || (s.lexical_weight + s.semantic_weight - 1.0).abs() > 1e-9
        {
            return fail(format!(
                "scoring weights must be non-negative and sum to 1, got {} + {}",
                s.lexical_weight, s.semantic_weight
            ));
        }
        if s.embedding_dim == 0 {
            return fail("embedding_dim must be positive".into());
        }
        if self.tee.keyword_k == 0 || self.tee.search_limit == 0 || self.tee.rerank_k == 0 {
            return fail("tee limits must all be positive".into());
        }
        let b = &self.beam;
        if b.width == 0 || b.max_depth == 0 || b.entity_cap == 0 || b.relation_cap == 0 {
            return fail("beam width, max_depth, entity_cap and relation_cap must be positive".into());
        }
        if !(0.0..=1.0).contains(&b.relation_floor) {
            return fail(format!("beam.relation_floor must be in [0, 1], got {}", b.relation_floor));
        }
        if self.run.workers == 0 {
            return fail("run.workers must be positive".into());
        }
        Ok(())
    }

    /// Text-scoring configuration with any stopword override applied.
    pub fn text_config(&self) -> Result<TextConfig, ConfigError> {
        let stopwords = match &self.scoring.stopwords_path {
            Some(path) => StopwordList::from_file(path)
                .map_err(|e| ConfigError::Io(e.to_string()))?,
            None => StopwordList::bundled(),
        };
        Ok(TextConfig {
            stopwords,
            bm25: Bm25Params {
                k1: self.scoring.k1,
                b: self.scoring.b,
            },
            weights: HybridWeights {
                lexical: self.scoring.lexical_weight,
                semantic: self.scoring.semantic_weight,
            },
        })
    }

    pub fn embedder(&self) -> HashedNgramEmbedder {
        HashedNgramEmbedder::new(self.scoring.embedding_dim)
    }

    pub fn build_kg(&self) -> Result<Box<dyn KgBackend>, ConfigError> {
        match self.kg.backend {
            KgChoice::Local => match (&self.kg.triples_path, &self.kg.labels_path) {
                (Some(triples), Some(labels)) => Ok(Box::new(
                    LocalStore::load(triples, labels)
                        .map_err(|e| ConfigError::Io(e.to_string()))?,
                )),
                _ => Ok(Box::new(LocalStore::builder().build())),
            },
            KgChoice::Remote => {
                let remote = self
                    .kg
                    .remote
                    .clone()
                    .expect("validated remote kg section");
                let transport = HttpTransport::new(remote.timeout_ms)
                    .map_err(|e| ConfigError::Io(e.to_string()))?;
                Ok(Box::new(RemoteKg::new(remote, transport)))
            }
        }
    }

    pub fn build_oracle(&self) -> Result<Oracle, ConfigError> {
        let model: Arc<dyn ChatModel> = match self.oracle.backend {
            OracleChoice::Mock => Arc::new(MockChatModel::new()),
            OracleChoice::Remote => {
                let remote = self
                    .oracle
                    .remote
                    .clone()
                    .expect("validated remote oracle section");
                let inner = RemoteChatModel::new(remote)
                    .map_err(|e| ConfigError::Io(e.to_string()))?;
                match &self.oracle.cache_dir {
                    Some(dir) => Arc::new(CachedChatModel::new(inner, dir.clone())),
                    None => Arc::new(inner),
                }
            }
        };
        Ok(Oracle::new(model, self.oracle.temperatures))
    }
}
