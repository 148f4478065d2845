//! Topic Entity Extraction: the four-stage pipeline mapping an attribute
//! description to a single topic entity, recording every intermediate score
//! for later analytics.
//!
//! Stage 1 generates hybrid-scored keywords, stage 2 retrieves and
//! deduplicates entity candidates, stage 3 reranks them by hybrid relevance
//! to the full description, and stage 4 asks the oracle to disambiguate
//! among the top candidates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::{EntityRef, KgBackend, KgError};
use crate::oracle::{Oracle, OracleError};
use crate::text::{
    bm25, cosine, cosine_to_unit, min_max_normalize, tokenize_filter, top_k_keywords, CorpusStats,
    EmbeddingProvider, HybridScore, ScoreError, TextConfig, TokenSet,
};

/// Separator between an entity label and description in `full_text`.
const FULL_TEXT_SEPARATOR: &str = " — ";

#[derive(Debug, Error)]
pub enum TeeError {
    #[error(transparent)]
    Kg(#[from] KgError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error("contract violation: {0}")]
    Contract(String),
}

/// Which side of the schema pair an attribute belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaSide {
    Source,
    Target,
}

/// One schema attribute and its free-text description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub side: SchemaSide,
    pub table_name: String,
    pub attribute_name: String,
    pub description: String,
}

/// A retrieval candidate with its stage-3 hybrid score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub entity: EntityRef,
    pub full_text: String,
    pub score: HybridScore,
}

/// The outcome of TEE for one attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSelection {
    pub chosen: EntityRef,
    /// The top candidates shown to the oracle, descending hybrid score.
    pub candidates: Vec<ScoredCandidate>,
    pub keywords: Vec<String>,
    /// Set when the oracle failed to return a valid candidate id twice and
    /// the top-ranked candidate was used instead.
    pub fallback_used: bool,
}

impl TopicSelection {
    /// Hybrid score of the chosen candidate.
    pub fn chosen_score(&self) -> HybridScore {
        self.candidates
            .iter()
            .find(|c| c.entity.id == self.chosen.id)
            .map(|c| c.score)
            .expect("chosen id is always among candidates")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TeeOutcome {
    Selected(TopicSelection),
    NoTopicEntity { reason: String },
}

impl TeeOutcome {
    pub fn selection(&self) -> Option<&TopicSelection> {
        match self {
            TeeOutcome::Selected(s) => Some(s),
            TeeOutcome::NoTopicEntity { .. } => None,
        }
    }
}

/// Pipeline handle; per-attribute runs are independent and share only the
/// immutable backends.
pub struct TeePipeline<'a> {
    pub kg: &'a dyn KgBackend,
    pub provider: &'a dyn EmbeddingProvider,
    pub oracle: &'a Oracle,
    pub text: &'a TextConfig,
    /// Stage-1 keyword count.
    pub keyword_k: usize,
    /// Per-keyword entity search limit (stage 2).
    pub search_limit: usize,
    /// Candidates kept after reranking (stage 3/4).
    pub rerank_k: usize,
}

impl<'a> TeePipeline<'a> {
    pub fn new(
        kg: &'a dyn KgBackend,
        provider: &'a dyn EmbeddingProvider,
        oracle: &'a Oracle,
        text: &'a TextConfig,
    ) -> Self {
        Self {
            kg,
            provider,
            oracle,
            text,
            keyword_k: 5,
            search_limit: 5,
            rerank_k: 5,
        }
    }

    /// Stage 2: per-keyword search, union deduplicated by entity id.
    pub fn retrieve_candidates(&self, keywords: &[String]) -> Result<Vec<ScoredCandidate>, TeeError> {
        if keywords.is_empty() {
            return Err(TeeError::Contract("keyword list must be non-empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for keyword in keywords {
            for entity in self.kg.search_entities(keyword, self.search_limit)? {
                if seen.insert(entity.id.clone()) {
                    let full_text = if entity.description.is_empty() {
                        entity.label.clone()
                    } else {
                        format!("{}{FULL_TEXT_SEPARATOR}{}", entity.label, entity.description)
                    };
                    out.push(ScoredCandidate {
                        entity,
                        full_text,
                        score: HybridScore {
                            bm25_raw: 0.0,
                            bm25_norm: 0.0,
                            emb: 0.0,
                            total: 0.0,
                        },
                    });
                }
            }
        }
        Ok(out)
    }

    /// Stage 3: hybrid rerank against the attribute description; top-K kept,
    /// ties broken by ascending entity id.
    pub fn rerank_candidates(
        &self,
        description: &str,
        mut candidates: Vec<ScoredCandidate>,
    ) -> Result<Vec<ScoredCandidate>, TeeError> {
        if candidates.is_empty() {
            return Err(TeeError::Contract("candidate list must be non-empty".into()));
        }
        let query = tokenize_filter(description, &self.text.stopwords);
        let docs: Vec<TokenSet> = candidates
            .iter()
            .map(|c| tokenize_filter(&c.full_text, &self.text.stopwords))
            .collect();
        let stats = CorpusStats::build(&docs.iter().collect::<Vec<_>>());
        let raw: Vec<f64> = docs
            .iter()
            .map(|doc| bm25(&query, doc, &stats, self.text.bm25))
            .collect();
        let norm = min_max_normalize(&raw);
        let desc_vec = self.provider.embed(description);
        for (i, candidate) in candidates.iter_mut().enumerate() {
            let (c, _) = cosine(&self.provider.embed(&candidate.full_text), &desc_vec)?;
            let emb = cosine_to_unit(c);
            candidate.score = HybridScore {
                bm25_raw: raw[i],
                bm25_norm: norm[i],
                emb,
                total: self.text.weights.combine(norm[i], emb)?,
            };
        }
        candidates.sort_by(|a, b| {
            b.score
                .total
                .partial_cmp(&a.score.total)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.entity.id.cmp(&b.entity.id))
        });
        candidates.truncate(self.rerank_k);
        Ok(candidates)
    }

    /// Stage 4: oracle disambiguation among the top candidates, with one
    /// retry and a flagged fallback to the top-ranked candidate.
    pub fn disambiguate(
        &self,
        description: &str,
        top_candidates: &[ScoredCandidate],
    ) -> Result<(EntityRef, bool), TeeError> {
        if top_candidates.is_empty() || top_candidates.len() > self.rerank_k {
            return Err(TeeError::Contract(format!(
                "disambiguate needs 1..={} candidates",
                self.rerank_k
            )));
        }
        let items: Vec<(String, String, String)> = top_candidates
            .iter()
            .map(|c| {
                (
                    c.entity.id.clone(),
                    c.entity.label.clone(),
                    c.entity.description.clone(),
                )
            })
            .collect();
        for _ in 0..2 {
            if let Some(choice) = self.oracle.disambiguate(description, &items)? {
                if let Some(candidate) = top_candidates.iter().find(|c| c.entity.id == choice) {
                    return Ok((candidate.entity.clone(), false));
                }
            }
        }
        Ok((top_candidates[0].entity.clone(), true))
    }

    /// Full stage 1→4 composition for one attribute.
    pub fn extract_topic_entity(&self, attr: &AttributeSpec) -> Result<TeeOutcome, TeeError> {
        let description = if attr.description.trim().is_empty() {
            attr.attribute_name.clone()
        } else {
            attr.description.clone()
        };
        if description.trim().is_empty() {
            return Ok(TeeOutcome::NoTopicEntity {
                reason: "attribute has no description and no name".into(),
            });
        }
        let keywords = top_k_keywords(&description, self.keyword_k, self.text, self.provider)?;
        if keywords.is_empty() {
            return Ok(TeeOutcome::NoTopicEntity {
                reason: "no keywords survive tokenization".into(),
            });
        }
        let candidates = self.retrieve_candidates(&keywords)?;
        if candidates.is_empty() {
            return Ok(TeeOutcome::NoTopicEntity {
                reason: "entity search returned no candidates".into(),
            });
        }
        let reranked = self.rerank_candidates(&description, candidates)?;
        let (chosen, fallback_used) = self.disambiguate(&description, &reranked)?;
        Ok(TeeOutcome::Selected(TopicSelection {
            chosen,
            candidates: reranked,
            keywords,
            fallback_used,
        }))
    }
}
