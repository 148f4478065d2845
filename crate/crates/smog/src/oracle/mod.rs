//! The LLM-oracle contract: four judgment operations over a chat-completion
//! backend, with strict line-oriented response parsing and documented
//! fallbacks so no unparseable output ever reaches callers.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod mock;
pub mod remote;

pub use mock::{MockChatModel, SequenceChatModel};
pub use remote::{CachedChatModel, RemoteChatConfig, RemoteChatModel};

const SCORE_RELATIONS_TEMPLATE: &str = include_str!("../../assets/prompts/score_relations.txt");
const SCORE_ENTITIES_TEMPLATE: &str = include_str!("../../assets/prompts/score_entities.txt");
const DISAMBIGUATE_TEMPLATE: &str = include_str!("../../assets/prompts/disambiguate.txt");
const SUFFICIENCY_TEMPLATE: &str = include_str!("../../assets/prompts/sufficiency.txt");
const FINAL_ANSWER_TEMPLATE: &str = include_str!("../../assets/prompts/final_answer.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OracleKind {
    Disambiguate,
    ScoreRelations,
    ScoreEntities,
    JudgeSufficiency,
    FinalAnswer,
}

/// A fully rendered request ready for the chat backend.
#[derive(Debug, Clone)]
pub struct OracleRequest {
    pub kind: OracleKind,
    pub rendered_prompt: String,
    pub temperature: f64,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("oracle transport error: {0}")]
    Transport(String),
}

/// Chat-completion backend contract. Implementations must be safe for
/// concurrent use.
pub trait ChatModel: Send + Sync {
    fn complete(&self, request: &OracleRequest) -> Result<String, OracleError>;
}

impl<T: ChatModel + ?Sized> ChatModel for Arc<T> {
    fn complete(&self, request: &OracleRequest) -> Result<String, OracleError> {
        (**self).complete(request)
    }
}

/// Sampling temperatures. Judgement calls (disambiguation, sufficiency,
/// final answer) run at the low setting.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct Temperatures {
    pub judgement: f64,
    pub scoring: f64,
}

impl Default for Temperatures {
    fn default() -> Self {
        Self {
            judgement: 0.0,
            scoring: 0.3,
        }
    }
}

/// Confidence scores keyed by item id, all clamped to [0,1], plus repair
/// flags describing what the parser had to fix.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ScoreOutcome {
    pub scores: BTreeMap<String, f64>,
    /// Ids whose reply score fell outside [0,1] and was clamped.
    pub clamped: Vec<String>,
    /// Ids absent from the reply, stored as 0.
    pub missing: Vec<String>,
    /// Set when the reply was unparseable after retry and everything
    /// defaulted to zero.
    pub fallback_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SufficiencyVerdict {
    Sufficient { draft: String },
    Insufficient { malformed: bool },
}

/// Final match verdict with its citation trail.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinalVerdict {
    pub is_match: bool,
    pub rationale: String,
    pub cited_chain_indices: Vec<usize>,
    pub half_stop: bool,
    /// Set when the reply was unparseable and the conservative no-match
    /// default fired.
    pub unparseable: bool,
}

fn render(template: &str, bindings: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in bindings {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

/// High-level oracle wrapping any [`ChatModel`].
pub struct Oracle {
    model: Arc<dyn ChatModel>,
    temperatures: Temperatures,
}

impl Oracle {
    pub fn new(model: Arc<dyn ChatModel>, temperatures: Temperatures) -> Self {
        Self {
            model,
            temperatures,
        }
    }

    fn complete_with_retry(&self, request: &OracleRequest) -> Result<String, OracleError> {
        match self.model.complete(request) {
            Ok(reply) => Ok(reply),
            Err(OracleError::Transport(_)) => self.model.complete(request),
            Err(e) => Err(e),
        }
    }

    /// Scores a batch of relations or entities. Every requested id is present
    /// in the outcome; repairs are flagged rather than surfaced as errors.
    pub fn score_items(
        &self,
        kind: OracleKind,
        query: &str,
        context: &str,
        items: &[(String, String)],
    ) -> Result<ScoreOutcome, OracleError> {
        let template = match kind {
            OracleKind::ScoreRelations => SCORE_RELATIONS_TEMPLATE,
            OracleKind::ScoreEntities => SCORE_ENTITIES_TEMPLATE,
            _ => {
                return Err(OracleError::Contract(format!(
                    "score_items called with {kind:?}"
                )))
            }
        };
        if items.is_empty() {
            return Err(OracleError::Contract("score_items needs items".into()));
        }
        {
            let mut seen = std::collections::HashSet::new();
            for (id, _) in items {
                if !seen.insert(id) {
                    return Err(OracleError::Contract(format!("duplicate item id {id}")));
                }
            }
        }
        let items_text = items
            .iter()
            .map(|(id, label)| format!("{id}\t{label}"))
            .collect::<Vec<_>>()
            .join("\n");
        let request = OracleRequest {
            kind,
            rendered_prompt: render(
                template,
                &[("query", query), ("context", context), ("items", &items_text)],
            ),
            temperature: self.temperatures.scoring,
        };
        let mut outcome = parse_scores(&self.complete_with_retry(&request)?, items);
        if outcome.scores.is_empty() {
            // one retry before the all-zero fallback
            outcome = parse_scores(&self.complete_with_retry(&request)?, items);
        }
        if outcome.scores.is_empty() {
            let mut fallback = ScoreOutcome {
                fallback_zero: true,
                ..Default::default()
            };
            for (id, _) in items {
                fallback.scores.insert(id.clone(), 0.0);
                fallback.missing.push(id.clone());
            }
            return Ok(fallback);
        }
        for (id, _) in items {
            if !outcome.scores.contains_key(id) {
                outcome.scores.insert(id.clone(), 0.0);
                outcome.missing.push(id.clone());
            }
        }
        Ok(outcome)
    }

    /// One disambiguation call; returns the chosen id if the reply parses.
    /// Membership validation and the retry/fallback policy live in the TEE
    /// pipeline.
    pub fn disambiguate(
        &self,
        description: &str,
        candidates: &[(String, String, String)],
    ) -> Result<Option<String>, OracleError> {
        if candidates.is_empty() {
            return Err(OracleError::Contract("disambiguate needs candidates".into()));
        }
        let items_text = candidates
            .iter()
            .map(|(id, label, desc)| format!("{id}\t{label}\t{desc}"))
            .collect::<Vec<_>>()
            .join("\n");
        let request = OracleRequest {
            kind: OracleKind::Disambiguate,
            rendered_prompt: render(
                DISAMBIGUATE_TEMPLATE,
                &[("description", description), ("items", &items_text)],
            ),
            temperature: self.temperatures.judgement,
        };
        let reply = self.complete_with_retry(&request)?;
        Ok(reply.lines().find_map(|line| {
            line.trim()
                .strip_prefix("CHOICE:")
                .map(|id| id.trim().to_string())
                .filter(|id| !id.is_empty())
        }))
    }

    /// Judges whether the aggregated chains suffice to answer the question.
    pub fn judge_sufficiency(
        &self,
        query: &str,
        topics: &[String],
        aggregated_chains: &str,
    ) -> Result<SufficiencyVerdict, OracleError> {
        if aggregated_chains.trim().is_empty() {
            return Err(OracleError::Contract(
                "judge_sufficiency needs non-empty chains".into(),
            ));
        }
        let topics_text = topics.join(" ");
        let request = OracleRequest {
            kind: OracleKind::JudgeSufficiency,
            rendered_prompt: render(
                SUFFICIENCY_TEMPLATE,
                &[
                    ("query", query),
                    ("topics", &topics_text),
                    ("chains", aggregated_chains),
                ],
            ),
            temperature: self.temperatures.judgement,
        };
        let reply = self.complete_with_retry(&request)?;
        Ok(parse_sufficiency(&reply))
    }

    /// Produces the final match verdict. `chain_count` bounds citation
    /// indices; malformed replies fall back to the conservative no-match.
    pub fn final_answer(
        &self,
        query: &str,
        topics: &[String],
        chains: &str,
        chain_count: usize,
        half_stop: bool,
    ) -> Result<FinalVerdict, OracleError> {
        let topics_text = topics.join(" ");
        let half = if half_stop { "true" } else { "false" };
        let chains_text = if chains.trim().is_empty() {
            "(none)"
        } else {
            chains
        };
        let request = OracleRequest {
            kind: OracleKind::FinalAnswer,
            rendered_prompt: render(
                FINAL_ANSWER_TEMPLATE,
                &[
                    ("query", query),
                    ("topics", &topics_text),
                    ("half_stop", half),
                    ("chains", chains_text),
                ],
            ),
            temperature: self.temperatures.judgement,
        };
        let reply = self.complete_with_retry(&request)?;
        match parse_final(&reply, chain_count) {
            Some(mut verdict) => {
                verdict.half_stop = half_stop;
                Ok(verdict)
            }
            None => {
                // retry once, then conservative no-match
                let reply = self.complete_with_retry(&request)?;
                Ok(match parse_final(&reply, chain_count) {
                    Some(mut verdict) => {
                        verdict.half_stop = half_stop;
                        verdict
                    }
                    None => FinalVerdict {
                        is_match: false,
                        rationale: "oracle reply unparseable; defaulting to no-match".into(),
                        cited_chain_indices: Vec::new(),
                        half_stop,
                        unparseable: true,
                    },
                })
            }
        }
    }
}

fn parse_scores(reply: &str, items: &[(String, String)]) -> ScoreOutcome {
    let known: std::collections::HashSet<&str> =
        items.iter().map(|(id, _)| id.as_str()).collect();
    let mut outcome = ScoreOutcome::default();
    for line in reply.lines() {
        let line = line.trim();
        let Some((id, score_text)) = line.split_once('\t') else {
            continue;
        };
        let id = id.trim();
        if !known.contains(id) {
            continue;
        }
        let Ok(score) = score_text.trim().parse::<f64>() else {
            continue;
        };
        if !score.is_finite() {
            continue;
        }
        let clamped = score.clamp(0.0, 1.0);
        if clamped != score {
            outcome.clamped.push(id.to_string());
        }
        outcome.scores.insert(id.to_string(), clamped);
    }
    outcome
}

fn parse_sufficiency(reply: &str) -> SufficiencyVerdict {
    let mut verdict = None;
    let mut draft = String::new();
    for line in reply.lines() {
        let line = line.trim();
        if let Some(v) = line.strip_prefix("VERDICT:") {
            verdict = Some(v.trim().to_uppercase());
        } else if let Some(a) = line.strip_prefix("ANSWER:") {
            draft = a.trim().to_string();
        }
    }
    match verdict.as_deref() {
        Some("SUFFICIENT") => SufficiencyVerdict::Sufficient { draft },
        Some("INSUFFICIENT") => SufficiencyVerdict::Insufficient { malformed: false },
        _ => SufficiencyVerdict::Insufficient { malformed: true },
    }
}

fn parse_final(reply: &str, chain_count: usize) -> Option<FinalVerdict> {
    let mut is_match = None;
    let mut rationale = String::new();
    let mut cited = Vec::new();
    for line in reply.lines() {
        let line = line.trim();
        if let Some(v) = line.strip_prefix("VERDICT:") {
            is_match = match v.trim().to_uppercase().as_str() {
                "MATCH" => Some(true),
                "NO_MATCH" => Some(false),
                _ => None,
            };
        } else if let Some(r) = line.strip_prefix("RATIONALE:") {
            rationale = r.trim().to_string();
        } else if let Some(c) = line.strip_prefix("CHAINS:") {
            cited = c
                .split(',')
                .filter_map(|part| part.trim().parse::<usize>().ok())
                .filter(|&i| i >= 1 && i <= chain_count)
                .collect();
        }
    }
    is_match.map(|is_match| FinalVerdict {
        is_match,
        rationale,
        cited_chain_indices: cited,
        half_stop: false,
        unparseable: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(n: usize) -> Vec<(String, String)> {
        (0..n).map(|i| (format!("P{i}"), format!("rel {i}"))).collect()
    }

    fn oracle_with(replies: &[&str]) -> Oracle {
        Oracle::new(
            Arc::new(SequenceChatModel::new(replies)),
            Temperatures::default(),
        )
    }

    #[test]
    fn score_parsing_clamps_and_fills_missing() {
        let oracle = oracle_with(&["P0\t1.7\nP1\t0.5\n"]);
        let out = oracle
            .score_items(OracleKind::ScoreRelations, "q", "", &items(3))
            .unwrap();
        assert_eq!(out.scores["P0"], 1.0);
        assert_eq!(out.scores["P1"], 0.5);
        assert_eq!(out.scores["P2"], 0.0);
        assert_eq!(out.clamped, vec!["P0"]);
        assert_eq!(out.missing, vec!["P2"]);
        assert!(!out.fallback_zero);
    }

    #[test]
    fn score_unknown_ids_dropped() {
        let oracle = oracle_with(&["P0\t0.4\nP99\t0.9\n"]);
        let out = oracle
            .score_items(OracleKind::ScoreRelations, "q", "", &items(1))
            .unwrap();
        assert_eq!(out.scores.len(), 1);
        assert!(!out.scores.contains_key("P99"));
    }

    #[test]
    fn score_garbage_falls_back_to_zero_after_retry() {
        let oracle = oracle_with(&["not parseable", "still not parseable"]);
        let out = oracle
            .score_items(OracleKind::ScoreRelations, "q", "", &items(2))
            .unwrap();
        assert!(out.fallback_zero);
        assert!(out.scores.values().all(|&v| v == 0.0));
    }

    #[test]
    fn score_single_item() {
        let oracle = oracle_with(&["P0\t0.25"]);
        let out = oracle
            .score_items(OracleKind::ScoreEntities, "q", "", &items(1))
            .unwrap();
        assert_eq!(out.scores.len(), 1);
    }

    #[test]
    fn score_rejects_duplicates_and_empty() {
        let oracle = oracle_with(&[""]);
        assert!(matches!(
            oracle.score_items(OracleKind::ScoreRelations, "q", "", &[]),
            Err(OracleError::Contract(_))
        ));
        let dup = vec![
            ("P0".to_string(), "a".to_string()),
            ("P0".to_string(), "b".to_string()),
        ];
        assert!(matches!(
            oracle.score_items(OracleKind::ScoreRelations, "q", "", &dup),
            Err(OracleError::Contract(_))
        ));
    }

    #[test]
    fn sufficiency_parsing() {
        assert_eq!(
            parse_sufficiency("VERDICT: SUFFICIENT\nANSWER: yes, linked"),
            SufficiencyVerdict::Sufficient {
                draft: "yes, linked".into()
            }
        );
        assert_eq!(
            parse_sufficiency("VERDICT: INSUFFICIENT"),
            SufficiencyVerdict::Insufficient { malformed: false }
        );
        assert_eq!(
            parse_sufficiency("I think maybe?"),
            SufficiencyVerdict::Insufficient { malformed: true }
        );
    }

    #[test]
    fn sufficiency_rejects_empty_chains() {
        let oracle = oracle_with(&["VERDICT: SUFFICIENT"]);
        assert!(matches!(
            oracle.judge_sufficiency("q", &[], "  "),
            Err(OracleError::Contract(_))
        ));
    }

    #[test]
    fn final_answer_parses_and_bounds_citations() {
        let verdict = parse_final(
            "VERDICT: MATCH\nRATIONALE: linked directly\nCHAINS: 1, 2, 9",
            2,
        )
        .unwrap();
        assert!(verdict.is_match);
        assert_eq!(verdict.cited_chain_indices, vec![1, 2]);
        assert_eq!(verdict.rationale, "linked directly");
    }

    #[test]
    fn final_answer_malformed_defaults_to_no_match() {
        let oracle = oracle_with(&["huh", "what"]);
        let verdict = oracle.final_answer("q", &[], "1. chain", 1, true).unwrap();
        assert!(!verdict.is_match);
        assert!(verdict.unparseable);
        assert!(verdict.half_stop);
    }

    #[test]
    fn disambiguate_extracts_choice() {
        let oracle = oracle_with(&["CHOICE: Q7"]);
        let cands = vec![("Q7".to_string(), "x".to_string(), "".to_string())];
        assert_eq!(oracle.disambiguate("d", &cands).unwrap(), Some("Q7".into()));
        let oracle = oracle_with(&["no choice here"]);
        assert_eq!(oracle.disambiguate("d", &cands).unwrap(), None);
    }

    #[test]
    fn prompt_templates_contain_contract_fields() {
        // golden checks on rendered prompts
        let p = render(
            SCORE_RELATIONS_TEMPLATE,
            &[("query", "THE_QUERY"), ("context", "THE_CTX"), ("items", "P1\tx")],
        );
        assert!(p.contains("THE_QUERY") && p.contains("THE_CTX") && p.contains("P1\tx"));
        assert!(!p.contains('{'), "unfilled placeholder in {p}");
        let p = render(
            FINAL_ANSWER_TEMPLATE,
            &[
                ("query", "Q"),
                ("topics", "T"),
                ("half_stop", "true"),
                ("chains", "C"),
            ],
        );
        assert!(!p.contains('{'), "unfilled placeholder in {p}");
    }
}
