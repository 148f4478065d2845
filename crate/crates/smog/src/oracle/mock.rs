//! Deterministic offline oracle backends.

use std::collections::VecDeque;
use std::sync::Mutex;

use crate::text::{cosine, cosine_to_unit, EmbeddingProvider, HashedNgramEmbedder};

use super::{ChatModel, OracleError, OracleKind, OracleRequest};

/// Fully deterministic mock: a pure function of (request kind, prompt
/// content).
///
/// Scoring replies use the unit-mapped cosine between the question embedding
/// and each item label embedding. Disambiguation picks the top-ranked
/// candidate. Sufficiency and final-answer judgments declare success exactly
/// when a single chain connects at least two of the listed topic entities
/// (chains render entities as `<id:label>` markers, so the check is
/// delimiter-safe).
pub struct MockChatModel {
    embedder: HashedNgramEmbedder,
}

impl MockChatModel {
    pub fn new() -> Self {
        Self {
            embedder: HashedNgramEmbedder::default(),
        }
    }
}

impl Default for MockChatModel {
    fn default() -> Self {
        Self::new()
    }
}

fn line_value<'a>(prompt: &'a str, prefix: &str) -> &'a str {
    prompt
        .lines()
        .find_map(|l| l.strip_prefix(prefix))
        .unwrap_or("")
        .trim()
}

/// Candidate lines sit between the "Candidates" header and the "Reply"
/// instruction.
fn candidate_lines(prompt: &str) -> Vec<&str> {
    let mut in_block = false;
    let mut out = Vec::new();
    for line in prompt.lines() {
        if line.starts_with("Candidates") {
            in_block = true;
            continue;
        }
        if in_block {
            if line.starts_with("Reply") || line.trim().is_empty() {
                break;
            }
            out.push(line);
        }
    }
    out
}

fn chain_lines(prompt: &str) -> Vec<&str> {
    prompt
        .lines()
        .filter(|l| {
            let t = l.trim_start();
            t.chars().next().map(|c| c.is_ascii_digit()).unwrap_or(false) && t.contains(". <")
        })
        .collect()
}

/// 1-based index of the first chain connecting two or more topics.
fn connecting_chain(prompt: &str) -> Option<usize> {
    let topics: Vec<String> = line_value(prompt, "Topics:")
        .split_whitespace()
        .map(|t| format!("<{t}:"))
        .collect();
    if topics.len() < 2 {
        return None;
    }
    for (i, line) in chain_lines(prompt).iter().enumerate() {
        let present = topics.iter().filter(|marker| line.contains(marker.as_str())).count();
        if present >= 2 {
            return Some(i + 1);
        }
    }
    None
}

impl ChatModel for MockChatModel {
    fn complete(&self, request: &OracleRequest) -> Result<String, OracleError> {
        let prompt = &request.rendered_prompt;
        match request.kind {
            OracleKind::ScoreRelations | OracleKind::ScoreEntities => {
                let query = line_value(prompt, "Question:");
                let query_vec = self.embedder.embed(query);
                let mut reply = String::new();
                for line in candidate_lines(prompt) {
                    let Some((id, label)) = line.split_once('\t') else {
                        continue;
                    };
                    let label = label.split('\t').next().unwrap_or(label);
                    let (c, _) = cosine(&self.embedder.embed(label), &query_vec)
                        .map_err(|e| OracleError::Transport(e.to_string()))?;
                    reply.push_str(&format!("{id}\t{:.6}\n", cosine_to_unit(c)));
                }
                Ok(reply)
            }
            OracleKind::Disambiguate => {
                let first_id = candidate_lines(prompt)
                    .first()
                    .and_then(|l| l.split('\t').next())
                    .unwrap_or("")
                    .to_string();
                Ok(format!("CHOICE: {first_id}"))
            }
            OracleKind::JudgeSufficiency => Ok(match connecting_chain(prompt) {
                Some(i) => format!("VERDICT: SUFFICIENT\nANSWER: chain {i} connects the topics"),
                None => "VERDICT: INSUFFICIENT".to_string(),
            }),
            OracleKind::FinalAnswer => Ok(match connecting_chain(prompt) {
                Some(i) => format!(
                    "VERDICT: MATCH\nRATIONALE: chain {i} links both topic entities\nCHAINS: {i}"
                ),
                None => "VERDICT: NO_MATCH\nRATIONALE: no chain links the topic entities\nCHAINS: none"
                    .to_string(),
            }),
        }
    }
}

/// Test backend replying with a fixed sequence of canned strings, repeating
/// the last one when exhausted.
pub struct SequenceChatModel {
    replies: Mutex<VecDeque<String>>,
    last: Mutex<String>,
}

impl SequenceChatModel {
    pub fn new(replies: &[&str]) -> Self {
        Self {
            replies: Mutex::new(replies.iter().map(|s| s.to_string()).collect()),
            last: Mutex::new(replies.last().unwrap_or(&"").to_string()),
        }
    }
}

impl ChatModel for SequenceChatModel {
    fn complete(&self, _request: &OracleRequest) -> Result<String, OracleError> {
        let mut replies = self.replies.lock().unwrap();
        match replies.pop_front() {
            Some(reply) => Ok(reply),
            None => Ok(self.last.lock().unwrap().clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{Oracle, OracleKind, Temperatures};
    use std::sync::Arc;

    fn mock_oracle() -> Oracle {
        Oracle::new(Arc::new(MockChatModel::new()), Temperatures::default())
    }

    #[test]
    fn mock_scores_equal_unit_cosine_of_labels() {
        let oracle = mock_oracle();
        let items = vec![
            ("P1".to_string(), "blood pressure".to_string()),
            ("P2".to_string(), "zebra".to_string()),
        ];
        let out = oracle
            .score_items(OracleKind::ScoreRelations, "blood pressure reading", "", &items)
            .unwrap();
        let e = HashedNgramEmbedder::default();
        let (c, _) = cosine(&e.embed("blood pressure"), &e.embed("blood pressure reading")).unwrap();
        let expected = format!("{:.6}", cosine_to_unit(c)).parse::<f64>().unwrap();
        assert!((out.scores["P1"] - expected).abs() < 1e-9);
        assert!(out.scores["P1"] > out.scores["P2"]);
    }

    #[test]
    fn mock_is_deterministic() {
        let oracle = mock_oracle();
        let items = vec![("P1".to_string(), "anything".to_string())];
        let a = oracle
            .score_items(OracleKind::ScoreEntities, "q", "ctx", &items)
            .unwrap();
        let b = oracle
            .score_items(OracleKind::ScoreEntities, "q", "ctx", &items)
            .unwrap();
        assert_eq!(a.scores, b.scores);
    }

    #[test]
    fn mock_disambiguation_picks_top_ranked() {
        let oracle = mock_oracle();
        let cands = vec![
            ("Q5".to_string(), "first".to_string(), "".to_string()),
            ("Q6".to_string(), "second".to_string(), "".to_string()),
        ];
        assert_eq!(oracle.disambiguate("d", &cands).unwrap(), Some("Q5".into()));
    }

    #[test]
    fn mock_sufficiency_requires_connecting_chain() {
        let oracle = mock_oracle();
        let topics = vec!["Q1".to_string(), "Q2".to_string()];
        let connected = "1. <Q1:gender> -[fwd P1:same as]-> <Q2:sex> (s_path=0.9000)";
        assert!(matches!(
            oracle.judge_sufficiency("q", &topics, connected).unwrap(),
            crate::oracle::SufficiencyVerdict::Sufficient { .. }
        ));
        let disconnected = "1. <Q1:gender> -[fwd P1:part of]-> <Q9:person> (s_path=0.5000)";
        assert!(matches!(
            oracle.judge_sufficiency("q", &topics, disconnected).unwrap(),
            crate::oracle::SufficiencyVerdict::Insufficient { malformed: false }
        ));
        // id prefixes must not false-positive: Q1 vs Q12
        let tricky = "1. <Q12:x> -[fwd P1:r]-> <Q2:y> (s_path=0.5000)";
        assert!(matches!(
            oracle.judge_sufficiency("q", &topics, tricky).unwrap(),
            crate::oracle::SufficiencyVerdict::Insufficient { malformed: false }
        ));
    }

    #[test]
    fn mock_final_answer_cites_connecting_chain() {
        let oracle = mock_oracle();
        let topics = vec!["Q1".to_string(), "Q2".to_string()];
        let chains = "1. <Q1:a> -[fwd P1:r]-> <Q3:c> (s_path=0.5000)\n2. <Q1:a> -[fwd P2:r2]-> <Q2:b> (s_path=0.4000)";
        let verdict = oracle.final_answer("q", &topics, chains, 2, false).unwrap();
        assert!(verdict.is_match);
        assert_eq!(verdict.cited_chain_indices, vec![2]);
        let verdict = oracle.final_answer("q", &topics, "", 0, false).unwrap();
        assert!(!verdict.is_match);
    }
}
