//! Per-pair orchestration: topic extraction on both attributes, a single
//! bridging exploration seeded with both topic entities, the final oracle
//! verdict, and the newline-delimited JSON decision trace.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::explore::{
    aggregate_chains, BeamConfig, ExplorationResult, Explorer, ExploreError, ReasoningPath,
    StopMode,
};
use crate::kg::KgBackend;
use crate::oracle::{Oracle, OracleError};
use crate::tee::{AttributeSpec, TeeError, TeeOutcome, TeePipeline};
use crate::text::{EmbeddingProvider, TextConfig};

/// Decision trace schema version, bumped on any breaking format change.
pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum MatchError {
    #[error(transparent)]
    Tee(#[from] TeeError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("trace io error: {0}")]
    TraceIo(String),
}

/// One source/target attribute pair, optionally carrying its gold label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributePair {
    pub source: AttributeSpec,
    pub target: AttributeSpec,
    pub gold_label: Option<bool>,
}

/// Stop condition recorded on a decision. Extends the exploration stop modes
/// with the case where no topic entity was found on either side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionStop {
    AnswerFound,
    HalfStop,
    NoPaths,
    NoTopicEntity,
}

impl From<StopMode> for DecisionStop {
    fn from(mode: StopMode) -> Self {
        match mode {
            StopMode::AnswerFound => DecisionStop::AnswerFound,
            StopMode::HalfStop => DecisionStop::HalfStop,
            StopMode::NoPaths => DecisionStop::NoPaths,
        }
    }
}

/// Complete per-pair verdict with the full trace needed to replay it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchDecision {
    pub pair: AttributePair,
    pub predicted: bool,
    pub stop_mode: DecisionStop,
    pub chains: Vec<ReasoningPath>,
    pub tee_source: TeeOutcome,
    pub tee_target: TeeOutcome,
    pub rationale: String,
    pub question: String,
    pub exploration: Option<ExplorationResult>,
}

/// Deterministic yes/no matching question for a pair.
pub fn build_question(pair: &AttributePair) -> String {
    format!(
        "Do the source attribute '{}.{}' ({}) and the target attribute '{}.{}' ({}) denote the same concept?",
        pair.source.table_name,
        pair.source.attribute_name,
        describe(&pair.source),
        pair.target.table_name,
        pair.target.attribute_name,
        describe(&pair.target),
    )
}

fn describe(attr: &AttributeSpec) -> &str {
    if attr.description.trim().is_empty() {
        "no description"
    } else {
        attr.description.trim()
    }
}

pub struct Matcher<'a> {
    pub kg: &'a dyn KgBackend,
    pub oracle: &'a Oracle,
    pub provider: &'a dyn EmbeddingProvider,
    pub text: &'a TextConfig,
    pub beam: &'a BeamConfig,
}

impl<'a> Matcher<'a> {
    pub fn new(
        kg: &'a dyn KgBackend,
        oracle: &'a Oracle,
        provider: &'a dyn EmbeddingProvider,
        text: &'a TextConfig,
        beam: &'a BeamConfig,
    ) -> Self {
        Self {
            kg,
            oracle,
            provider,
            text,
            beam,
        }
    }

    /// Runs the full three-phase flow for one pair. Every degenerate branch
    /// yields `predicted = false`, never a crash.
    pub fn match_pair(&self, pair: &AttributePair) -> Result<MatchDecision, MatchError> {
        let tee = TeePipeline::new(self.kg, self.provider, self.oracle, self.text);
        let tee_source = tee.extract_topic_entity(&pair.source)?;
        let tee_target = tee.extract_topic_entity(&pair.target)?;
        let question = build_question(pair);

        let mut topics = Vec::new();
        for outcome in [&tee_source, &tee_target] {
            if let TeeOutcome::Selected(selection) = outcome {
                if !topics.iter().any(|t: &crate::kg::EntityRef| t.id == selection.chosen.id) {
                    topics.push(selection.chosen.clone());
                }
            }
        }

        if topics.is_empty() {
            return Ok(MatchDecision {
                pair: pair.clone(),
                predicted: false,
                stop_mode: DecisionStop::NoTopicEntity,
                chains: Vec::new(),
                tee_source,
                tee_target,
                rationale: "no topic entity found on either side".into(),
                question,
                exploration: None,
            });
        }

        let explorer = Explorer::new(self.kg, self.oracle, self.beam);
        let exploration = explorer.explore(&topics, &question)?;
        let topic_ids: Vec<String> = topics.iter().map(|t| t.id.clone()).collect();
        let chains_text = aggregate_chains(&exploration.chains);
        let verdict = self.oracle.final_answer(
            &question,
            &topic_ids,
            &chains_text,
            exploration.chains.len(),
            exploration.stop_mode == StopMode::HalfStop,
        )?;

        Ok(MatchDecision {
            pair: pair.clone(),
            predicted: verdict.is_match,
            stop_mode: exploration.stop_mode.into(),
            chains: exploration.chains.clone(),
            tee_source,
            tee_target,
            rationale: verdict.rationale,
            question,
            exploration: Some(exploration),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct TraceRecord {
    schema_version: u32,
    #[serde(flatten)]
    decision: MatchDecision,
}

/// Writes decisions as newline-delimited JSON, one object per pair.
pub fn write_traces(path: &Path, decisions: &[MatchDecision]) -> Result<(), MatchError> {
    let file = std::fs::File::create(path)
        .map_err(|e| MatchError::TraceIo(format!("{}: {e}", path.display())))?;
    let mut writer = std::io::BufWriter::new(file);
    for decision in decisions {
        let record = TraceRecord {
            schema_version: TRACE_SCHEMA_VERSION,
            decision: decision.clone(),
        };
        let line = serde_json::to_string(&record)
            .map_err(|e| MatchError::TraceIo(e.to_string()))?;
        writeln!(writer, "{line}").map_err(|e| MatchError::TraceIo(e.to_string()))?;
    }
    writer
        .flush()
        .map_err(|e| MatchError::TraceIo(e.to_string()))
}

/// Reads a decision trace file back.
pub fn read_traces(path: &Path) -> Result<Vec<MatchDecision>, MatchError> {
    let file = std::fs::File::open(path)
        .map_err(|e| MatchError::TraceIo(format!("{}: {e}", path.display())))?;
    let reader = std::io::BufReader::new(file);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| MatchError::TraceIo(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord = serde_json::from_str(&line).map_err(|e| {
            MatchError::TraceIo(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        out.push(record.decision);
    }
    Ok(out)
}
