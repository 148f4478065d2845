//! Dataset loading, confusion/metric computation, and the two analytic
//! studies: reasoning-chain depth and TEE score means by prediction group.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matcher::{AttributePair, MatchDecision};
use crate::tee::{AttributeSpec, SchemaSide, TeeOutcome};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot read pairs file: {0}")]
    Io(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("contract violation: {0}")]
    Contract(String),
}

/// Confusion cell of one evaluated decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    Tp,
    Tn,
    Fn,
    Fp,
}

impl Group {
    pub fn classify(predicted: bool, gold: bool) -> Self {
        match (predicted, gold) {
            (true, true) => Group::Tp,
            (false, false) => Group::Tn,
            (false, true) => Group::Fn,
            (true, false) => Group::Fp,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Group::Tp => "TP",
            Group::Tn => "TN",
            Group::Fn => "FN",
            Group::Fp => "FP",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn new(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Flags raised when a ratio had a zero denominator and was reported as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricFlags {
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Metrics {
    pub counts: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub flags: MetricFlags,
}

/// Precision/recall/F1 from raw confusion counts. Undefined ratios are
/// reported as 0 with a flag.
pub fn metrics_from_counts(counts: ConfusionCounts) -> Metrics {
    let mut flags = MetricFlags::default();
    let precision = if counts.tp + counts.fp == 0 {
        flags.precision_undefined = true;
        0.0
    } else {
        counts.tp as f64 / (counts.tp + counts.fp) as f64
    };
    let recall = if counts.tp + counts.fn_ == 0 {
        flags.recall_undefined = true;
        0.0
    } else {
        counts.tp as f64 / (counts.tp + counts.fn_) as f64
    };
    let f1 = if precision + recall == 0.0 {
        flags.f1_undefined = true;
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Metrics {
        counts,
        precision,
        recall,
        f1,
        flags,
    }
}

fn gold_of(decision: &MatchDecision) -> Result<bool, EvalError> {
    decision
        .pair
        .gold_label
        .ok_or_else(|| EvalError::Contract("decision is missing its gold label".into()))
}

/// Confusion counts and metrics over a decision list.
pub fn compute_metrics(decisions: &[MatchDecision]) -> Result<Metrics, EvalError> {
    let mut counts = ConfusionCounts::default();
    for decision in decisions {
        match Group::classify(decision.predicted, gold_of(decision)?) {
            Group::Tp => counts.tp += 1,
            Group::Tn => counts.tn += 1,
            Group::Fn => counts.fn_ += 1,
            Group::Fp => counts.fp += 1,
        }
    }
    Ok(metrics_from_counts(counts))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DepthStats {
    /// Decisions in the group.
    pub count: usize,
    /// Mean over all final-chain depths in the group; a decision without
    /// chains contributes a single flagged depth of 0.
    pub mean_depth: f64,
    pub empty_chain_decisions: usize,
}

/// Mean reasoning-chain depth per prediction group. Groups without members
/// report count 0.
pub fn depth_analysis(decisions: &[MatchDecision]) -> Result<BTreeMap<Group, DepthStats>, EvalError> {
    let mut depths: BTreeMap<Group, Vec<f64>> = BTreeMap::new();
    let mut stats: BTreeMap<Group, DepthStats> = BTreeMap::new();
    for group in [Group::Tp, Group::Tn, Group::Fn, Group::Fp] {
        depths.insert(group, Vec::new());
        stats.insert(group, DepthStats::default());
    }
    for decision in decisions {
        let group = Group::classify(decision.predicted, gold_of(decision)?);
        let entry = stats.get_mut(&group).unwrap();
        entry.count += 1;
        let pool = depths.get_mut(&group).unwrap();
        if decision.chains.is_empty() {
            entry.empty_chain_decisions += 1;
            pool.push(0.0);
        } else {
            pool.extend(decision.chains.iter().map(|c| c.depth() as f64));
        }
    }
    for (group, pool) in depths {
        let entry = stats.get_mut(&group).unwrap();
        entry.mean_depth = if pool.is_empty() {
            0.0
        } else {
            pool.iter().sum::<f64>() / pool.len() as f64
        };
    }
    Ok(stats)
}

/// Mean TEE scores of the chosen topic candidate, both raw and normalized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TeeSideStats {
    /// Attributes contributing (sides where TEE produced a topic).
    pub count: usize,
    pub bm25_raw_mean: f64,
    pub bm25_norm_mean: f64,
    pub emb_mean: f64,
    pub total_mean: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TeeGroupStats {
    pub source: TeeSideStats,
    pub target: TeeSideStats,
}

/// Mean TEE scores per prediction group and schema side. Groups with no
/// members are absent from the map.
pub fn tee_score_analysis(
    decisions: &[MatchDecision],
) -> Result<BTreeMap<Group, TeeGroupStats>, EvalError> {
    struct Acc {
        bm25_raw: f64,
        bm25_norm: f64,
        emb: f64,
        total: f64,
        count: usize,
    }
    impl Default for Acc {
        fn default() -> Self {
            Self {
                bm25_raw: 0.0,
                bm25_norm: 0.0,
                emb: 0.0,
                total: 0.0,
                count: 0,
            }
        }
    }
    let mut groups_seen: BTreeMap<Group, ()> = BTreeMap::new();
    let mut side_acc: BTreeMap<(Group, u8), Acc> = BTreeMap::new();

    for decision in decisions {
        let group = Group::classify(decision.predicted, gold_of(decision)?);
        groups_seen.insert(group, ());
        for (side_idx, outcome) in [(0u8, &decision.tee_source), (1u8, &decision.tee_target)] {
            if let TeeOutcome::Selected(selection) = outcome {
                let score = selection.chosen_score();
                let entry = side_acc.entry((group, side_idx)).or_default();
                entry.bm25_raw += score.bm25_raw;
                entry.bm25_norm += score.bm25_norm;
                entry.emb += score.emb;
                entry.total += score.total;
                entry.count += 1;
            }
        }
    }

    let mut out = BTreeMap::new();
    for (group, ()) in groups_seen {
        let mut stats = TeeGroupStats::default();
        for (side_idx, slot) in [(0u8, &mut stats.source), (1u8, &mut stats.target)] {
            if let Some(entry) = side_acc.get(&(group, side_idx)) {
                if entry.count > 0 {
                    let n = entry.count as f64;
                    *slot = TeeSideStats {
                        count: entry.count,
                        bm25_raw_mean: entry.bm25_raw / n,
                        bm25_norm_mean: entry.bm25_norm / n,
                        emb_mean: entry.emb / n,
                        total_mean: entry.total / n,
                    };
                }
            }
        }
        out.insert(group, stats);
    }
    Ok(out)
}

/// Full evaluation report: metrics plus both analytic tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub metrics: Metrics,
    pub depth_by_group: BTreeMap<Group, DepthStats>,
    pub tee_by_group: BTreeMap<Group, TeeGroupStats>,
}

pub fn evaluate(decisions: &[MatchDecision]) -> Result<EvalReport, EvalError> {
    Ok(EvalReport {
        metrics: compute_metrics(decisions)?,
        depth_by_group: depth_analysis(decisions)?,
        tee_by_group: tee_score_analysis(decisions)?,
    })
}

impl EvalReport {
    /// Human-readable report; percentages and depths at two decimals.
    pub fn render_text(&self) -> String {
        let m = &self.metrics;
        let mut out = String::new();
        out.push_str("== Metrics ==\n");
        out.push_str(&format!(
            "pairs: {}  tp: {}  fp: {}  fn: {}  tn: {}\n",
            m.counts.total(),
            m.counts.tp,
            m.counts.fp,
            m.counts.fn_,
            m.counts.tn
        ));
        out.push_str(&format!(
            "precision: {:.2}%{}  recall: {:.2}%{}  f1: {:.2}%{}\n",
            m.precision * 100.0,
            if m.flags.precision_undefined { " (undefined->0)" } else { "" },
            m.recall * 100.0,
            if m.flags.recall_undefined { " (undefined->0)" } else { "" },
            m.f1 * 100.0,
            if m.flags.f1_undefined { " (undefined->0)" } else { "" },
        ));
        out.push_str("\n== Reasoning-chain depth by group ==\n");
        for (group, stats) in &self.depth_by_group {
            out.push_str(&format!(
                "{:<3} count: {:<6} avg depth: {:.2}{}\n",
                group.label(),
                stats.count,
                stats.mean_depth,
                if stats.empty_chain_decisions > 0 {
                    format!("  ({} empty-chain decisions at depth 0)", stats.empty_chain_decisions)
                } else {
                    String::new()
                }
            ));
        }
        out.push_str("\n== TEE scores by group (chosen candidate means) ==\n");
        out.push_str("group side   count  bm25_raw  bm25_norm  emb    score\n");
        for (group, stats) in &self.tee_by_group {
            for (name, side) in [("source", &stats.source), ("target", &stats.target)] {
                out.push_str(&format!(
                    "{:<5} {:<6} {:<6} {:<9.2} {:<10.2} {:<6.2} {:.2}\n",
                    group.label(),
                    name,
                    side.count,
                    side.bm25_raw_mean,
                    side.bm25_norm_mean,
                    side.emb_mean,
                    side.total_mean
                ));
            }
        }
        out
    }
}

/// Column names of the delimited pairs file; all overridable in config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnMap {
    pub source_table: String,
    pub source_attr: String,
    pub source_desc: String,
    pub target_table: String,
    pub target_attr: String,
    pub target_desc: String,
    pub label: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            source_table: "source_table".into(),
            source_attr: "source_attr".into(),
            source_desc: "source_desc".into(),
            target_table: "target_table".into(),
            target_attr: "target_attr".into(),
            target_desc: "target_desc".into(),
            label: "label".into(),
        }
    }
}

/// Loads attribute pairs from a CSV file with a header row. Labels must be
/// `0` or `1`.
pub fn load_pairs(path: &Path, columns: &ColumnMap) -> Result<Vec<AttributePair>, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| EvalError::Io(e.to_string()))?
        .clone();
    let index_of = |name: &str| -> Result<usize, EvalError> {
        headers.iter().position(|h| h == name).ok_or_else(|| EvalError::Parse {
            line: 1,
            message: format!("missing column '{name}'"),
        })
    };
    let idx = [
        index_of(&columns.source_table)?,
        index_of(&columns.source_attr)?,
        index_of(&columns.source_desc)?,
        index_of(&columns.target_table)?,
        index_of(&columns.target_attr)?,
        index_of(&columns.target_desc)?,
        index_of(&columns.label)?,
    ];
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // 1-based, after the header
        let record = record.map_err(|e| EvalError::Parse {
            line,
            message: e.to_string(),
        })?;
        let field = |j: usize| record.get(idx[j]).unwrap_or("").to_string();
        let label = match field(6).trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(EvalError::Parse {
                    line,
                    message: format!("label must be 0 or 1, got '{other}'"),
                })
            }
        };
        let attribute_name = field(1);
        if attribute_name.is_empty() {
            return Err(EvalError::Parse {
                line,
                message: "source attribute name is empty".into(),
            });
        }
        out.push(AttributePair {
            source: AttributeSpec {
                side: SchemaSide::Source,
                table_name: field(0),
                attribute_name,
                description: field(2),
            },
            target: AttributeSpec {
                side: SchemaSide::Target,
                table_name: field(3),
                attribute_name: field(4),
                description: field(5),
            },
            gold_label: Some(label),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::DecisionStop;
    use std::io::Write;

    pub(crate) fn decision(predicted: bool, gold: bool, chain_depths: &[usize]) -> MatchDecision {
        use crate::explore::ReasoningPath;
        use crate::kg::{Direction, EntityRef, RelationRef};
        let chains = chain_depths
            .iter()
            .map(|&d| {
                let mut path = ReasoningPath::seed(EntityRef::new("Q0", "seed", ""));
                for i in 0..d {
                    let to = EntityRef::new(format!("Q{}", i + 1), format!("e{}", i + 1), "");
                    path.hops.push(crate::explore::Hop {
                        from: path.leaf().clone(),
                        relation: RelationRef::new("P1", "r"),
                        direction: Direction::Forward,
                        to,
                        s_rel: 1.0,
                        s_ent: 1.0,
                    });
                }
                path
            })
            .collect();
        MatchDecision {
            pair: AttributePair {
                source: AttributeSpec {
                    side: SchemaSide::Source,
                    table_name: "t".into(),
                    attribute_name: "a".into(),
                    description: "".into(),
                },
                target: AttributeSpec {
                    side: SchemaSide::Target,
                    table_name: "t".into(),
                    attribute_name: "b".into(),
                    description: "".into(),
                },
                gold_label: Some(gold),
            },
            predicted,
            stop_mode: DecisionStop::HalfStop,
            chains,
            tee_source: TeeOutcome::NoTopicEntity { reason: "test".into() },
            tee_target: TeeOutcome::NoTopicEntity { reason: "test".into() },
            rationale: String::new(),
            question: String::new(),
            exploration: None,
        }
    }

    #[test]
    fn perfect_classifier_metrics() {
        let mut decisions = vec![decision(true, true, &[1])];
        decisions.extend((0..9).map(|_| decision(false, false, &[1])));
        let m = compute_metrics(&decisions).unwrap();
        assert_eq!(m.counts, ConfusionCounts::new(1, 0, 0, 9));
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn published_row_metrics() {
        let m = metrics_from_counts(ConfusionCounts::new(10, 13, 15, 2525));
        assert!((m.precision * 100.0 - 43.48).abs() < 0.01);
        assert!((m.recall * 100.0 - 40.00).abs() < 0.01);
        assert!((m.f1 * 100.0 - 41.67).abs() < 0.01);
    }

    #[test]
    fn degenerate_zero_counts_flagged() {
        let m = metrics_from_counts(ConfusionCounts::new(0, 0, 3, 5));
        assert_eq!(m.precision, 0.0);
        assert!(m.flags.precision_undefined);
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.f1, 0.0);
        assert!(m.flags.f1_undefined);
    }

    #[test]
    fn metrics_match_brute_force_recount() {
        let decisions = vec![
            decision(true, true, &[2]),
            decision(true, false, &[1]),
            decision(false, true, &[3]),
            decision(false, false, &[2]),
            decision(false, false, &[1]),
        ];
        let m = compute_metrics(&decisions).unwrap();
        // independent recount straight off the list
        let tp = decisions.iter().filter(|d| d.predicted && d.pair.gold_label.unwrap()).count();
        let fp = decisions.iter().filter(|d| d.predicted && !d.pair.gold_label.unwrap()).count();
        let fn_ = decisions.iter().filter(|d| !d.predicted && d.pair.gold_label.unwrap()).count();
        assert_eq!(m.counts.tp, tp);
        assert_eq!(m.precision, tp as f64 / (tp + fp) as f64);
        assert_eq!(m.recall, tp as f64 / (tp + fn_) as f64);
        let (p, r) = (m.precision, m.recall);
        assert!((m.f1 - 2.0 * p * r / (p + r)).abs() < 1e-12);
    }

    #[test]
    fn metrics_permutation_invariant() {
        let mut decisions = vec![
            decision(true, true, &[2]),
            decision(false, true, &[3]),
            decision(false, false, &[1]),
            decision(true, false, &[1]),
        ];
        let a = compute_metrics(&decisions).unwrap();
        decisions.reverse();
        let b = compute_metrics(&decisions).unwrap();
        assert_eq!(a.counts, b.counts);
        let da = depth_analysis(&decisions).unwrap();
        decisions.rotate_left(1);
        let db = depth_analysis(&decisions).unwrap();
        assert_eq!(da, db);
    }

    #[test]
    fn missing_gold_label_is_contract_error() {
        let mut d = decision(true, true, &[1]);
        d.pair.gold_label = None;
        assert!(matches!(
            compute_metrics(&[d]),
            Err(EvalError::Contract(_))
        ));
    }

    #[test]
    fn depth_groups_and_empty_chains() {
        let decisions = vec![
            decision(true, true, &[3]),
            decision(true, true, &[]),
            decision(false, false, &[2, 2]),
        ];
        let stats = depth_analysis(&decisions).unwrap();
        let tp = &stats[&Group::Tp];
        assert_eq!(tp.count, 2);
        assert_eq!(tp.empty_chain_decisions, 1);
        assert!((tp.mean_depth - 1.5).abs() < 1e-12); // (3 + 0) / 2
        assert_eq!(stats[&Group::Tn].count, 1);
        assert!((stats[&Group::Tn].mean_depth - 2.0).abs() < 1e-12);
        assert_eq!(stats[&Group::Fp].count, 0);
        assert_eq!(stats[&Group::Fn].count, 0);
    }

    #[test]
    fn single_decision_depth_mean() {
        let stats = depth_analysis(&[decision(true, true, &[3])]).unwrap();
        assert_eq!(stats[&Group::Tp].mean_depth, 3.0);
    }

    #[test]
    fn tee_analysis_singleton_means_equal_inputs() {
        use crate::kg::EntityRef;
        use crate::tee::{ScoredCandidate, TopicSelection};
        use crate::text::HybridScore;
        let mut d = decision(true, true, &[1]);
        let entity = EntityRef::new("Q1", "x", "");
        d.tee_target = TeeOutcome::Selected(TopicSelection {
            chosen: entity.clone(),
            candidates: vec![ScoredCandidate {
                entity,
                full_text: "x".into(),
                score: HybridScore {
                    bm25_raw: 3.50,
                    bm25_norm: 0.5,
                    emb: 0.39,
                    total: 0.68,
                },
            }],
            keywords: vec![],
            fallback_used: false,
        });
        let stats = tee_score_analysis(&[d]).unwrap();
        let target = stats[&Group::Tp].target;
        assert_eq!(target.count, 1);
        assert!((target.bm25_raw_mean - 3.50).abs() < 1e-12);
        assert!((target.emb_mean - 0.39).abs() < 1e-12);
        assert!((target.total_mean - 0.68).abs() < 1e-12);
        // source side had no TEE outcome
        assert_eq!(stats[&Group::Tp].source.count, 0);
        // empty groups absent
        assert!(!stats.contains_key(&Group::Fp));
    }

    #[test]
    fn load_pairs_fixture_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "source_table,source_attr,source_desc,target_table,target_attr,target_desc,label").unwrap();
        for i in 0..10 {
            writeln!(f, "cms,col{i},desc {i},omop,tcol{i},tdesc {i},{}", i % 2).unwrap();
        }
        drop(f);
        let pairs = load_pairs(&path, &ColumnMap::default()).unwrap();
        assert_eq!(pairs.len(), 10);
        assert_eq!(pairs[1].gold_label, Some(true));

        let empty = dir.path().join("empty.csv");
        std::fs::write(&empty, "source_table,source_attr,source_desc,target_table,target_attr,target_desc,label\n").unwrap();
        assert!(load_pairs(&empty, &ColumnMap::default()).unwrap().is_empty());

        let bad = dir.path().join("bad.csv");
        std::fs::write(
            &bad,
            "source_table,source_attr,source_desc,target_table,target_attr,target_desc,label\na,b,c,d,e,f,2\n",
        )
        .unwrap();
        match load_pairs(&bad, &ColumnMap::default()) {
            Err(EvalError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
