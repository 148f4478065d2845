//! Beam-search graph exploration: iterative 1-hop expansion from topic
//! entities with relation filtering, oracle scoring, beam pruning at width
//! `w`, a depth cap, sufficiency-checked termination, and the half-stop
//! fail-safe.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::{Direction, EntityRef, KgBackend, KgError, RelationRef};
use crate::oracle::{Oracle, OracleError, OracleKind, SufficiencyVerdict};

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error(transparent)]
    Kg(#[from] KgError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("contract violation: {0}")]
    Contract(String),
}

/// One scored traversal step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hop {
    pub from: EntityRef,
    pub relation: RelationRef,
    pub direction: Direction,
    pub to: EntityRef,
    pub s_rel: f64,
    pub s_ent: f64,
}

/// An ordered chain of hops from a seed entity, with the cumulative path
/// score (product of per-hop `s_rel * s_ent`, so always in [0,1]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningPath {
    pub seed: EntityRef,
    pub hops: Vec<Hop>,
    pub s_path: f64,
}

impl ReasoningPath {
    pub fn seed(entity: EntityRef) -> Self {
        Self {
            seed: entity,
            hops: Vec::new(),
            s_path: 1.0,
        }
    }

    pub fn depth(&self) -> usize {
        self.hops.len()
    }

    pub fn leaf(&self) -> &EntityRef {
        self.hops.last().map(|h| &h.to).unwrap_or(&self.seed)
    }

    /// Ids of every entity on the path, seed included.
    pub fn entity_ids(&self) -> HashSet<&str> {
        let mut ids: HashSet<&str> = HashSet::new();
        ids.insert(self.seed.id.as_str());
        for hop in &self.hops {
            ids.insert(hop.to.id.as_str());
        }
        ids
    }

    fn extended(&self, hop: Hop) -> Self {
        let s_path = self.s_path * hop.s_rel * hop.s_ent;
        let mut hops = self.hops.clone();
        hops.push(hop);
        Self {
            seed: self.seed.clone(),
            hops,
            s_path,
        }
    }

    fn order_key(&self) -> (String, Vec<(String, u8, String)>) {
        (
            self.seed.id.clone(),
            self.hops
                .iter()
                .map(|h| {
                    (
                        h.relation.id.clone(),
                        match h.direction {
                            Direction::Forward => 0,
                            Direction::Backward => 1,
                        },
                        h.to.id.clone(),
                    )
                })
                .collect(),
        )
    }

    /// Human-verifiable rendering: entities as `<id:label>` markers, hops
    /// annotated with direction and relation.
    pub fn render(&self) -> String {
        let mut out = format!("<{}:{}>", self.seed.id, self.seed.label);
        for hop in &self.hops {
            let dir = match hop.direction {
                Direction::Forward => "fwd",
                Direction::Backward => "bwd",
            };
            out.push_str(&format!(
                " -[{dir} {}:{}]-> <{}:{}>",
                hop.relation.id, hop.relation.label, hop.to.id, hop.to.label
            ));
        }
        out.push_str(&format!(" (s_path={:.4})", self.s_path));
        out
    }
}

/// Descending `s_path`; ties break toward shorter depth, then ascending leaf
/// id, then the full hop signature.
pub fn path_order(a: &ReasoningPath, b: &ReasoningPath) -> Ordering {
    b.s_path
        .partial_cmp(&a.s_path)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.depth().cmp(&b.depth()))
        .then_with(|| a.leaf().id.cmp(&b.leaf().id))
        .then_with(|| a.order_key().cmp(&b.order_key()))
}

/// Top-`w` paths under [`path_order`].
pub fn prune_beam(mut candidates: Vec<ReasoningPath>, width: usize) -> Vec<ReasoningPath> {
    assert!(width >= 1, "beam width must be >= 1");
    candidates.sort_by(path_order);
    candidates.truncate(width);
    candidates
}

/// Numbered aggregation of chains into one textual context.
pub fn aggregate_chains(chains: &[ReasoningPath]) -> String {
    chains
        .iter()
        .enumerate()
        .map(|(i, p)| format!("{}. {}", i + 1, p.render()))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Removes blocklisted relations, preserving order.
pub fn filter_relations(
    relations: Vec<RelationRef>,
    blocklist: &BTreeSet<String>,
) -> Vec<RelationRef> {
    relations
        .into_iter()
        .filter(|r| !blocklist.contains(&r.id))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamConfig {
    /// Beam width `w`.
    pub width: usize,
    /// Maximum exploration depth.
    pub max_depth: usize,
    /// Per-relation linked-entity cap `k`.
    pub entity_cap: usize,
    /// Minimum `s_rel` for a relation to count as promising.
    pub relation_floor: f64,
    /// Promising relations kept per leaf.
    pub relation_cap: usize,
    /// Relation ids never traversed (metadata properties).
    pub blocklist: BTreeSet<String>,
}

impl BeamConfig {
    /// Wikidata metadata properties excluded from traversal: instance-of,
    /// identifiers, URLs, images, categories. Subclass-of (P279) stays
    /// traversable.
    pub fn default_blocklist() -> BTreeSet<String> {
        ["P31", "P18", "P154", "P214", "P227", "P244", "P373", "P646", "P856", "P910"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            width: 3,
            max_depth: 3,
            entity_cap: 5,
            relation_floor: 0.2,
            relation_cap: 5,
            blocklist: Self::default_blocklist(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopMode {
    AnswerFound,
    HalfStop,
    NoPaths,
}

/// Per-round trace: every scored relation and entity with its score, the
/// beam after pruning, and the sufficiency verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: usize,
    pub relations_scored: BTreeMap<String, f64>,
    pub relations_filtered: Vec<String>,
    pub entities_scored: BTreeMap<String, f64>,
    pub beam: Vec<String>,
    pub sufficiency: Option<SufficiencyVerdict>,
}

/// Instrumentation counters backing the cost-bound checks.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct ExplorationStats {
    /// Individual path expansions performed.
    pub path_expansions: usize,
    /// Batched oracle scoring calls issued.
    pub oracle_scoring_calls: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplorationResult {
    /// Top-`w` chains over everything admitted to a beam, any depth.
    pub chains: Vec<ReasoningPath>,
    pub stop_mode: StopMode,
    /// Depth reached (0 when no paths were found at all).
    pub rounds: usize,
    pub sufficiency_verdicts: Vec<SufficiencyVerdict>,
    pub trace: Vec<RoundTrace>,
    pub stats: ExplorationStats,
}

pub struct Explorer<'a> {
    pub kg: &'a dyn KgBackend,
    pub oracle: &'a Oracle,
    pub cfg: &'a BeamConfig,
}

impl<'a> Explorer<'a> {
    pub fn new(kg: &'a dyn KgBackend, oracle: &'a Oracle, cfg: &'a BeamConfig) -> Self {
        Self { kg, oracle, cfg }
    }

    /// Expands a single path or seed by one hop. Thin wrapper over the
    /// batched round expansion used by [`Explorer::explore`].
    pub fn expand(&self, path: &ReasoningPath, query: &str) -> Result<Vec<ReasoningPath>, ExploreError> {
        if path.depth() >= self.cfg.max_depth {
            return Err(ExploreError::Contract(format!(
                "cannot expand beyond max depth {}",
                self.cfg.max_depth
            )));
        }
        let mut stats = ExplorationStats::default();
        let mut trace = RoundTrace {
            round: path.depth() + 1,
            relations_scored: BTreeMap::new(),
            relations_filtered: Vec::new(),
            entities_scored: BTreeMap::new(),
            beam: Vec::new(),
            sufficiency: None,
        };
        self.expand_round(std::slice::from_ref(path), query, &mut trace, &mut stats)
    }

    /// Oracle sufficiency judgment over the aggregated chains.
    pub fn check_sufficiency(
        &self,
        query: &str,
        topics: &[EntityRef],
        chains: &[ReasoningPath],
    ) -> Result<SufficiencyVerdict, ExploreError> {
        if chains.is_empty() {
            return Err(ExploreError::Contract(
                "sufficiency check needs at least one chain".into(),
            ));
        }
        let topic_ids: Vec<String> = topics.iter().map(|t| t.id.clone()).collect();
        Ok(self
            .oracle
            .judge_sufficiency(query, &topic_ids, &aggregate_chains(chains))?)
    }

    /// One round: retrieve and filter relations at every frontier leaf,
    /// batch-score them, propagate to capped neighbor entities, batch-score
    /// those, and return all extended paths.
    fn expand_round(
        &self,
        frontier: &[ReasoningPath],
        query: &str,
        trace: &mut RoundTrace,
        stats: &mut ExplorationStats,
    ) -> Result<Vec<ReasoningPath>, ExploreError> {
        stats.path_expansions += frontier.len();

        // relations per unique leaf, both directions, blocklist applied
        let mut leaf_relations: BTreeMap<String, Vec<(RelationRef, Direction)>> = BTreeMap::new();
        for path in frontier {
            let leaf = path.leaf();
            if leaf_relations.contains_key(&leaf.id) {
                continue;
            }
            let mut pairs: Vec<(RelationRef, Direction)> = Vec::new();
            for direction in [Direction::Forward, Direction::Backward] {
                let relations = self.kg.adjacent_relations(&leaf.id, direction)?;
                let kept = filter_relations(relations.clone(), &self.cfg.blocklist);
                for dropped in relations.iter().filter(|r| self.cfg.blocklist.contains(&r.id)) {
                    trace.relations_filtered.push(dropped.id.clone());
                }
                pairs.extend(kept.into_iter().map(|r| (r, direction)));
            }
            leaf_relations.insert(leaf.id.clone(), pairs);
        }

        let mut relation_items: BTreeMap<String, String> = BTreeMap::new();
        for pairs in leaf_relations.values() {
            for (relation, _) in pairs {
                relation_items
                    .entry(relation.id.clone())
                    .or_insert_with(|| relation.label.clone());
            }
        }
        if relation_items.is_empty() {
            return Ok(Vec::new());
        }
        let context = aggregate_chains(frontier);
        let items: Vec<(String, String)> = relation_items.into_iter().collect();
        let relation_scores = self
            .oracle
            .score_items(OracleKind::ScoreRelations, query, &context, &items)?;
        stats.oracle_scoring_calls += 1;
        trace.relations_scored.extend(relation_scores.scores.clone());

        // promising relations per leaf: floor, then top relation_cap
        let mut promising: BTreeMap<&str, Vec<(RelationRef, Direction, f64)>> = BTreeMap::new();
        for (leaf_id, pairs) in &leaf_relations {
            let mut scored: Vec<(RelationRef, Direction, f64)> = pairs
                .iter()
                .map(|(r, d)| (r.clone(), *d, relation_scores.scores[&r.id]))
                .filter(|(_, _, s)| *s >= self.cfg.relation_floor)
                .collect();
            scored.sort_by(|a, b| {
                b.2.partial_cmp(&a.2)
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| a.0.id.cmp(&b.0.id))
                    .then_with(|| (a.1 == Direction::Backward).cmp(&(b.1 == Direction::Backward)))
            });
            scored.truncate(self.cfg.relation_cap);
            promising.insert(leaf_id.as_str(), scored);
        }

        // propagate: collect (path, relation, direction, neighbor) tuples
        struct Candidate<'p> {
            path: &'p ReasoningPath,
            relation: RelationRef,
            direction: Direction,
            neighbor: EntityRef,
            s_rel: f64,
        }
        let mut candidates: Vec<Candidate> = Vec::new();
        let mut entity_items: BTreeMap<String, String> = BTreeMap::new();
        for path in frontier {
            let leaf = path.leaf();
            let visited = path.entity_ids();
            let Some(scored) = promising.get(leaf.id.as_str()) else {
                continue;
            };
            for (relation, direction, s_rel) in scored {
                let neighbors =
                    self.kg
                        .linked_entities(&leaf.id, &relation.id, *direction, self.cfg.entity_cap)?;
                for neighbor in neighbors {
                    if visited.contains(neighbor.id.as_str()) {
                        continue;
                    }
                    entity_items
                        .entry(neighbor.id.clone())
                        .or_insert_with(|| neighbor.label.clone());
                    candidates.push(Candidate {
                        path,
                        relation: relation.clone(),
                        direction: *direction,
                        neighbor,
                        s_rel: *s_rel,
                    });
                }
            }
        }
        if candidates.is_empty() {
            return Ok(Vec::new());
        }
        let items: Vec<(String, String)> = entity_items.into_iter().collect();
        let entity_scores = self
            .oracle
            .score_items(OracleKind::ScoreEntities, query, &context, &items)?;
        stats.oracle_scoring_calls += 1;
        trace.entities_scored.extend(entity_scores.scores.clone());

        Ok(candidates
            .into_iter()
            .map(|c| {
                let s_ent = entity_scores.scores[&c.neighbor.id];
                c.path.extended(Hop {
                    from: c.path.leaf().clone(),
                    relation: c.relation,
                    direction: c.direction,
                    to: c.neighbor,
                    s_rel: c.s_rel,
                    s_ent,
                })
            })
            .collect())
    }

    /// Full exploration loop: rounds of expand → prune → sufficiency check,
    /// terminating on a sufficient verdict, at the depth cap (half-stop), or
    /// when nothing is reachable (no paths).
    pub fn explore(
        &self,
        topics: &[EntityRef],
        query: &str,
    ) -> Result<ExplorationResult, ExploreError> {
        if topics.is_empty() {
            return Err(ExploreError::Contract("explore needs at least one topic".into()));
        }
        let mut seeds: Vec<EntityRef> = topics.to_vec();
        seeds.sort_by(|a, b| a.id.cmp(&b.id));
        seeds.dedup_by(|a, b| a.id == b.id);

        let mut stats = ExplorationStats::default();
        let mut trace = Vec::new();
        let mut verdicts = Vec::new();
        let mut accumulated: Vec<ReasoningPath> = Vec::new();
        let mut beam: Vec<ReasoningPath> =
            seeds.iter().cloned().map(ReasoningPath::seed).collect();
        let mut stop_mode = StopMode::HalfStop;
        let mut rounds = 0;

        for round in 1..=self.cfg.max_depth {
            let mut round_trace = RoundTrace {
                round,
                relations_scored: BTreeMap::new(),
                relations_filtered: Vec::new(),
                entities_scored: BTreeMap::new(),
                beam: Vec::new(),
                sufficiency: None,
            };
            let candidates = self.expand_round(&beam, query, &mut round_trace, &mut stats)?;
            if candidates.is_empty() {
                stop_mode = if round == 1 {
                    StopMode::NoPaths
                } else {
                    StopMode::HalfStop
                };
                trace.push(round_trace);
                break;
            }
            beam = prune_beam(candidates, self.cfg.width);
            accumulated.extend(beam.iter().cloned());
            round_trace.beam = beam.iter().map(|p| p.render()).collect();
            rounds = round;

            let verdict = self.check_sufficiency(query, &seeds, &beam)?;
            round_trace.sufficiency = Some(verdict.clone());
            trace.push(round_trace);
            verdicts.push(verdict.clone());
            if matches!(verdict, SufficiencyVerdict::Sufficient { .. }) {
                stop_mode = StopMode::AnswerFound;
                break;
            }
            if round == self.cfg.max_depth {
                stop_mode = StopMode::HalfStop;
            }
        }

        let chains = prune_beam(accumulated, self.cfg.width);
        if chains.is_empty() {
            stop_mode = StopMode::NoPaths;
        }
        Ok(ExplorationResult {
            chains,
            stop_mode,
            rounds,
            sufficiency_verdicts: verdicts,
            trace,
            stats,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::LocalStore;
    use crate::oracle::{MockChatModel, Oracle, SequenceChatModel, Temperatures};
    use std::sync::Arc;

    fn mock_oracle() -> Oracle {
        Oracle::new(Arc::new(MockChatModel::new()), Temperatures::default())
    }

    /// Oracle that always scores 1.0 and never finds the chains sufficient.
    fn neutral_insufficient_oracle() -> Oracle {
        struct Neutral;
        impl crate::oracle::ChatModel for Neutral {
            fn complete(
                &self,
                request: &crate::oracle::OracleRequest,
            ) -> Result<String, crate::oracle::OracleError> {
                Ok(match request.kind {
                    OracleKind::ScoreRelations | OracleKind::ScoreEntities => request
                        .rendered_prompt
                        .lines()
                        .filter_map(|l| l.split_once('\t').map(|(id, _)| id))
                        .filter(|id| !id.contains(' '))
                        .map(|id| format!("{id}\t1.0"))
                        .collect::<Vec<_>>()
                        .join("\n"),
                    _ => "VERDICT: INSUFFICIENT".to_string(),
                })
            }
        }
        Oracle::new(Arc::new(Neutral), Temperatures::default())
    }

    fn entity(store: &LocalStore, id: &str) -> EntityRef {
        store.entity(id).unwrap()
    }

    #[test]
    fn filter_relations_blocklist() {
        let rels = vec![RelationRef::new("P31", "instance of"), RelationRef::new("P279", "subclass of")];
        let block: BTreeSet<String> = ["P31".to_string()].into_iter().collect();
        let kept = filter_relations(rels.clone(), &block);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].id, "P279");
        assert_eq!(filter_relations(rels.clone(), &BTreeSet::new()).len(), 2);
        let all: BTreeSet<String> = ["P31".to_string(), "P279".to_string()].into_iter().collect();
        assert!(filter_relations(rels, &all).is_empty());
    }

    #[test]
    fn prune_beam_ordering_and_ties() {
        let a = ReasoningPath {
            seed: EntityRef::new("S", "s", ""),
            hops: vec![],
            s_path: 0.9,
        };
        let mut b = a.clone();
        b.s_path = 0.5;
        let mut c = a.clone();
        c.s_path = 0.1;
        let pruned = prune_beam(vec![c.clone(), a.clone(), b.clone()], 2);
        assert_eq!(pruned[0].s_path, 0.9);
        assert_eq!(pruned[1].s_path, 0.5);
        let all = prune_beam(vec![c, a, b], 5);
        assert_eq!(all.len(), 3);
        // equal scores: ascending leaf id decides
        let x = ReasoningPath::seed(EntityRef::new("QB", "b", ""));
        let y = ReasoningPath::seed(EntityRef::new("QA", "a", ""));
        let pruned = prune_beam(vec![x, y], 2);
        assert_eq!(pruned[0].seed.id, "QA");
    }

    #[test]
    fn expand_neutral_scores_keep_parent_s_path() {
        let store = LocalStore::builder()
            .entity("A", "start", "")
            .entity("B", "end", "")
            .relation("P1", "linked to")
            .triple("A", "P1", "B")
            .build();
        let oracle = neutral_insufficient_oracle();
        let cfg = BeamConfig::default();
        let explorer = Explorer::new(&store, &oracle, &cfg);
        let seed = ReasoningPath::seed(entity(&store, "A"));
        let extended = explorer.expand(&seed, "q").unwrap();
        assert_eq!(extended.len(), 1);
        assert_eq!(extended[0].s_path, seed.s_path);
        assert_eq!(extended[0].leaf().id, "B");
    }

    #[test]
    fn expand_respects_entity_cap() {
        let mut b = LocalStore::builder().entity("A", "hub", "").relation("P1", "r");
        for i in 0..50 {
            let id = format!("N{i:02}");
            b = b.entity(&id, &format!("n{i}"), "").triple("A", "P1", &id);
        }
        let store = b.build();
        let oracle = neutral_insufficient_oracle();
        let cfg = BeamConfig {
            entity_cap: 5,
            ..BeamConfig::default()
        };
        let explorer = Explorer::new(&store, &oracle, &cfg);
        let extended = explorer
            .expand(&ReasoningPath::seed(entity(&store, "A")), "q")
            .unwrap();
        assert!(extended.len() <= 5);
    }

    #[test]
    fn expand_relation_score_ratio_propagates() {
        // r1 scored 0.9, r2 scored 0.1, entities 1.0: the r1 path scores 9x.
        struct Split;
        impl crate::oracle::ChatModel for Split {
            fn complete(
                &self,
                request: &crate::oracle::OracleRequest,
            ) -> Result<String, crate::oracle::OracleError> {
                Ok(match request.kind {
                    OracleKind::ScoreRelations => "P1\t0.9\nP2\t0.1".to_string(),
                    OracleKind::ScoreEntities => "B\t1.0\nC\t1.0".to_string(),
                    _ => "VERDICT: INSUFFICIENT".to_string(),
                })
            }
        }
        let store = LocalStore::builder()
            .entity("A", "a", "")
            .entity("B", "b", "")
            .entity("C", "c", "")
            .relation("P1", "good")
            .relation("P2", "bad")
            .triple("A", "P1", "B")
            .triple("A", "P2", "C")
            .build();
        let oracle = Oracle::new(Arc::new(Split), Temperatures::default());
        let cfg = BeamConfig {
            relation_floor: 0.0,
            ..BeamConfig::default()
        };
        let explorer = Explorer::new(&store, &oracle, &cfg);
        let extended = explorer
            .expand(&ReasoningPath::seed(entity(&store, "A")), "q")
            .unwrap();
        assert_eq!(extended.len(), 2);
        let via_p1 = extended.iter().find(|p| p.hops[0].relation.id == "P1").unwrap();
        let via_p2 = extended.iter().find(|p| p.hops[0].relation.id == "P2").unwrap();
        assert!((via_p1.s_path / via_p2.s_path - 9.0).abs() < 1e-9);
    }

    #[test]
    fn explore_answer_found_one_hop() {
        let store = LocalStore::builder()
            .entity("Q1", "gender", "gender of a person")
            .entity("Q2", "sex", "biological sex")
            .relation("P1", "said to be the same as")
            .triple("Q1", "P1", "Q2")
            .build();
        let oracle = mock_oracle();
        let cfg = BeamConfig::default();
        let explorer = Explorer::new(&store, &oracle, &cfg);
        let result = explorer
            .explore(&[entity(&store, "Q1"), entity(&store, "Q2")], "do gender and sex match?")
            .unwrap();
        assert_eq!(result.stop_mode, StopMode::AnswerFound);
        assert_eq!(result.rounds, 1);
        assert!(result.chains.iter().any(|p| p.depth() == 1));
    }

    #[test]
    fn explore_half_stop_at_max_depth() {
        let store = LocalStore::builder()
            .entity("A", "a", "")
            .entity("B", "b", "")
            .entity("C", "c", "")
            .entity("D", "d", "")
            .relation("P1", "r")
            .triple("A", "P1", "B")
            .triple("B", "P1", "C")
            .triple("C", "P1", "D")
            .build();
        let oracle = neutral_insufficient_oracle();
        let cfg = BeamConfig {
            max_depth: 3,
            relation_floor: 0.0,
            ..BeamConfig::default()
        };
        let explorer = Explorer::new(&store, &oracle, &cfg);
        let result = explorer.explore(&[entity(&store, "A")], "q").unwrap();
        assert_eq!(result.stop_mode, StopMode::HalfStop);
        assert_eq!(result.rounds, 3);
        assert_eq!(result.sufficiency_verdicts.len(), 3);
        assert!(result.chains.iter().all(|p| p.depth() <= 3));
    }

    #[test]
    fn explore_isolated_topic_is_no_paths() {
        let store = LocalStore::builder().entity("A", "alone", "").build();
        let oracle = mock_oracle();
        let cfg = BeamConfig::default();
        let explorer = Explorer::new(&store, &oracle, &cfg);
        let result = explorer.explore(&[entity(&store, "A")], "q").unwrap();
        assert_eq!(result.stop_mode, StopMode::NoPaths);
        assert!(result.chains.is_empty());
        assert_eq!(result.rounds, 0);
    }

    #[test]
    fn explore_rejects_empty_topics() {
        let store = LocalStore::builder().build();
        let oracle = mock_oracle();
        let cfg = BeamConfig::default();
        let explorer = Explorer::new(&store, &oracle, &cfg);
        assert!(matches!(
            explorer.explore(&[], "q"),
            Err(ExploreError::Contract(_))
        ));
    }

    #[test]
    fn check_sufficiency_rejects_empty_chains() {
        let store = LocalStore::builder().build();
        let oracle = mock_oracle();
        let cfg = BeamConfig::default();
        let explorer = Explorer::new(&store, &oracle, &cfg);
        assert!(matches!(
            explorer.check_sufficiency("q", &[], &[]),
            Err(ExploreError::Contract(_))
        ));
    }

    #[test]
    fn malformed_scoring_reply_empties_beam_not_crash() {
        let store = LocalStore::builder()
            .entity("A", "a", "")
            .entity("B", "b", "")
            .relation("P1", "r")
            .triple("A", "P1", "B")
            .build();
        let oracle = Oracle::new(
            Arc::new(SequenceChatModel::new(&["garbage"])),
            Temperatures::default(),
        );
        let cfg = BeamConfig::default();
        let explorer = Explorer::new(&store, &oracle, &cfg);
        // all-zero fallback scores fall below the relation floor, so the
        // beam empties instead of crashing
        let result = explorer.explore(&[entity(&store, "A")], "q").unwrap();
        assert_eq!(result.stop_mode, StopMode::NoPaths);
    }

    #[test]
    fn s_path_never_increases_with_depth() {
        let store = LocalStore::builder()
            .entity("A", "first thing", "")
            .entity("B", "second thing", "")
            .entity("C", "third thing", "")
            .relation("P1", "leads to")
            .triple("A", "P1", "B")
            .triple("B", "P1", "C")
            .build();
        let oracle = mock_oracle();
        let cfg = BeamConfig {
            relation_floor: 0.0,
            ..BeamConfig::default()
        };
        let explorer = Explorer::new(&store, &oracle, &cfg);
        let result = explorer.explore(&[entity(&store, "A")], "irrelevant").unwrap();
        for path in &result.chains {
            assert!((0.0..=1.0).contains(&path.s_path));
            let mut running = 1.0;
            for hop in &path.hops {
                let next = running * hop.s_rel * hop.s_ent;
                assert!(next <= running + 1e-12);
                running = next;
            }
            assert!((running - path.s_path).abs() < 1e-9);
        }
    }
}
