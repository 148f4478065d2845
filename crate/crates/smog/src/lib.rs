//! Schema matching over a knowledge graph.
//!
//! The pipeline decides whether two schema attributes denote the same
//! concept in three phases:
//!
//! 1. **Topic entity extraction** ([`tee`]): keywords from the attribute
//!    description, candidate entities from the KG search API, a hybrid
//!    BM25/embedding rerank, and an oracle disambiguation step.
//! 2. **Graph exploration** ([`explore`]): beam search outward from the
//!    topic entities, scoring relations and entities with the oracle and
//!    keeping the highest-scoring reasoning chains.
//! 3. **Verdict** ([`matcher`]): the oracle reads the surviving chains and
//!    answers the matching question; every degenerate branch falls back to
//!    a conservative "no match".
//!
//! [`kg`] provides interchangeable local and remote graph backends,
//! [`oracle`] the mock and remote language-model oracles, [`eval`] the
//! metrics and analyses, and [`cli`] a thin command-line veneer. Runs with
//! the local store and mock oracle are fully deterministic and perform no
//! network I/O (observable via [`http_request_count`]).

pub mod cli;
pub mod config;
pub mod eval;
pub mod explore;
pub mod kg;
pub mod matcher;
pub mod net;
pub mod oracle;
pub mod tee;
pub mod text;

pub use config::RunConfig;
pub use eval::{compute_metrics, evaluate, load_pairs, ConfusionCounts, EvalReport};
pub use explore::{BeamConfig, ExplorationResult, Explorer, ReasoningPath, StopMode};
pub use kg::{EntityRef, KgBackend, LocalStore, RelationRef};
pub use matcher::{AttributePair, MatchDecision, Matcher};
pub use net::http_request_count;
pub use oracle::{MockChatModel, Oracle, Temperatures};
pub use tee::{AttributeSpec, SchemaSide, TeeOutcome, TeePipeline};
pub use text::{HashedNgramEmbedder, HybridWeights, TextConfig};
