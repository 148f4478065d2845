//! Full decision flow for a single attribute pair: topic extraction on both
//! sides, bridging exploration, and the final oracle verdict.
//!
//! Run with: cargo run --example match_pair

use std::path::Path;
use std::sync::Arc;

use smog::explore::BeamConfig;
use smog::kg::LocalStore;
use smog::matcher::{AttributePair, Matcher};
use smog::oracle::{MockChatModel, Oracle, Temperatures};
use smog::tee::{AttributeSpec, SchemaSide};
use smog::text::{HashedNgramEmbedder, TextConfig};

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let store = LocalStore::load(&fixtures.join("kg_triples.tsv"), &fixtures.join("kg_labels.tsv"))?;
    let oracle = Oracle::new(Arc::new(MockChatModel::new()), Temperatures::default());
    let provider = HashedNgramEmbedder::default();
    let text = TextConfig::default();
    let beam = BeamConfig::default();
    let matcher = Matcher::new(&store, &oracle, &provider, &text, &beam);

    let pair = AttributePair {
        source: AttributeSpec {
            side: SchemaSide::Source,
            table_name: "cms".into(),
            attribute_name: "bene_sex_ident_cd".into(),
            description: "gender of the beneficiary".into(),
        },
        target: AttributeSpec {
            side: SchemaSide::Target,
            table_name: "omop".into(),
            attribute_name: "gender_concept_id".into(),
            description: "biological sex of the organism".into(),
        },
        gold_label: None,
    };

    let decision = matcher.match_pair(&pair)?;
    println!("question: {}", decision.question);
    println!("verdict:  {}", if decision.predicted { "MATCH" } else { "NO MATCH" });
    println!("stop:     {:?}", decision.stop_mode);
    println!("rationale: {}", decision.rationale);
    for (side, outcome) in [("source", &decision.tee_source), ("target", &decision.tee_target)] {
        match outcome.selection() {
            Some(s) => println!("{side} topic: {} ({})", s.chosen.id, s.chosen.label),
            None => println!("{side} topic: none"),
        }
    }
    println!("chains:");
    for chain in &decision.chains {
        println!("  {}", chain.render());
    }
    Ok(())
}
