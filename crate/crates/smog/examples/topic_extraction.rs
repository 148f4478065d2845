//! Runs the four-stage topic entity extraction for a few attributes against
//! the fixture graph: keywords, candidate retrieval, hybrid rerank, and
//! oracle disambiguation.
//!
//! Run with: cargo run --example topic_extraction

use std::path::Path;
use std::sync::Arc;

use smog::kg::LocalStore;
use smog::oracle::{MockChatModel, Oracle, Temperatures};
use smog::tee::{AttributeSpec, SchemaSide, TeeOutcome, TeePipeline};
use smog::text::{HashedNgramEmbedder, TextConfig};

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let store = LocalStore::load(&fixtures.join("kg_triples.tsv"), &fixtures.join("kg_labels.tsv"))?;
    let oracle = Oracle::new(Arc::new(MockChatModel::new()), Temperatures::default());
    let provider = HashedNgramEmbedder::default();
    let text = TextConfig::default();
    let pipeline = TeePipeline::new(&store, &provider, &oracle, &text);

    let attributes = [
        ("bene_sex_ident_cd", "gender of the beneficiary"),
        ("bene_birth_dt", "birthdate of the beneficiary"),
        ("bene_cnty_cd", "county where the enrollee resides"),
    ];
    for (name, description) in attributes {
        let spec = AttributeSpec {
            side: SchemaSide::Source,
            table_name: "cms".into(),
            attribute_name: name.into(),
            description: description.into(),
        };
        println!("attribute {name}: {description:?}");
        match pipeline.extract_topic_entity(&spec)? {
            TeeOutcome::Selected(selection) => {
                println!("  keywords: {:?}", selection.keywords);
                for candidate in &selection.candidates {
                    let marker = if candidate.entity.id == selection.chosen.id { "*" } else { " " };
                    println!(
                        "  {marker} {}  bm25={:.2} norm={:.2} emb={:.2} score={:.2}  {}",
                        candidate.entity.id,
                        candidate.score.bm25_raw,
                        candidate.score.bm25_norm,
                        candidate.score.emb,
                        candidate.score.total,
                        candidate.full_text,
                    );
                }
            }
            TeeOutcome::NoTopicEntity { reason } => println!("  no topic entity: {reason}"),
        }
        println!();
    }
    Ok(())
}
