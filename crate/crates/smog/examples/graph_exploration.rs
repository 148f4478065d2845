//! Beam exploration from two seed entities over the fixture graph, showing
//! the per-round trace and the surviving reasoning chains.
//!
//! Run with: cargo run --example graph_exploration

use std::path::Path;
use std::sync::Arc;

use smog::explore::{BeamConfig, Explorer};
use smog::kg::LocalStore;
use smog::oracle::{MockChatModel, Oracle, Temperatures};

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let store = LocalStore::load(&fixtures.join("kg_triples.tsv"), &fixtures.join("kg_labels.tsv"))?;
    let oracle = Oracle::new(Arc::new(MockChatModel::new()), Temperatures::default());
    let config = BeamConfig::default();
    let explorer = Explorer::new(&store, &oracle, &config);

    let topics = vec![
        store.entity("Q131").expect("fixture entity"),
        store.entity("Q132").expect("fixture entity"),
    ];
    let query = "do ethnicity and race denote the same concept?";
    let result = explorer.explore(&topics, query)?;

    for round in &result.trace {
        println!("round {}:", round.round);
        for (id, score) in &round.relations_scored {
            println!("  relation {id} scored {score:.4}");
        }
        for chain in &round.beam {
            println!("  beam: {chain}");
        }
    }
    println!("\nstop: {:?} after {} rounds", result.stop_mode, result.rounds);
    println!(
        "{} path expansions, {} oracle scoring calls",
        result.stats.path_expansions, result.stats.oracle_scoring_calls
    );
    println!("\nfinal chains:");
    for (i, chain) in result.chains.iter().enumerate() {
        println!("{}. {}", i + 1, chain.render());
    }
    Ok(())
}
