//! Loads the bundled fixture graph and pokes at the backend interface:
//! entity search, adjacent relations, and linked entities.
//!
//! Run with: cargo run --example local_store

use std::path::Path;

use smog::kg::{Direction, KgBackend, LocalStore};

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let store = LocalStore::load(&fixtures.join("kg_triples.tsv"), &fixtures.join("kg_labels.tsv"))?;
    println!("loaded {} triples", store.triples().len());

    for query in ["gender", "birth", "code"] {
        println!("\nsearch {query:?}:");
        for hit in store.search_entities(query, 5)? {
            println!("  {}  {} — {}", hit.id, hit.label, hit.description);
        }
    }

    let entity = "Q101";
    println!("\nneighborhood of {entity}:");
    for direction in [Direction::Forward, Direction::Backward] {
        for relation in store.adjacent_relations(entity, direction)? {
            for linked in store.linked_entities(entity, &relation.id, direction, 5)? {
                println!("  {direction:?} via {} ({}) -> {} ({})", relation.id, relation.label, linked.id, linked.label);
            }
        }
    }
    Ok(())
}
