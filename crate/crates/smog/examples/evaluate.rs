//! Matches the whole bundled pair dataset, writes the decision trace, and
//! prints the evaluation report (metrics plus the depth and TEE analyses).
//!
//! Run with: cargo run --example evaluate

use std::path::Path;
use std::sync::Arc;

use smog::cli::match_pairs_parallel;
use smog::eval::{self, ColumnMap};
use smog::explore::BeamConfig;
use smog::kg::LocalStore;
use smog::matcher::{write_traces, Matcher};
use smog::oracle::{MockChatModel, Oracle, Temperatures};
use smog::text::{HashedNgramEmbedder, TextConfig};

fn main() -> anyhow::Result<()> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let store = LocalStore::load(&fixtures.join("kg_triples.tsv"), &fixtures.join("kg_labels.tsv"))?;
    let oracle = Oracle::new(Arc::new(MockChatModel::new()), Temperatures::default());
    let provider = HashedNgramEmbedder::default();
    let text = TextConfig::default();
    let beam = BeamConfig::default();
    let matcher = Matcher::new(&store, &oracle, &provider, &text, &beam);

    let pairs = eval::load_pairs(&fixtures.join("pairs.csv"), &ColumnMap::default())?;
    let decisions = match_pairs_parallel(&matcher, &pairs, 2)?;

    let out = std::env::temp_dir().join("smog_example_traces.ndjson");
    write_traces(&out, &decisions)?;
    println!("trace written to {}\n", out.display());

    let report = eval::evaluate(&decisions)?;
    println!("{}", report.render_text());
    println!("offline check: {} HTTP requests issued", smog::http_request_count());
    Ok(())
}
