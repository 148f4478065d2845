//! Shows the text-scoring primitives: tokenization, BM25, the hashed
//! trigram embedding, the fixed 0.4/0.6 hybrid combination, and keyword
//! selection from an attribute description.
//!
//! Run with: cargo run --example keyword_scoring

use smog::text::{
    bm25, cosine, cosine_to_unit, min_max_normalize, tokenize_filter, top_k_keywords,
    Bm25Params, CorpusStats, EmbeddingProvider, HashedNgramEmbedder, TextConfig,
};

fn main() -> anyhow::Result<()> {
    let text = TextConfig::default();
    let embedder = HashedNgramEmbedder::default();

    let description = "gender of the beneficiary at the time of enrollment";
    let tokens = tokenize_filter(description, &text.stopwords);
    println!("tokens: {:?}", tokens.tokens);

    let docs = [
        "gender identity of a human",
        "biological sex of an organism",
        "numeric area designator used for mail delivery",
    ];
    let doc_tokens: Vec<_> = docs.iter().map(|d| tokenize_filter(d, &text.stopwords)).collect();
    let stats = CorpusStats::build(&doc_tokens.iter().collect::<Vec<_>>());

    let bm25_raw: Vec<f64> = doc_tokens
        .iter()
        .map(|d| bm25(&tokens, d, &stats, Bm25Params::default()))
        .collect();
    let bm25_norm = min_max_normalize(&bm25_raw);
    let query_vec = embedder.embed(description);

    println!("\n{:<48} {:>8} {:>8} {:>8} {:>8}", "candidate", "bm25", "norm", "emb", "hybrid");
    for (i, doc) in docs.iter().enumerate() {
        let (c, _) = cosine(&embedder.embed(doc), &query_vec)?;
        let emb = cosine_to_unit(c);
        let total = text.weights.combine(bm25_norm[i], emb)?;
        println!("{doc:<48} {:>8.3} {:>8.3} {emb:>8.3} {total:>8.3}", bm25_raw[i], bm25_norm[i]);
    }

    let keywords = top_k_keywords(description, 5, &text, &embedder)?;
    println!("\ntop keywords: {keywords:?}");
    Ok(())
}
