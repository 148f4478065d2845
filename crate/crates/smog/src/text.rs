//! Lexical and semantic scoring primitives: tokenization with stopword
//! filtering, Okapi BM25, cosine similarity over embedding vectors, and the
//! fixed-weight hybrid combiner used throughout topic entity extraction.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bundled English stopword list, one token per line.
const BUNDLED_STOPWORDS: &str = include_str!("../assets/stopwords.txt");

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("hybrid input {0} outside [0,1]")]
    OutOfRange(f64),
    #[error("embedding dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cannot read stopword file: {0}")]
    StopwordIo(#[from] std::io::Error),
}

/// Stopword list used by [`tokenize_filter`].
#[derive(Debug, Clone)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    /// The versioned in-repo English list.
    pub fn bundled() -> Self {
        Self::from_text(BUNDLED_STOPWORDS)
    }

    pub fn from_text(text: &str) -> Self {
        let words = text
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        Self { words }
    }

    pub fn from_file(path: &Path) -> Result<Self, ScoreError> {
        Ok(Self::from_text(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }
}

impl Default for StopwordList {
    fn default() -> Self {
        Self::bundled()
    }
}

/// Lowercased, punctuation-stripped, stopword-filtered token list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSet {
    pub tokens: Vec<String>,
    pub source: String,
}

impl TokenSet {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Distinct tokens in first-occurrence order.
    pub fn distinct(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.tokens
            .iter()
            .filter(|t| seen.insert(t.as_str()))
            .cloned()
            .collect()
    }
}

/// Lowercases, splits on non-alphanumeric characters, and drops stopwords.
pub fn tokenize_filter(text: &str, stopwords: &StopwordList) -> TokenSet {
    let tokens = text
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !stopwords.contains(t))
        .map(|t| t.to_string())
        .collect();
    TokenSet {
        tokens,
        source: text.to_string(),
    }
}

/// Okapi BM25 parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

/// Document-frequency table over the candidate corpus in play.
#[derive(Debug, Clone, Default)]
pub struct CorpusStats {
    pub doc_count: usize,
    pub avg_doc_len: f64,
    df: HashMap<String, usize>,
}

impl CorpusStats {
    pub fn build(docs: &[&TokenSet]) -> Self {
        let mut df: HashMap<String, usize> = HashMap::new();
        let mut total_len = 0usize;
        for doc in docs {
            total_len += doc.len();
            let distinct: BTreeSet<&str> = doc.tokens.iter().map(|s| s.as_str()).collect();
            for term in distinct {
                *df.entry(term.to_string()).or_insert(0) += 1;
            }
        }
        let doc_count = docs.len();
        let avg_doc_len = if doc_count == 0 {
            0.0
        } else {
            total_len as f64 / doc_count as f64
        };
        Self {
            doc_count,
            avg_doc_len,
            df,
        }
    }

    pub fn doc_frequency(&self, term: &str) -> usize {
        self.df.get(term).copied().unwrap_or(0)
    }
}

/// Okapi BM25 score of `doc` against `query`. Zero when no query term occurs
/// in the document. Uses the non-negative `ln(1 + ...)` IDF variant.
pub fn bm25(query: &TokenSet, doc: &TokenSet, stats: &CorpusStats, params: Bm25Params) -> f64 {
    if doc.is_empty() || query.is_empty() || stats.doc_count == 0 {
        return 0.0;
    }
    let mut tf: HashMap<&str, usize> = HashMap::new();
    for t in &doc.tokens {
        *tf.entry(t.as_str()).or_insert(0) += 1;
    }
    let n = stats.doc_count as f64;
    let dl = doc.len() as f64;
    let avg = if stats.avg_doc_len > 0.0 {
        stats.avg_doc_len
    } else {
        dl
    };
    let mut score = 0.0;
    for term in query.distinct() {
        let f = *tf.get(term.as_str()).unwrap_or(&0) as f64;
        if f == 0.0 {
            continue;
        }
        let df = stats.doc_frequency(&term) as f64;
        let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
        let tf_norm =
            (f * (params.k1 + 1.0)) / (f + params.k1 * (1.0 - params.b + params.b * dl / avg));
        score += idf * tf_norm;
    }
    score
}

/// Cosine similarity clamped to [-1,1]. A zero vector on either side yields
/// value 0 with the degenerate flag set.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<(f64, bool), ScoreError> {
    if a.len() != b.len() {
        return Err(ScoreError::DimensionMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok((0.0, true));
    }
    Ok(((dot / (na * nb)).clamp(-1.0, 1.0), false))
}

/// Maps a cosine value from [-1,1] into [0,1].
pub fn cosine_to_unit(c: f64) -> f64 {
    (c + 1.0) / 2.0
}

/// Weights of the lexical/semantic mix. Defaults to 0.4 BM25 + 0.6 embedding.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HybridWeights {
    pub lexical: f64,
    pub semantic: f64,
}

impl Default for HybridWeights {
    fn default() -> Self {
        Self {
            lexical: 0.4,
            semantic: 0.6,
        }
    }
}

impl HybridWeights {
    /// Weighted sum of two scores already normalized to [0,1].
    pub fn combine(&self, bm25_norm: f64, emb: f64) -> Result<f64, ScoreError> {
        for v in [bm25_norm, emb] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ScoreError::OutOfRange(v));
            }
        }
        Ok(self.lexical * bm25_norm + self.semantic * emb)
    }
}

/// Per-candidate score record carrying both raw and normalized components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridScore {
    pub bm25_raw: f64,
    pub bm25_norm: f64,
    pub emb: f64,
    pub total: f64,
}

/// Min-max normalization over a candidate set. When all values are equal
/// (including the single-candidate case) a positive value maps to 1.0 and a
/// non-positive one to 0.0.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return values
            .iter()
            .map(|&v| if v > 0.0 { 1.0 } else { 0.0 })
            .collect();
    }
    values.iter().map(|&v| (v - min) / (max - min)).collect()
}

/// Text embedding contract: deterministic per provider instance, fixed
/// dimension.
pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, text: &str) -> Vec<f64>;
    fn dim(&self) -> usize;
}

impl<T: EmbeddingProvider + ?Sized> EmbeddingProvider for Arc<T> {
    fn embed(&self, text: &str) -> Vec<f64> {
        (**self).embed(text)
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
}

/// Offline embedding provider: character-trigram hashed term-frequency
/// vectors, L2-normalized. Fully deterministic, no model downloads.
#[derive(Debug, Clone)]
pub struct HashedNgramEmbedder {
    dim: usize,
}

impl HashedNgramEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }
}

impl Default for HashedNgramEmbedder {
    fn default() -> Self {
        Self::new(256)
    }
}

/// FNV-1a, fixed here so vectors are stable across Rust versions.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl EmbeddingProvider for HashedNgramEmbedder {
    fn embed(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        let lower = text.to_lowercase();
        for token in lower.split(|c: char| !c.is_alphanumeric()) {
            if token.is_empty() {
                continue;
            }
            let padded: Vec<char> = std::iter::once('\u{2}')
                .chain(token.chars())
                .chain(std::iter::once('\u{3}'))
                .collect();
            for win in padded.windows(3) {
                let gram: String = win.iter().collect();
                let idx = (fnv1a(gram.as_bytes()) % self.dim as u64) as usize;
                v[idx] += 1.0;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut v {
                *x /= norm;
            }
        }
        v
    }

    fn dim(&self) -> usize {
        self.dim
    }
}

/// Shared text-scoring configuration.
#[derive(Debug, Clone, Default)]
pub struct TextConfig {
    pub stopwords: StopwordList,
    pub bm25: Bm25Params,
    pub weights: HybridWeights,
}

/// Selects the top-K representative keywords of a description.
///
/// Candidate tokens come from [`tokenize_filter`]; each is scored by the
/// hybrid mix of its BM25 score against the description (treated as a
/// single-document corpus, min-max normalized over the candidates) and the
/// unit-mapped cosine between the token embedding and the description
/// embedding. Ties break lexicographically.
pub fn top_k_keywords(
    description: &str,
    k: usize,
    cfg: &TextConfig,
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<String>, ScoreError> {
    assert!(k >= 1, "K must be at least 1");
    let doc = tokenize_filter(description, &cfg.stopwords);
    if doc.is_empty() {
        return Ok(Vec::new());
    }
    let stats = CorpusStats::build(&[&doc]);
    let candidates = doc.distinct();
    let raw_bm25: Vec<f64> = candidates
        .iter()
        .map(|tok| {
            let q = TokenSet {
                tokens: vec![tok.clone()],
                source: tok.clone(),
            };
            bm25(&q, &doc, &stats, cfg.bm25)
        })
        .collect();
    let norm_bm25 = min_max_normalize(&raw_bm25);
    let desc_vec = provider.embed(description);
    let mut scored: Vec<(String, f64)> = Vec::with_capacity(candidates.len());
    for (i, tok) in candidates.iter().enumerate() {
        let (c, _) = cosine(&provider.embed(tok), &desc_vec)?;
        let total = cfg.weights.combine(norm_bm25[i], cosine_to_unit(c))?;
        scored.push((tok.clone(), total));
    }
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    Ok(scored.into_iter().take(k).map(|(t, _)| t).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> TokenSet {
        TokenSet {
            tokens: words.iter().map(|w| w.to_string()).collect(),
            source: words.join(" "),
        }
    }

    #[test]
    fn tokenize_strips_stopwords_and_punctuation() {
        let sw = StopwordList::bundled();
        assert_eq!(
            tokenize_filter("The Patient ID", &sw).tokens,
            vec!["patient", "id"]
        );
        assert!(tokenize_filter("", &sw).tokens.is_empty());
        assert!(tokenize_filter("a an the", &sw).tokens.is_empty());
    }

    #[test]
    fn bm25_disjoint_query_is_zero() {
        let doc = toks(&["alpha", "beta"]);
        let stats = CorpusStats::build(&[&doc]);
        let q = toks(&["gamma"]);
        assert_eq!(bm25(&q, &doc, &stats, Bm25Params::default()), 0.0);
    }

    #[test]
    fn bm25_matches_hand_evaluated_okapi() {
        // Single-doc corpus, query = doc = ["x"]:
        // idf = ln((1-1+0.5)/(1+0.5) + 1) = ln(4/3)
        // tf  = (1*(k1+1)) / (1 + k1*(1 - b + b*1)) = 2.2/2.2 = 1
        let doc = toks(&["x"]);
        let stats = CorpusStats::build(&[&doc]);
        let got = bm25(&doc, &doc, &stats, Bm25Params::default());
        let expected = (4.0f64 / 3.0).ln();
        assert!((got - expected).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn bm25_term_frequency_monotone() {
        // Brute force over a small term-frequency grid: doubling a matching
        // term's frequency never decreases the score.
        let params = Bm25Params::default();
        let q = toks(&["x"]);
        for tf in 1usize..=8 {
            let mut words: Vec<&str> = vec!["x"; tf];
            words.extend(vec!["pad"; 4]);
            let doc = toks(&words);
            let mut words2: Vec<&str> = vec!["x"; tf * 2];
            words2.extend(vec!["pad"; 4]);
            let doc2 = toks(&words2);
            let stats = CorpusStats::build(&[&doc, &doc2, &toks(&["other"])]);
            assert!(bm25(&q, &doc2, &stats, params) >= bm25(&q, &doc, &stats, params));
        }
    }

    #[test]
    fn bm25_idf_direction() {
        // Rarer terms score higher across a 3-document toy corpus.
        let d1 = toks(&["common", "rare"]);
        let d2 = toks(&["common"]);
        let d3 = toks(&["common"]);
        let stats = CorpusStats::build(&[&d1, &d2, &d3]);
        let params = Bm25Params::default();
        let s_rare = bm25(&toks(&["rare"]), &d1, &stats, params);
        let s_common = bm25(&toks(&["common"]), &d1, &stats, params);
        assert!(s_rare > s_common);
    }

    #[test]
    fn cosine_basics() {
        let v = vec![0.3, 0.4, 0.5];
        let (c, deg) = cosine(&v, &v).unwrap();
        assert!((c - 1.0).abs() < 1e-12 && !deg);
        let (c, _) = cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(c, 0.0);
        let (c, _) = cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - 0.7071).abs() < 1e-4);
        let (c, deg) = cosine(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(c, 0.0);
        assert!(deg);
        assert!(cosine(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn hybrid_weighted_sum() {
        let w = HybridWeights::default();
        assert_eq!(w.combine(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(w.combine(0.0, 0.0).unwrap(), 0.0);
        assert!((w.combine(0.5, 1.0).unwrap() - 0.8).abs() < 1e-12);
        assert!(w.combine(1.5, 0.0).is_err());
        assert!(w.combine(0.0, -0.1).is_err());
    }

    #[test]
    fn min_max_degenerate_sets() {
        assert_eq!(min_max_normalize(&[2.5]), vec![1.0]);
        assert_eq!(min_max_normalize(&[0.0]), vec![0.0]);
        assert_eq!(min_max_normalize(&[3.0, 3.0]), vec![1.0, 1.0]);
        assert_eq!(min_max_normalize(&[0.0, 2.0, 4.0]), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn embedder_is_deterministic() {
        let e = HashedNgramEmbedder::default();
        assert_eq!(e.embed("myocardial infarction"), e.embed("myocardial infarction"));
        assert_eq!(e.embed("x").len(), 256);
        assert!(e.embed("").iter().all(|&v| v == 0.0));
    }

    #[test]
    fn top_k_keywords_small_candidate_set() {
        let cfg = TextConfig::default();
        let provider = HashedNgramEmbedder::default();
        let kws = top_k_keywords("unique gender concept", 5, &cfg, &provider).unwrap();
        assert_eq!(kws.len(), 3);
        let all: BTreeSet<_> = kws.iter().cloned().collect();
        assert_eq!(
            all,
            ["unique", "gender", "concept"]
                .iter()
                .map(|s| s.to_string())
                .collect()
        );
    }

    #[test]
    fn top_k_keywords_prefers_token_matching_description_embedding() {
        // Provider where one token embeds identically to the description and
        // BM25 is constant across tokens (all distinct, same frequency).
        struct Rigged;
        impl EmbeddingProvider for Rigged {
            fn embed(&self, text: &str) -> Vec<f64> {
                if text.contains("winner") {
                    vec![1.0, 0.0]
                } else {
                    vec![0.0, 1.0]
                }
            }
            fn dim(&self) -> usize {
                2
            }
        }
        let cfg = TextConfig::default();
        let kws = top_k_keywords("winner loser neutral", 1, &cfg, &Rigged).unwrap();
        assert_eq!(kws, vec!["winner"]);
    }

    #[test]
    fn top_k_keywords_tie_breaks_lexicographically() {
        // Constant embeddings and equal BM25 leave only the tie rule.
        struct Flat;
        impl EmbeddingProvider for Flat {
            fn embed(&self, _: &str) -> Vec<f64> {
                vec![1.0]
            }
            fn dim(&self) -> usize {
                1
            }
        }
        let cfg = TextConfig::default();
        let kws = top_k_keywords("zebra apple mango", 2, &cfg, &Flat).unwrap();
        assert_eq!(kws, vec!["apple", "mango"]);
    }
}
