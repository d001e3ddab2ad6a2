//! Inverted index over token documents with TF-IDF/cosine and BM25 scoring.
//!
//! Documents are stored sorted by id, so ranking ties resolve to ascending
//! doc id by construction. Two weighting schemes are provided:
//!
//! * `cosine_tfidf`: w(t,d) = (1 + ln tf) * ln(N / df), queries weighted the
//!   same way with index statistics, scores normalized to cosine form.
//! * `bm25`: IDF_b(t) = ln(1 + (N - df + 0.5) / (df + 0.5)) with the usual
//!   saturation/length terms. Each distinct query term contributes once.
//!
//! `localize` runs the cosine scorer over a code index and truncates, which
//! is the text-similarity bug localizer used for ranking features.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

pub const DEFAULT_BM25_K1: f64 = 1.2;
pub const DEFAULT_BM25_B: f64 = 0.75;

/// One ranked document.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("duplicate doc id {0:?}")]
    DuplicateDocId(String),
}

#[derive(Debug, Clone, Default)]
pub struct InvertedIndex {
    doc_ids: Vec<String>,
    doc_len: Vec<usize>,
    terms: Vec<String>,
    term_lookup: HashMap<String, u32>,
    /// term -> (doc, tf), docs ascending.
    postings: Vec<Vec<(u32, u32)>>,
    /// doc -> (term, tf), terms ascending.
    doc_vecs: Vec<Vec<(u32, u32)>>,
    /// term -> collection frequency.
    cf: Vec<u64>,
    doc_norms: Vec<f64>,
    total_tokens: u64,
    avg_doc_len: f64,
}

/// Builds an index over `(doc_id, tokens)` pairs. Empty documents are fine.
pub fn build_index(docs: Vec<(String, Vec<String>)>) -> Result<InvertedIndex, IndexError> {
    let mut docs = docs;
    docs.sort_by(|a, b| a.0.cmp(&b.0));
    for pair in docs.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(IndexError::DuplicateDocId(pair[0].0.clone()));
        }
    }

    let mut idx = InvertedIndex::default();
    for (doc_id, tokens) in docs {
        let doc = idx.doc_ids.len() as u32;
        idx.doc_ids.push(doc_id);
        idx.doc_len.push(tokens.len());
        idx.total_tokens += tokens.len() as u64;

        let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
        for t in &tokens {
            *counts.entry(t).or_insert(0) += 1;
        }
        let mut vec_entries = Vec::with_capacity(counts.len());
        for (term, tf) in counts {
            let tid = match idx.term_lookup.get(term) {
                Some(&tid) => tid,
                None => {
                    let tid = idx.terms.len() as u32;
                    idx.terms.push(term.to_string());
                    idx.term_lookup.insert(term.to_string(), tid);
                    idx.postings.push(Vec::new());
                    idx.cf.push(0);
                    tid
                }
            };
            idx.postings[tid as usize].push((doc, tf));
            idx.cf[tid as usize] += tf as u64;
            vec_entries.push((tid, tf));
        }
        vec_entries.sort_by_key(|&(tid, _)| tid);
        idx.doc_vecs.push(vec_entries);
    }

    idx.avg_doc_len = if idx.doc_ids.is_empty() {
        0.0
    } else {
        idx.total_tokens as f64 / idx.doc_ids.len() as f64
    };
    idx.doc_norms = (0..idx.doc_ids.len())
        .map(|d| {
            idx.doc_vecs[d]
                .iter()
                .map(|&(tid, tf)| {
                    let w = idx.weight_by_id(tid, tf);
                    w * w
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok(idx)
}

impl InvertedIndex {
    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn doc_id(&self, doc: usize) -> &str {
        &self.doc_ids[doc]
    }

    pub fn doc_len(&self, doc: usize) -> usize {
        self.doc_len[doc]
    }

    pub fn avg_doc_len(&self) -> f64 {
        self.avg_doc_len
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn df(&self, term: &str) -> usize {
        self.term_lookup
            .get(term)
            .map(|&tid| self.postings[tid as usize].len())
            .unwrap_or(0)
    }

    pub fn cf(&self, term: &str) -> u64 {
        self.term_lookup.get(term).map(|&tid| self.cf[tid as usize]).unwrap_or(0)
    }

    /// ln(N / df), or 0 when the term is absent (df = 0).
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df(term);
        if df == 0 {
            0.0
        } else {
            (self.n_docs() as f64 / df as f64).ln()
        }
    }

    /// Cosine weight (1 + ln tf) * idf for a term of this index.
    pub fn cosine_weight(&self, term: &str, tf: u32) -> f64 {
        if tf == 0 {
            return 0.0;
        }
        (1.0 + (tf as f64).ln()) * self.idf(term)
    }

    fn weight_by_id(&self, tid: u32, tf: u32) -> f64 {
        let df = self.postings[tid as usize].len();
        if tf == 0 || df == 0 {
            return 0.0;
        }
        (1.0 + (tf as f64).ln()) * (self.n_docs() as f64 / df as f64).ln()
    }

    /// Postings list for a term: (doc, tf) entries, docs ascending.
    pub fn postings_for(&self, term: &str) -> &[(u32, u32)] {
        self.term_lookup
            .get(term)
            .map(|&tid| self.postings[tid as usize].as_slice())
            .unwrap_or(&[])
    }

    /// Ascending doc positions containing at least one of the query's terms.
    pub fn matching_docs(&self, query: &[String]) -> Vec<usize> {
        let mut hit = vec![false; self.n_docs()];
        for term in distinct(query).keys() {
            for &(doc, _) in self.postings_for(term) {
                hit[doc as usize] = true;
            }
        }
        (0..self.n_docs()).filter(|&d| hit[d]).collect()
    }

    /// Cosine similarity between two indexed documents under the TF-IDF
    /// weighting; 0 when either vector has zero norm.
    pub fn doc_cosine(&self, a: usize, b: usize) -> f64 {
        if self.doc_norms[a] == 0.0 || self.doc_norms[b] == 0.0 {
            return 0.0;
        }
        let (va, vb) = (&self.doc_vecs[a], &self.doc_vecs[b]);
        let mut dot = 0.0;
        let (mut i, mut j) = (0, 0);
        while i < va.len() && j < vb.len() {
            match va[i].0.cmp(&vb[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    dot += self.weight_by_id(va[i].0, va[i].1) * self.weight_by_id(vb[j].0, vb[j].1);
                    i += 1;
                    j += 1;
                }
            }
        }
        dot / (self.doc_norms[a] * self.doc_norms[b])
    }

    /// Ranks all documents by cosine TF-IDF similarity to the query.
    /// Zero-score documents are omitted; ties break on ascending doc id.
    pub fn cosine_tfidf(&self, query: &[String]) -> Vec<ScoredDoc> {
        let qterms = distinct(query);
        let mut qnorm = 0.0;
        let mut scores = vec![0.0; self.n_docs()];
        for (term, &qtf) in &qterms {
            let wq = self.cosine_weight(term, qtf);
            if wq == 0.0 {
                continue;
            }
            qnorm += wq * wq;
            for &(doc, tf) in self.postings_for(term) {
                scores[doc as usize] += wq * self.weight_by_id(self.term_lookup[*term], tf);
            }
        }
        if qnorm == 0.0 {
            return Vec::new();
        }
        let qnorm = qnorm.sqrt();
        self.collect_ranked(scores.into_iter().enumerate().map(|(d, s)| {
            if self.doc_norms[d] == 0.0 {
                (d, 0.0)
            } else {
                (d, s / (qnorm * self.doc_norms[d]))
            }
        }))
    }

    /// Ranks all documents by BM25. Each distinct query term contributes
    /// once. Zero-score documents are omitted; ties break on doc id.
    pub fn bm25(&self, query: &[String], k1: f64, b: f64) -> Vec<ScoredDoc> {
        if self.n_docs() == 0 || self.avg_doc_len == 0.0 {
            return Vec::new();
        }
        let mut scores = vec![0.0; self.n_docs()];
        for term in distinct(query).keys() {
            let df = self.df(term);
            if df == 0 {
                continue;
            }
            let n = self.n_docs() as f64;
            let idf = (1.0 + (n - df as f64 + 0.5) / (df as f64 + 0.5)).ln();
            for &(doc, tf) in self.postings_for(term) {
                let tf = tf as f64;
                let dl = self.doc_len[doc as usize] as f64;
                let denom = tf + k1 * (1.0 - b + b * dl / self.avg_doc_len);
                scores[doc as usize] += idf * tf * (k1 + 1.0) / denom;
            }
        }
        self.collect_ranked(scores.into_iter().enumerate())
    }

    /// Top `depth` documents of the cosine ranking.
    pub fn localize(&self, query: &[String], depth: usize) -> Vec<ScoredDoc> {
        let mut ranked = self.cosine_tfidf(query);
        ranked.truncate(depth);
        ranked
    }

    fn collect_ranked(&self, scored: impl Iterator<Item = (usize, f64)>) -> Vec<ScoredDoc> {
        let mut ranked: Vec<(usize, f64)> = scored.filter(|&(_, s)| s > 0.0).collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        ranked
            .into_iter()
            .map(|(d, s)| ScoredDoc {
                doc_id: self.doc_ids[d].clone(),
                score: s,
            })
            .collect()
    }
}

fn distinct(tokens: &[String]) -> BTreeMap<&str, u32> {
    let mut counts = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    counts
}

/// Cosine similarity between a query and an ad-hoc token document (for
/// example a developer profile) weighted against the index's statistics.
///
/// Uses the damped idf ln(1 + N/df) so that a term occurring in every
/// indexed document still carries weight; terms absent from the index are
/// skipped.
pub fn profile_cosine(query: &[String], doc: &[String], stats: &InvertedIndex) -> f64 {
    let smoothed = |term: &str| {
        let df = stats.df(term);
        if df == 0 {
            0.0
        } else {
            (1.0 + stats.n_docs() as f64 / df as f64).ln()
        }
    };
    let q = distinct(query);
    let d = distinct(doc);
    let mut dot = 0.0;
    let mut qnorm = 0.0;
    let mut dnorm = 0.0;
    for (term, &qtf) in &q {
        let idf = smoothed(term);
        if idf == 0.0 {
            continue;
        }
        let wq = (1.0 + (qtf as f64).ln()) * idf;
        qnorm += wq * wq;
        if let Some(&dtf) = d.get(term) {
            let wd = (1.0 + (dtf as f64).ln()) * idf;
            dot += wq * wd;
        }
    }
    for (term, &dtf) in &d {
        let idf = smoothed(term);
        if idf == 0.0 {
            continue;
        }
        let wd = (1.0 + (dtf as f64).ln()) * idf;
        dnorm += wd * wd;
    }
    if qnorm == 0.0 || dnorm == 0.0 {
        return 0.0;
    }
    dot / (qnorm.sqrt() * dnorm.sqrt())
}

/// BM25 score of a query against an ad-hoc token document, with document
/// frequencies, document count, and average length taken from the index.
pub fn profile_bm25(query: &[String], doc: &[String], stats: &InvertedIndex, k1: f64, b: f64) -> f64 {
    if stats.n_docs() == 0 || stats.avg_doc_len() == 0.0 {
        return 0.0;
    }
    let d = distinct(doc);
    let dl = doc.len() as f64;
    let n = stats.n_docs() as f64;
    let mut score = 0.0;
    for term in distinct(query).keys() {
        let df = stats.df(term);
        if df == 0 {
            continue;
        }
        let Some(&tf) = d.get(term) else { continue };
        let tf = tf as f64;
        let idf = (1.0 + (n - df as f64 + 0.5) / (df as f64 + 0.5)).ln();
        let denom = tf + k1 * (1.0 - b + b * dl / stats.avg_doc_len());
        score += idf * tf * (k1 + 1.0) / denom;
    }
    score
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn small_index() -> InvertedIndex {
        build_index(vec![
            ("doc-a".to_string(), toks("kernel panic mutex")),
            ("doc-b".to_string(), toks("panic handler stack")),
            ("doc-c".to_string(), toks("ui render widget")),
        ])
        .unwrap()
    }

    #[test]
    fn statistics_match_definitions() {
        let idx = small_index();
        assert_eq!(idx.n_docs(), 3);
        assert_eq!(idx.df("panic"), 2);
        assert_eq!(idx.df("kernel"), 1);
        assert_eq!(idx.df("absent"), 0);
        assert_eq!(idx.cf("panic"), 2);
        assert_eq!(idx.total_tokens(), 9);
        assert!((idx.avg_doc_len() - 3.0).abs() < 1e-12);
        assert_eq!(idx.doc_len(0), 3);
        for term in ["kernel", "panic", "mutex", "handler", "stack", "ui"] {
            let postings = idx.postings_for(term);
            assert!(postings.windows(2).all(|w| w[0].0 < w[1].0), "{term}");
        }
    }

    #[test]
    fn duplicate_doc_ids_are_rejected() {
        let err = build_index(vec![
            ("same".to_string(), toks("a b")),
            ("same".to_string(), toks("c")),
        ])
        .unwrap_err();
        assert!(matches!(err, IndexError::DuplicateDocId(_)));
    }

    #[test]
    fn identical_document_scores_one() {
        let idx = small_index();
        let ranked = idx.cosine_tfidf(&toks("kernel panic mutex"));
        assert_eq!(ranked[0].doc_id, "doc-a");
        assert!((ranked[0].score - 1.0).abs() < 1e-9, "{}", ranked[0].score);
    }

    #[test]
    fn zero_score_documents_are_omitted() {
        let idx = small_index();
        let ranked = idx.cosine_tfidf(&toks("kernel"));
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].doc_id, "doc-a");
        assert!(idx.cosine_tfidf(&toks("nothing matches")).is_empty());
    }

    #[test]
    fn ties_break_on_ascending_doc_id() {
        let idx = build_index(vec![
            ("z".to_string(), toks("panic panic")),
            ("a".to_string(), toks("panic panic")),
            ("m".to_string(), toks("other words entirely")),
        ])
        .unwrap();
        let ranked = idx.cosine_tfidf(&toks("panic"));
        let ids: Vec<&str> = ranked.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, ["a", "z"]);
        assert!((ranked[0].score - ranked[1].score).abs() < 1e-15);
    }

    #[test]
    fn bm25_single_doc_single_term_value() {
        let idx = build_index(vec![("only".to_string(), toks("kernel"))]).unwrap();
        let ranked = idx.bm25(&toks("kernel"), DEFAULT_BM25_K1, DEFAULT_BM25_B);
        assert_eq!(ranked.len(), 1);
        // ln(1 + 0.5/1.5) * (1 * 2.2) / (1 + 1.2) with dl = avgdl
        assert!((ranked[0].score - 0.287_682_072_451_780_9).abs() < 1e-12);
    }

    #[test]
    fn bm25_empty_query_is_empty() {
        let idx = small_index();
        assert!(idx.bm25(&[], 1.2, 0.75).is_empty());
    }

    #[test]
    fn bm25_repeated_query_terms_count_once() {
        let idx = small_index();
        let once = idx.bm25(&toks("panic"), 1.2, 0.75);
        let thrice = idx.bm25(&toks("panic panic panic"), 1.2, 0.75);
        assert_eq!(once.len(), thrice.len());
        for (a, b) in once.iter().zip(&thrice) {
            assert!((a.score - b.score).abs() < 1e-15);
        }
    }

    #[test]
    fn localize_truncates_to_depth() {
        let idx = small_index();
        let hits = idx.localize(&toks("panic stack"), 1);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].doc_id, "doc-b");
    }

    #[test]
    fn doc_cosine_agrees_with_query_scoring() {
        let idx = small_index();
        let via_query = idx.cosine_tfidf(&toks("panic handler stack"));
        let direct = idx.doc_cosine(0, 1);
        let doc_a = via_query.iter().find(|d| d.doc_id == "doc-a").unwrap();
        assert!((doc_a.score - direct).abs() < 1e-12);
    }

    #[test]
    fn profile_cosine_identical_text_is_one_even_for_single_doc_corpus() {
        let idx = build_index(vec![("f".to_string(), toks("alloc free heap"))]).unwrap();
        let sim = profile_cosine(&toks("alloc free heap"), &toks("alloc free heap"), &idx);
        assert!((sim - 1.0).abs() < 1e-9);
        assert_eq!(profile_cosine(&toks("絶対 ない"), &toks("alloc"), &idx), 0.0);
    }

    #[test]
    fn profile_bm25_rewards_matching_terms() {
        let idx = small_index();
        let hit = profile_bm25(&toks("panic"), &toks("panic mutex"), &idx, 1.2, 0.75);
        let miss = profile_bm25(&toks("panic"), &toks("ui widget"), &idx, 1.2, 0.75);
        assert!(hit > 0.0);
        assert_eq!(miss, 0.0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn vocab_token() -> impl Strategy<Value = String> {
            prop::sample::select(vec![
                "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta",
            ])
            .prop_map(str::to_string)
        }

        fn doc() -> impl Strategy<Value = Vec<String>> {
            prop::collection::vec(vocab_token(), 0..12)
        }

        proptest! {
            #[test]
            fn cosine_in_unit_interval(docs in prop::collection::vec(doc(), 1..8), q in doc()) {
                let named: Vec<(String, Vec<String>)> = docs
                    .into_iter()
                    .enumerate()
                    .map(|(i, d)| (format!("d{i:02}"), d))
                    .collect();
                let idx = build_index(named).unwrap();
                for hit in idx.cosine_tfidf(&q) {
                    prop_assert!(hit.score > 0.0 && hit.score <= 1.0 + 1e-9);
                }
            }

            #[test]
            fn bm25_scores_positive_and_sorted(docs in prop::collection::vec(doc(), 1..8), q in doc()) {
                let named: Vec<(String, Vec<String>)> = docs
                    .into_iter()
                    .enumerate()
                    .map(|(i, d)| (format!("d{i:02}"), d))
                    .collect();
                let idx = build_index(named).unwrap();
                let ranked = idx.bm25(&q, DEFAULT_BM25_K1, DEFAULT_BM25_B);
                for pair in ranked.windows(2) {
                    prop_assert!(pair[0].score >= pair[1].score);
                }
                for hit in &ranked {
                    prop_assert!(hit.score > 0.0);
                }
            }

            #[test]
            fn df_never_exceeds_n(docs in prop::collection::vec(doc(), 0..8)) {
                let named: Vec<(String, Vec<String>)> = docs
                    .into_iter()
                    .enumerate()
                    .map(|(i, d)| (format!("d{i:02}"), d))
                    .collect();
                let idx = build_index(named).unwrap();
                let total: usize = (0..idx.n_docs()).map(|d| idx.doc_len(d)).sum();
                prop_assert_eq!(total as u64, idx.total_tokens());
                for t in ["alpha", "beta", "gamma"] {
                    prop_assert!(idx.df(t) <= idx.n_docs());
                }
            }
        }
    }
}
