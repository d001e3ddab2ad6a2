//! The 16 query/developer relevance features scored by the rank learner.
//!
//! Three families: query vs the developer's code profile (f1-f8, with f5-f8
//! mediated by a top-10 bug localizer over the code index), query vs the
//! developer's report profile (f9-f11), and activity history (f12-f16).

use std::collections::HashMap;

use chrono::{DateTime, Duration, Utc};

use crate::index::{profile_bm25, profile_cosine, InvertedIndex, ScoredDoc};
use crate::recommenders::DeveloperProfile;

pub const FEATURE_COUNT: usize = 16;
pub const LOCALIZER_DEPTH: usize = 10;

/// Per-query scoring context: the two indices plus precomputed per-file
/// retrieval scores shared by every candidate developer.
pub struct L2rContext<'a> {
    pub report_index: &'a InvertedIndex,
    pub code_index: &'a InvertedIndex,
    pub bm25_k1: f64,
    pub bm25_b: f64,
    pub query_time: DateTime<Utc>,
    code_cosine: HashMap<String, f64>,
    code_bm25: HashMap<String, f64>,
    localizer: Vec<ScoredDoc>,
    localizer_total: f64,
}

impl<'a> L2rContext<'a> {
    pub fn for_query(
        query: &[String],
        query_time: DateTime<Utc>,
        report_index: &'a InvertedIndex,
        code_index: &'a InvertedIndex,
        bm25_k1: f64,
        bm25_b: f64,
    ) -> Self {
        let code_cosine = code_index
            .cosine_tfidf(query)
            .into_iter()
            .map(|d| (d.doc_id, d.score))
            .collect();
        let code_bm25 = code_index
            .bm25(query, bm25_k1, bm25_b)
            .into_iter()
            .map(|d| (d.doc_id, d.score))
            .collect();
        let localizer = code_index.localize(query, LOCALIZER_DEPTH);
        let localizer_total = localizer.iter().map(|d| d.score).sum();
        L2rContext {
            report_index,
            code_index,
            bm25_k1,
            bm25_b,
            query_time,
            code_cosine,
            code_bm25,
            localizer,
            localizer_total,
        }
    }

    pub fn localizer(&self) -> &[ScoredDoc] {
        &self.localizer
    }
}

/// Feature vector for one (query, developer) pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct L2rFeatures {
    /// f1: VSM similarity, query vs concatenated touched-file tokens.
    pub vsm_code_profile: f64,
    /// f2: BM25, query vs the code profile.
    pub bm25_code_profile: f64,
    /// f3: best VSM score among individually touched files.
    pub max_vsm_file: f64,
    /// f4: best BM25 score among individually touched files.
    pub max_bm25_file: f64,
    /// f5: fraction of the localizer's top 10 touched by the developer.
    pub localizer_overlap: f64,
    /// f6: summed localizer scores of touched top-10 files.
    pub localizer_score_sum: f64,
    /// f7: best localizer score among touched top-10 files.
    pub localizer_score_max: f64,
    /// f8: f6 normalized by the total top-10 score.
    pub localizer_weighted_overlap: f64,
    /// f9: VSM similarity, query vs concatenated fixed-report tokens.
    pub vsm_report_profile: f64,
    /// f10: BM25, query vs the report profile.
    pub bm25_report_profile: f64,
    /// f11: best VSM similarity against any single fixed report.
    pub max_vsm_report: f64,
    /// f12: number of reports fixed.
    pub fix_count: f64,
    /// f13: 1 / (1 + days since last fix); 0 without fixes.
    pub recency: f64,
    /// f14: fixes in the trailing 90 days.
    pub recent_fixes: f64,
    /// f15: commits authored.
    pub commit_count: f64,
    /// f16: distinct files touched.
    pub distinct_files: f64,
}

impl L2rFeatures {
    pub const NAMES: [&'static str; FEATURE_COUNT] = [
        "vsm_code_profile",
        "bm25_code_profile",
        "max_vsm_file",
        "max_bm25_file",
        "localizer_overlap",
        "localizer_score_sum",
        "localizer_score_max",
        "localizer_weighted_overlap",
        "vsm_report_profile",
        "bm25_report_profile",
        "max_vsm_report",
        "fix_count",
        "recency",
        "recent_fixes",
        "commit_count",
        "distinct_files",
    ];

    pub fn to_array(self) -> [f64; FEATURE_COUNT] {
        [
            self.vsm_code_profile,
            self.bm25_code_profile,
            self.max_vsm_file,
            self.max_bm25_file,
            self.localizer_overlap,
            self.localizer_score_sum,
            self.localizer_score_max,
            self.localizer_weighted_overlap,
            self.vsm_report_profile,
            self.bm25_report_profile,
            self.max_vsm_report,
            self.fix_count,
            self.recency,
            self.recent_fixes,
            self.commit_count,
            self.distinct_files,
        ]
    }
}

/// Computes the 16 features; absent data (no touched files, no fixes)
/// yields zeros for the affected features.
pub fn l2r_features(query: &[String], profile: &DeveloperProfile, ctx: &L2rContext) -> L2rFeatures {
    let mut f = L2rFeatures {
        vsm_code_profile: profile_cosine(query, &profile.code_profile_tokens, ctx.code_index),
        bm25_code_profile: profile_bm25(
            query,
            &profile.code_profile_tokens,
            ctx.code_index,
            ctx.bm25_k1,
            ctx.bm25_b,
        ),
        vsm_report_profile: profile_cosine(query, &profile.report_profile_tokens, ctx.report_index),
        bm25_report_profile: profile_bm25(
            query,
            &profile.report_profile_tokens,
            ctx.report_index,
            ctx.bm25_k1,
            ctx.bm25_b,
        ),
        fix_count: profile.fix_count() as f64,
        commit_count: profile.commit_count as f64,
        distinct_files: profile.touched_files.len() as f64,
        ..L2rFeatures::default()
    };

    for path in &profile.touched_files {
        if let Some(&s) = ctx.code_cosine.get(path) {
            f.max_vsm_file = f.max_vsm_file.max(s);
        }
        if let Some(&s) = ctx.code_bm25.get(path) {
            f.max_bm25_file = f.max_bm25_file.max(s);
        }
    }

    let mut overlap = 0usize;
    for doc in &ctx.localizer {
        if profile.touched_files.contains(&doc.doc_id) {
            overlap += 1;
            f.localizer_score_sum += doc.score;
            f.localizer_score_max = f.localizer_score_max.max(doc.score);
        }
    }
    f.localizer_overlap = overlap as f64 / LOCALIZER_DEPTH as f64;
    if ctx.localizer_total > 0.0 {
        f.localizer_weighted_overlap = f.localizer_score_sum / ctx.localizer_total;
    }

    for tokens in &profile.fixed_report_tokens {
        let s = profile_cosine(query, tokens, ctx.report_index);
        f.max_vsm_report = f.max_vsm_report.max(s);
    }

    if let Some(last) = profile.last_fix() {
        let days = (ctx.query_time - last).num_seconds() as f64 / 86_400.0;
        f.recency = 1.0 / (1.0 + days);
    }
    f.recent_fixes = profile
        .fix_timestamps
        .iter()
        .filter(|&&t| ctx.query_time - t <= Duration::days(90))
        .count() as f64;

    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::history::HistoryView;
    use crate::index::build_index;
    use crate::recommenders::tests::{day, Builder};
    use crate::recommenders::build_profiles;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn code_index_of(corpus: &crate::corpus::Corpus) -> InvertedIndex {
        build_index(
            corpus
                .code_files()
                .iter()
                .enumerate()
                .map(|(i, f)| (f.path.clone(), corpus.code_tokens(i).to_vec()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn developer_without_history_scores_all_zero() {
        let report_index = build_index(Vec::new()).unwrap();
        let code_index = build_index(Vec::new()).unwrap();
        let query = toks("panic stack");
        let ctx = L2rContext::for_query(&query, day(10), &report_index, &code_index, 1.2, 0.75);
        let f = l2r_features(&query, &DeveloperProfile::empty("ghost".into()), &ctx);
        assert_eq!(f.to_array(), [0.0; FEATURE_COUNT]);
    }

    #[test]
    fn identical_single_file_profile_has_unit_vsm() {
        // the profile similarity is pinned to 1.0 even when the corpus has
        // a single file (damped idf keeps the weights nonzero)
        let corpus = Builder::new()
            .fixed_bug("1", 1, "ana", "placeholder", &["src/only.rs"])
            .code("src/only.rs", "panic mutex deadlock")
            .build();
        let history = HistoryView::at(&corpus, day(5));
        let profiles = build_profiles(&history);
        let report_index = build_index(history.report_docs()).unwrap();
        let code_index = code_index_of(&corpus);
        let query = toks("panic mutex deadlock");
        let ctx = L2rContext::for_query(&query, day(5), &report_index, &code_index, 1.2, 0.75);
        let f = l2r_features(&query, &profiles["ana"], &ctx);
        assert!((f.vsm_code_profile - 1.0).abs() < 1e-9, "{}", f.vsm_code_profile);
        assert!(f.bm25_code_profile > 0.0);
    }

    #[test]
    fn per_file_maxima_match_the_retrieval_scores() {
        let corpus = Builder::new()
            .fixed_bug("1", 1, "ana", "placeholder", &["src/hit.rs"])
            .code("src/hit.rs", "panic mutex deadlock")
            .code("src/other.rs", "layout grid painter")
            .build();
        let history = HistoryView::at(&corpus, day(5));
        let profiles = build_profiles(&history);
        let report_index = build_index(history.report_docs()).unwrap();
        let code_index = code_index_of(&corpus);
        let query = toks("panic mutex deadlock");
        let ctx = L2rContext::for_query(&query, day(5), &report_index, &code_index, 1.2, 0.75);
        let f = l2r_features(&query, &profiles["ana"], &ctx);
        let cosine_hit = code_index
            .cosine_tfidf(&query)
            .into_iter()
            .find(|d| d.doc_id == "src/hit.rs")
            .unwrap();
        let bm25_hit = code_index
            .bm25(&query, 1.2, 0.75)
            .into_iter()
            .find(|d| d.doc_id == "src/hit.rs")
            .unwrap();
        assert!((f.max_vsm_file - cosine_hit.score).abs() < 1e-12);
        assert!((f.max_bm25_file - bm25_hit.score).abs() < 1e-12);
        assert!((f.max_vsm_file - 1.0).abs() < 1e-9, "identical text, idf > 0");
    }

    #[test]
    fn localizer_overlap_counts_touched_top_files() {
        let corpus = Builder::new()
            .fixed_bug("1", 1, "dev", "placeholder", &["src/a.rs", "src/b.rs"])
            .code("src/a.rs", "panic handler")
            .code("src/b.rs", "panic recovery")
            .code("src/c.rs", "panic logging")
            .code("src/d.rs", "panic metrics")
            .code("src/e.rs", "unrelated parser")
            .build();
        let history = HistoryView::at(&corpus, day(5));
        let profiles = build_profiles(&history);
        let report_index = build_index(history.report_docs()).unwrap();
        let code_index = code_index_of(&corpus);
        let query = toks("panic");
        let ctx = L2rContext::for_query(&query, day(5), &report_index, &code_index, 1.2, 0.75);
        assert_eq!(ctx.localizer().len(), 4);
        let f = l2r_features(&query, &profiles["dev"], &ctx);
        // 4 files in the top 10, developer touched 2: still divided by 10
        assert!((f.localizer_overlap - 0.2).abs() < 1e-12);
        assert!(f.localizer_score_sum > 0.0);
        assert!(f.localizer_score_max > 0.0);
        let expected = f.localizer_score_sum
            / ctx.localizer().iter().map(|d| d.score).sum::<f64>();
        assert!((f.localizer_weighted_overlap - expected).abs() < 1e-12);
        assert!(f.localizer_weighted_overlap <= 1.0 + 1e-12);
    }

    #[test]
    fn no_localizer_hits_leave_overlap_features_zero() {
        let corpus = Builder::new()
            .fixed_bug("1", 1, "dev", "placeholder", &["src/a.rs"])
            .code("src/a.rs", "parser grammar")
            .build();
        let history = HistoryView::at(&corpus, day(5));
        let profiles = build_profiles(&history);
        let report_index = build_index(history.report_docs()).unwrap();
        let code_index = code_index_of(&corpus);
        let query = toks("network socket");
        let ctx = L2rContext::for_query(&query, day(5), &report_index, &code_index, 1.2, 0.75);
        let f = l2r_features(&query, &profiles["dev"], &ctx);
        assert_eq!(f.localizer_overlap, 0.0);
        assert_eq!(f.localizer_score_sum, 0.0);
        assert_eq!(f.localizer_weighted_overlap, 0.0);
    }

    #[test]
    fn history_features_track_profile_counts() {
        let corpus = Builder::new()
            .fixed_bug("1", 1, "ana", "alpha beta", &["src/a.rs"])
            .fixed_bug("2", 3, "ana", "gamma delta", &["src/b.rs", "src/c.rs"])
            .build();
        let history = HistoryView::at(&corpus, day(5));
        let profiles = build_profiles(&history);
        let report_index = build_index(history.report_docs()).unwrap();
        let code_index = build_index(Vec::new()).unwrap();
        let query = toks("alpha");
        let ctx = L2rContext::for_query(&query, day(5), &report_index, &code_index, 1.2, 0.75);
        let f = l2r_features(&query, &profiles["ana"], &ctx);
        assert_eq!(f.fix_count, 2.0);
        assert_eq!(f.commit_count, 2.0);
        assert_eq!(f.distinct_files, 3.0);
        assert_eq!(f.recent_fixes, 2.0);
        // last fix was day 3, query at day 5: two days
        assert!((f.recency - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fixes_older_than_ninety_days_age_out() {
        let corpus = Builder::new()
            .fixed_bug("1", 1, "ana", "old fix", &["src/a.rs"])
            .build();
        let history = HistoryView::at(&corpus, day(1) + Duration::days(120));
        let profiles = build_profiles(&history);
        let report_index = build_index(history.report_docs()).unwrap();
        let code_index = build_index(Vec::new()).unwrap();
        let query = toks("old");
        let ctx = L2rContext::for_query(
            &query,
            day(1) + Duration::days(120),
            &report_index,
            &code_index,
            1.2,
            0.75,
        );
        let f = l2r_features(&query, &profiles["ana"], &ctx);
        assert_eq!(f.recent_fixes, 0.0);
        assert_eq!(f.fix_count, 1.0);
        assert!((f.recency - 1.0 / 121.0).abs() < 1e-12);
    }

    #[test]
    fn best_single_report_similarity_hits_one_on_duplicate() {
        let corpus = Builder::new()
            .fixed_bug("1", 1, "ana", "scroll wheel ignores direction", &["src/a.rs"])
            .fixed_bug("2", 2, "ana", "font hinting broken", &["src/a.rs"])
            .build();
        let history = HistoryView::at(&corpus, day(5));
        let profiles = build_profiles(&history);
        let report_index = build_index(history.report_docs()).unwrap();
        let code_index = build_index(Vec::new()).unwrap();
        let query = crate::corpus::preprocess("scroll wheel ignores direction");
        let ctx = L2rContext::for_query(&query, day(5), &report_index, &code_index, 1.2, 0.75);
        let f = l2r_features(&query, &profiles["ana"], &ctx);
        assert!((f.max_vsm_report - 1.0).abs() < 1e-9);
        assert!(f.vsm_report_profile < 1.0);
        assert!(f.vsm_report_profile > 0.0);
    }

    #[test]
    fn all_features_finite_and_front_half_non_negative() {
        let corpus = Builder::new()
            .fixed_bug("1", 1, "ana", "alpha beta gamma", &["src/a.rs"])
            .code("src/a.rs", "alpha delta")
            .build();
        let history = HistoryView::at(&corpus, day(9));
        let profiles = build_profiles(&history);
        let report_index = build_index(history.report_docs()).unwrap();
        let code_index = code_index_of(&corpus);
        let query = toks("alpha beta");
        let ctx = L2rContext::for_query(&query, day(9), &report_index, &code_index, 1.2, 0.75);
        for p in profiles.values() {
            let arr = l2r_features(&query, p, &ctx).to_array();
            assert!(arr.iter().all(|v| v.is_finite()));
            assert!(arr[..8].iter().all(|v| *v >= 0.0));
        }
    }
}
