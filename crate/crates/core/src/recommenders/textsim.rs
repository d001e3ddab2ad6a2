//! TEXTSIM: retrieve similar past reports, emit their fixers in order.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{DevId, GroundTruth};
use crate::history::HistoryView;
use crate::index::{build_index, InvertedIndex};
use crate::recommenders::{Method, RankedRecommendation};

/// Retrieval state for one point in time: an index over past bug reports
/// and the map from report id to its fixers.
pub struct TextSimContext {
    pub index: InvertedIndex,
    pub fixers: BTreeMap<String, GroundTruth>,
}

impl TextSimContext {
    pub fn from_history(history: &HistoryView) -> Self {
        let index = build_index(history.report_docs())
            .expect("report ids are unique by corpus construction");
        TextSimContext {
            index,
            fixers: history.fixers(),
        }
    }
}

/// Walks the reports ranked by cosine similarity and appends each report's
/// fixers (id ascending within a report), skipping developers already
/// emitted. A developer's score is the similarity of the first report that
/// introduced them, so the emission order is preserved even across
/// equal-similarity reports.
pub fn textsim_recommend(report_id: &str, query: &[String], ctx: &TextSimContext) -> RankedRecommendation {
    let mut emitted: BTreeSet<DevId> = BTreeSet::new();
    let mut ranked = Vec::new();
    for doc in ctx.index.cosine_tfidf(query) {
        let Some(fixers) = ctx.fixers.get(&doc.doc_id) else { continue };
        for dev in fixers.iter() {
            if emitted.insert(dev.clone()) {
                ranked.push((dev.clone(), doc.score));
            }
        }
    }
    RankedRecommendation {
        report_id: report_id.to_string(),
        approach: Method::Textsim,
        ranked,
    }
}
