//! The three triage approaches: fix-frequency ranking, similar-report
//! retrieval, and a learned pairwise ranker over 16 relevance features.

mod features;
mod freq;
mod profile;
mod ranksvm;
mod textsim;

pub use features::{l2r_features, L2rContext, L2rFeatures, FEATURE_COUNT, LOCALIZER_DEPTH};
pub use freq::freq_recommend;
pub use profile::{build_profiles, DeveloperProfile};
pub use ranksvm::{
    pairwise_accuracy, ranksvm_train, LinearRankModel, RankConfig, RankError, RankTuple,
};
pub use textsim::{textsim_recommend, TextSimContext};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{DevId, GroundTruth};

/// Which system produced a recommendation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Freq,
    Textsim,
    L2r,
    Lupin,
    Oracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Freq => "FREQ",
            Method::Textsim => "TEXTSIM",
            Method::L2r => "L2R",
            Method::Lupin => "LUPIN",
            Method::Oracle => "ORACLE",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<crate::evalkit::Approach> for Method {
    fn from(a: crate::evalkit::Approach) -> Method {
        match a {
            crate::evalkit::Approach::Freq => Method::Freq,
            crate::evalkit::Approach::Textsim => Method::Textsim,
            crate::evalkit::Approach::L2r => Method::L2r,
        }
    }
}

/// Ordered developer recommendation for one report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRecommendation {
    pub report_id: String,
    pub approach: Method,
    /// (developer, score), best first; developers unique.
    pub ranked: Vec<(DevId, f64)>,
}

impl RankedRecommendation {
    /// Builds a recommendation from unordered scores: descending score,
    /// ties broken by ascending developer id.
    pub fn from_scores(report_id: &str, approach: Method, mut scored: Vec<(DevId, f64)>) -> Self {
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("scores must not be NaN")
                .then_with(|| a.0.cmp(&b.0))
        });
        RankedRecommendation {
            report_id: report_id.to_string(),
            approach,
            ranked: scored,
        }
    }

    pub fn developer_ids(&self) -> Vec<DevId> {
        self.ranked.iter().map(|(d, _)| d.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }
}

/// Scores every candidate developer with the trained ranking model.
/// Zero-scored developers stay in the list; ties fall back to id order.
pub fn l2r_recommend(
    report_id: &str,
    query: &[String],
    model: &LinearRankModel,
    candidates: impl IntoIterator<Item = DevId>,
    profiles: &BTreeMap<DevId, DeveloperProfile>,
    ctx: &L2rContext,
) -> RankedRecommendation {
    let scored: Vec<(DevId, f64)> = candidates
        .into_iter()
        .map(|dev| {
            let feats = match profiles.get(&dev) {
                Some(p) => l2r_features(query, p, ctx),
                None => l2r_features(query, &DeveloperProfile::empty(dev.clone()), ctx),
            };
            let score = model.score(&feats.to_array());
            (dev, score)
        })
        .collect();
    RankedRecommendation::from_scores(report_id, Method::L2r, scored)
}

/// Builds the rank-training tuples for one query: ground-truth developers
/// are relevant; the up-to-10 most frequent non-ground-truth fixers are the
/// negatives.
pub fn training_tuples(
    report_id: &str,
    query: &[String],
    gt: &GroundTruth,
    freq_ranking: &RankedRecommendation,
    profiles: &BTreeMap<DevId, DeveloperProfile>,
    ctx: &L2rContext,
) -> Vec<RankTuple> {
    let features_of = |dev: &DevId| -> [f64; FEATURE_COUNT] {
        match profiles.get(dev) {
            Some(p) => l2r_features(query, p, ctx).to_array(),
            None => l2r_features(query, &DeveloperProfile::empty(dev.clone()), ctx).to_array(),
        }
    };
    let mut tuples = Vec::new();
    for dev in gt.iter() {
        tuples.push(RankTuple {
            query_id: report_id.to_string(),
            features: features_of(dev),
            relevant: true,
        });
    }
    let mut negatives = 0;
    for (dev, _) in &freq_ranking.ranked {
        if gt.contains(dev) {
            continue;
        }
        tuples.push(RankTuple {
            query_id: report_id.to_string(),
            features: features_of(dev),
            relevant: false,
        });
        negatives += 1;
        if negatives == 10 {
            break;
        }
    }
    tuples
}
