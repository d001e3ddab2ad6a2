//! Ranking metrics (rank, MRR, MAP, HIT@k), best-approach labeling with
//! seeded tie randomization, and the per-query upper bound ("Max").

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::corpus::GroundTruth;

/// The three base triage approaches, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Approach {
    Freq,
    Textsim,
    L2r,
}

impl Approach {
    pub const ALL: [Approach; 3] = [Approach::Freq, Approach::Textsim, Approach::L2r];

    pub fn name(self) -> &'static str {
        match self {
            Approach::Freq => "FREQ",
            Approach::Textsim => "TEXTSIM",
            Approach::L2r => "L2R",
        }
    }

    /// Stable class index used by the classifiers (FREQ=0, TEXTSIM=1, L2R=2).
    pub fn class_index(self) -> usize {
        match self {
            Approach::Freq => 0,
            Approach::Textsim => 1,
            Approach::L2r => 2,
        }
    }

    pub fn from_class_index(i: usize) -> Option<Approach> {
        Approach::ALL.get(i).copied()
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One value per approach.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerApproach<T> {
    pub freq: T,
    pub textsim: T,
    pub l2r: T,
}

impl<T> PerApproach<T> {
    pub fn get(&self, a: Approach) -> &T {
        match a {
            Approach::Freq => &self.freq,
            Approach::Textsim => &self.textsim,
            Approach::L2r => &self.l2r,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Approach, &T)> {
        Approach::ALL.iter().map(move |&a| (a, self.get(a)))
    }

    pub fn map<U>(&self, mut f: impl FnMut(Approach, &T) -> U) -> PerApproach<U> {
        PerApproach {
            freq: f(Approach::Freq, &self.freq),
            textsim: f(Approach::Textsim, &self.textsim),
            l2r: f(Approach::L2r, &self.l2r),
        }
    }
}

/// 1-based position of the first relevant developer, or a miss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rank {
    At(usize),
    Miss,
}

impl Rank {
    pub fn reciprocal(self) -> f64 {
        match self {
            Rank::At(r) => 1.0 / r as f64,
            Rank::Miss => 0.0,
        }
    }

    pub fn is_miss(self) -> bool {
        matches!(self, Rank::Miss)
    }

    pub fn within(self, k: usize) -> bool {
        matches!(self, Rank::At(r) if r <= k)
    }
}

impl PartialOrd for Rank {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// A miss compares greater than any real rank.
impl Ord for Rank {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (Rank::At(a), Rank::At(b)) => a.cmp(b),
            (Rank::At(_), Rank::Miss) => std::cmp::Ordering::Less,
            (Rank::Miss, Rank::At(_)) => std::cmp::Ordering::Greater,
            (Rank::Miss, Rank::Miss) => std::cmp::Ordering::Equal,
        }
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rank::At(r) => write!(f, "{r}"),
            Rank::Miss => f.write_str("MISS"),
        }
    }
}

impl Serialize for Rank {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Rank::At(r) => s.serialize_u64(*r as u64),
            Rank::Miss => s.serialize_str("MISS"),
        }
    }
}

impl<'de> Deserialize<'de> for Rank {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(0) => Err(D::Error::custom("rank must be positive")),
            Raw::Num(n) => Ok(Rank::At(n as usize)),
            Raw::Text(s) if s == "MISS" => Ok(Rank::Miss),
            Raw::Text(s) => Err(D::Error::custom(format!("bad rank {s:?}"))),
        }
    }
}

/// Evaluation of one ranked list against one query's ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub report_id: String,
    pub approach: String,
    pub rank: Rank,
    pub reciprocal_rank: f64,
    pub average_precision: f64,
}

impl QueryResult {
    pub fn new(report_id: String, approach: String, rank: Rank, average_precision: f64) -> Self {
        QueryResult {
            report_id,
            approach,
            reciprocal_rank: rank.reciprocal(),
            rank,
            average_precision,
        }
    }

    /// Scores a ranked developer list against the ground truth.
    pub fn evaluate(report_id: &str, approach: &str, ranked: &[String], gt: &GroundTruth) -> Self {
        QueryResult::new(
            report_id.to_string(),
            approach.to_string(),
            rank_of_first_hit(ranked, gt),
            average_precision(ranked, gt),
        )
    }

    pub fn outcome(&self) -> Outcome {
        Outcome {
            rank: self.rank,
            average_precision: self.average_precision,
        }
    }
}

/// The (rank, AP) pair that metrics aggregation needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub rank: Rank,
    pub average_precision: f64,
}

impl Outcome {
    pub const MISS: Outcome = Outcome {
        rank: Rank::Miss,
        average_precision: 0.0,
    };
}

/// Aggregate retrieval quality over a query set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(rename = "MRR")]
    pub mrr: f64,
    #[serde(rename = "MAP")]
    pub map: f64,
    #[serde(rename = "H@1")]
    pub h1: f64,
    #[serde(rename = "H@2")]
    pub h2: f64,
    #[serde(rename = "H@3")]
    pub h3: f64,
    #[serde(rename = "H@4")]
    pub h4: f64,
    #[serde(rename = "H@5")]
    pub h5: f64,
    pub query_count: usize,
}

impl Metrics {
    pub fn hit_at(&self, k: usize) -> f64 {
        match k {
            1 => self.h1,
            2 => self.h2,
            3 => self.h3,
            4 => self.h4,
            5 => self.h5,
            _ => panic!("hit_at supports k = 1..=5, got {k}"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("cannot aggregate an empty query set")]
    EmptyInput,
}

/// 1-based position of the first ground-truth developer; miss if absent.
pub fn rank_of_first_hit(ranked: &[String], gt: &GroundTruth) -> Rank {
    ranked
        .iter()
        .position(|d| gt.contains(d))
        .map(|p| Rank::At(p + 1))
        .unwrap_or(Rank::Miss)
}

/// AP = (sum of precision at each position holding a ground-truth developer)
/// divided by |ground truth|; developers never retrieved contribute zero.
pub fn average_precision(ranked: &[String], gt: &GroundTruth) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, dev) in ranked.iter().enumerate() {
        if gt.contains(dev) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / gt.len() as f64
}

/// Mean metrics over per-query results.
pub fn aggregate(results: &[QueryResult]) -> Result<Metrics, EvalError> {
    aggregate_outcomes(results.iter().map(QueryResult::outcome))
}

pub fn aggregate_outcomes(outcomes: impl IntoIterator<Item = Outcome>) -> Result<Metrics, EvalError> {
    let outcomes: Vec<Outcome> = outcomes.into_iter().collect();
    if outcomes.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = outcomes.len() as f64;
    let mrr = outcomes.iter().map(|o| o.rank.reciprocal()).sum::<f64>() / n;
    let map = outcomes.iter().map(|o| o.average_precision).sum::<f64>() / n;
    let hit = |k: usize| outcomes.iter().filter(|o| o.rank.within(k)).count() as f64 / n;
    Ok(Metrics {
        mrr,
        map,
        h1: hit(1),
        h2: hit(2),
        h3: hit(3),
        h4: hit(4),
        h5: hit(5),
        query_count: outcomes.len(),
    })
}

/// One query's outcome under each of the three approaches.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryTriple {
    pub report_id: String,
    pub outcomes: PerApproach<Outcome>,
}

impl QueryTriple {
    /// Approaches achieving the minimal rank, in canonical order. Empty when
    /// every approach missed.
    pub fn best_set(&self) -> Vec<Approach> {
        let best = Approach::ALL
            .iter()
            .map(|&a| self.outcomes.get(a).rank)
            .min()
            .unwrap();
        if best == Rank::Miss {
            return Vec::new();
        }
        Approach::ALL
            .iter()
            .copied()
            .filter(|&a| self.outcomes.get(a).rank == best)
            .collect()
    }
}

/// Tally of which approaches achieved the per-query best rank.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BestDistribution {
    pub freq_only: usize,
    pub textsim_only: usize,
    pub l2r_only: usize,
    pub freq_textsim_tie: usize,
    pub freq_l2r_tie: usize,
    pub textsim_l2r_tie: usize,
    pub three_way_tie: usize,
    pub total: usize,
}

impl BestDistribution {
    fn record(&mut self, best: &[Approach]) {
        use Approach::*;
        match best {
            [Freq] => self.freq_only += 1,
            [Textsim] => self.textsim_only += 1,
            [L2r] => self.l2r_only += 1,
            [Freq, Textsim] => self.freq_textsim_tie += 1,
            [Freq, L2r] => self.freq_l2r_tie += 1,
            [Textsim, L2r] => self.textsim_l2r_tie += 1,
            [Freq, Textsim, L2r] => self.three_way_tie += 1,
            other => unreachable!("invalid best set {other:?}"),
        }
        self.total += 1;
    }

    pub fn cells(&self) -> [usize; 7] {
        [
            self.freq_only,
            self.textsim_only,
            self.l2r_only,
            self.freq_textsim_tie,
            self.freq_l2r_tie,
            self.textsim_l2r_tie,
            self.three_way_tie,
        ]
    }
}

/// Per-report best-approach labels plus the tie-category distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestApproachLabeling {
    pub labels: BTreeMap<String, Approach>,
    pub distribution: BestDistribution,
    /// Queries where every approach missed; excluded from the labels.
    pub all_miss: usize,
}

/// Labels each query with the rank-minimizing approach. Rank ties are broken
/// by a uniform seeded draw among the tied approaches; queries where all
/// three approaches miss are excluded and counted in `all_miss`.
pub fn best_approach_labels(queries: &[QueryTriple], seed: u64) -> BestApproachLabeling {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = BTreeMap::new();
    let mut distribution = BestDistribution::default();
    let mut all_miss = 0;
    for q in queries {
        let best = q.best_set();
        if best.is_empty() {
            all_miss += 1;
            continue;
        }
        distribution.record(&best);
        let label = best[rng.gen_range(0..best.len())];
        labels.insert(q.report_id.clone(), label);
    }
    BestApproachLabeling {
        labels,
        distribution,
        all_miss,
    }
}

/// The approach the oracle plays for one query: minimal rank, rank ties
/// resolved toward higher AP, remaining ties toward canonical order.
pub fn oracle_approach(triple: &QueryTriple) -> Approach {
    Approach::ALL
        .into_iter()
        .min_by(|&x, &y| {
            let (ox, oy) = (triple.outcomes.get(x), triple.outcomes.get(y));
            ox.rank
                .cmp(&oy.rank)
                .then_with(|| oy.average_precision.partial_cmp(&ox.average_precision).unwrap())
        })
        .unwrap()
}

/// Per-query upper bound: the outcome of the rank-minimizing approach (rank
/// ties resolved toward higher AP). All-miss queries contribute a miss.
pub fn oracle_outcome(triple: &QueryTriple) -> Outcome {
    *triple.outcomes.get(oracle_approach(triple))
}

/// Metrics of the per-query upper bound across a query set.
pub fn oracle_metrics(queries: &[QueryTriple]) -> Result<Metrics, EvalError> {
    aggregate_outcomes(queries.iter().map(oracle_outcome))
}

/// Metrics of a single approach across a query set.
pub fn approach_metrics(queries: &[QueryTriple], approach: Approach) -> Result<Metrics, EvalError> {
    aggregate_outcomes(queries.iter().map(|q| *q.outcomes.get(approach)))
}
