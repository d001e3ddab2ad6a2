//! The 23 pre-retrieval features that predict which approach will perform
//! best on a report: query specificity (11), query/corpus similarity (6),
//! retrieval coherency (1), and developer activity (5).

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::DevId;
use crate::index::InvertedIndex;

pub const META_FEATURE_COUNT: usize = 23;

/// Most pairs of matching documents considered when averaging coherency.
pub const CS_PAIR_CAP: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetaFeatureVector {
    pub avg_idf: f64,
    pub max_idf: f64,
    pub dev_idf: f64,
    pub avg_ictf: f64,
    pub max_ictf: f64,
    pub dev_ictf: f64,
    pub scs: f64,
    pub qs: f64,
    pub avg_var: f64,
    pub max_var: f64,
    pub sum_var: f64,
    pub avg_scq_reports: f64,
    pub max_scq_reports: f64,
    pub sum_scq_reports: f64,
    pub avg_scq_code: f64,
    pub max_scq_code: f64,
    pub sum_scq_code: f64,
    pub cs: f64,
    pub active_devs: f64,
    pub avg_fixes: f64,
    pub median_fixes: f64,
    pub max_fixes: f64,
    pub fix_entropy: f64,
}

impl MetaFeatureVector {
    pub const NAMES: [&'static str; META_FEATURE_COUNT] = [
        "avgIDF",
        "maxIDF",
        "devIDF",
        "avgICTF",
        "maxICTF",
        "devICTF",
        "SCS",
        "QS",
        "avgVAR",
        "maxVAR",
        "sumVAR",
        "avgSCQ_reports",
        "maxSCQ_reports",
        "sumSCQ_reports",
        "avgSCQ_code",
        "maxSCQ_code",
        "sumSCQ_code",
        "CS",
        "activeDevs",
        "avgFixes",
        "medianFixes",
        "maxFixes",
        "fixEntropy",
    ];

    pub fn to_array(&self) -> [f64; META_FEATURE_COUNT] {
        [
            self.avg_idf,
            self.max_idf,
            self.dev_idf,
            self.avg_ictf,
            self.max_ictf,
            self.dev_ictf,
            self.scs,
            self.qs,
            self.avg_var,
            self.max_var,
            self.sum_var,
            self.avg_scq_reports,
            self.max_scq_reports,
            self.sum_scq_reports,
            self.avg_scq_code,
            self.max_scq_code,
            self.sum_scq_code,
            self.cs,
            self.active_devs,
            self.avg_fixes,
            self.median_fixes,
            self.max_fixes,
            self.fix_entropy,
        ]
    }

    pub fn from_array(values: [f64; META_FEATURE_COUNT]) -> Self {
        Self {
            avg_idf: values[0],
            max_idf: values[1],
            dev_idf: values[2],
            avg_ictf: values[3],
            max_ictf: values[4],
            dev_ictf: values[5],
            scs: values[6],
            qs: values[7],
            avg_var: values[8],
            max_var: values[9],
            sum_var: values[10],
            avg_scq_reports: values[11],
            max_scq_reports: values[12],
            sum_scq_reports: values[13],
            avg_scq_code: values[14],
            max_scq_code: values[15],
            sum_scq_code: values[16],
            cs: values[17],
            active_devs: values[18],
            avg_fixes: values[19],
            median_fixes: values[20],
            max_fixes: values[21],
            fix_entropy: values[22],
        }
    }

    pub fn csv_header() -> String {
        let mut header = String::from("report_id");
        for name in Self::NAMES {
            header.push(',');
            header.push_str(name);
        }
        header
    }

    pub fn csv_row(&self, report_id: &str) -> String {
        let mut row = String::from(report_id);
        for v in self.to_array() {
            row.push_str(&format!(",{v:.6}"));
        }
        row
    }
}

struct Aggregate {
    avg: f64,
    max: f64,
    dev: f64,
    sum: f64,
}

/// Mean / max / population standard deviation / sum; zeros when empty.
fn aggregate(values: &[f64]) -> Aggregate {
    if values.is_empty() {
        return Aggregate {
            avg: 0.0,
            max: 0.0,
            dev: 0.0,
            sum: 0.0,
        };
    }
    let n = values.len() as f64;
    let sum: f64 = values.iter().sum();
    let avg = sum / n;
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let var = values.iter().map(|v| (v - avg) * (v - avg)).sum::<f64>() / n;
    Aggregate {
        avg,
        max,
        dev: var.sqrt(),
        sum,
    }
}

fn distinct_counts(query: &[String]) -> BTreeMap<&str, usize> {
    let mut counts = BTreeMap::new();
    for t in query {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    counts
}

/// Computes all 23 features for one query against pre-query history.
/// Terms absent from a corpus contribute nothing to that corpus's
/// aggregates; empty inputs yield zeros.
pub fn compute_meta_features(
    query: &[String],
    report_index: &InvertedIndex,
    code_index: &InvertedIndex,
    fix_counts: &BTreeMap<DevId, usize>,
    cs_seed: u64,
) -> MetaFeatureVector {
    let mut f = MetaFeatureVector::default();
    let counts = distinct_counts(query);
    let n = report_index.n_docs() as f64;
    let total_tokens = report_index.total_tokens() as f64;

    let mut idfs = Vec::new();
    let mut ictfs = Vec::new();
    let mut vars = Vec::new();
    for term in counts.keys() {
        let df = report_index.df(term);
        if df == 0 {
            continue;
        }
        let idf = (n / df as f64).ln();
        idfs.push(idf);
        ictfs.push((total_tokens / report_index.cf(term) as f64).ln());
        let weights: Vec<f64> = report_index
            .postings_for(term)
            .iter()
            .map(|&(_, tf)| (1.0 + (tf as f64).ln()) * idf)
            .collect();
        let mean = weights.iter().sum::<f64>() / weights.len() as f64;
        let var = weights.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / weights.len() as f64;
        vars.push(var);
    }
    let idf_agg = aggregate(&idfs);
    f.avg_idf = idf_agg.avg;
    f.max_idf = idf_agg.max;
    f.dev_idf = idf_agg.dev;
    let ictf_agg = aggregate(&ictfs);
    f.avg_ictf = ictf_agg.avg;
    f.max_ictf = ictf_agg.max;
    f.dev_ictf = ictf_agg.dev;
    let var_agg = aggregate(&vars);
    f.avg_var = var_agg.avg;
    f.max_var = var_agg.max;
    f.sum_var = var_agg.sum;

    // simplified clarity: KL of the query language model against the
    // collection model, restricted to query terms present in the collection
    if !query.is_empty() && total_tokens > 0.0 {
        let q_len = query.len() as f64;
        for (term, &qtf) in &counts {
            let cf = report_index.cf(term);
            if cf == 0 {
                continue;
            }
            let p_q = qtf as f64 / q_len;
            let p_c = cf as f64 / total_tokens;
            f.scs += p_q * (p_q / p_c).ln();
        }
    }

    let matching = report_index.matching_docs(query);
    if report_index.n_docs() > 0 {
        f.qs = matching.len() as f64 / n;
    }

    let scq = |index: &InvertedIndex| -> Aggregate {
        let mut values = Vec::new();
        for term in counts.keys() {
            let df = index.df(term);
            if df == 0 {
                continue;
            }
            let idf = (index.n_docs() as f64 / df as f64).ln();
            values.push((1.0 + (index.cf(term) as f64).ln()) * idf);
        }
        aggregate(&values)
    };
    let scq_r = scq(report_index);
    f.avg_scq_reports = scq_r.avg;
    f.max_scq_reports = scq_r.max;
    f.sum_scq_reports = scq_r.sum;
    let scq_c = scq(code_index);
    f.avg_scq_code = scq_c.avg;
    f.max_scq_code = scq_c.max;
    f.sum_scq_code = scq_c.sum;

    f.cs = coherency(report_index, &matching, cs_seed);

    if !fix_counts.is_empty() {
        let mut values: Vec<f64> = fix_counts.values().map(|&c| c as f64).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let agg = aggregate(&values);
        f.active_devs = values.len() as f64;
        f.avg_fixes = agg.avg;
        f.max_fixes = agg.max;
        let mid = values.len() / 2;
        f.median_fixes = if values.len() % 2 == 1 {
            values[mid]
        } else {
            (values[mid - 1] + values[mid]) / 2.0
        };
        let total: f64 = agg.sum;
        f.fix_entropy = -values
            .iter()
            .map(|&c| {
                let p = c / total;
                p * p.ln()
            })
            .sum::<f64>();
    }

    f
}

/// Mean pairwise similarity among documents matching the query, over all
/// pairs or a seeded sample of `CS_PAIR_CAP` when there are more.
fn coherency(index: &InvertedIndex, matching: &[usize], seed: u64) -> f64 {
    let m = matching.len();
    if m < 2 {
        return 0.0;
    }
    let total_pairs = m * (m - 1) / 2;
    let mut sum = 0.0;
    let mut count = 0usize;
    if total_pairs <= CS_PAIR_CAP {
        for i in 0..m {
            for j in (i + 1)..m {
                sum += index.doc_cosine(matching[i], matching[j]);
                count += 1;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chosen = rand::seq::index::sample(&mut rng, total_pairs, CS_PAIR_CAP);
        for linear in chosen {
            let (i, j) = decode_pair(linear, m);
            sum += index.doc_cosine(matching[i], matching[j]);
            count += 1;
        }
    }
    sum / count as f64
}

/// Maps a linear index in [0, m*(m-1)/2) to the corresponding (i, j) pair
/// with i < j, enumerated row by row.
fn decode_pair(linear: usize, m: usize) -> (usize, usize) {
    let mut remaining = linear;
    for i in 0..m - 1 {
        let row = m - 1 - i;
        if remaining < row {
            return (i, i + 1 + remaining);
        }
        remaining -= row;
    }
    unreachable!("linear pair index out of range")
}
