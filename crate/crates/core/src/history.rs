//! Time-scoped views of a corpus.
//!
//! Every recommender statistic must be derivable from artifacts strictly
//! before the query's creation time. `HistoryView` is the only sanctioned
//! way to reach past data: it filters reports by `created_at < cutoff` and
//! commits by `timestamp < cutoff`, and reports every artifact it yields to
//! an optional observer so tests can assert the boundary is respected.
//!
//! Two report pools are exposed on purpose:
//!
//! * the *experimental* pool (closed, bug-labeled, with linked commits)
//!   drives fix counts, the similar-report index, and the per-query
//!   meta-features, mirroring how queries themselves are selected;
//! * the *resolved* pool (closed with linked commits, any label) plus raw
//!   commits drive developer activity profiles and the candidate set, so
//!   that non-bug maintenance work still counts as developer experience.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};

use crate::corpus::{BugReport, Commit, Corpus, DevId, GroundTruth};

/// Receives every artifact timestamp a view hands out.
pub trait BoundaryObserver {
    fn observe(&self, what: &str, at: DateTime<Utc>);
}

/// Observer that panics when an artifact does not strictly predate the
/// cutoff. Installed by the experiment drivers as a tripwire.
pub struct AssertingObserver {
    cutoff: DateTime<Utc>,
}

impl AssertingObserver {
    pub fn new(cutoff: DateTime<Utc>) -> Self {
        AssertingObserver { cutoff }
    }
}

impl BoundaryObserver for AssertingObserver {
    fn observe(&self, what: &str, at: DateTime<Utc>) {
        assert!(
            at < self.cutoff,
            "history boundary violated: {what} at {at} not before {}",
            self.cutoff
        );
    }
}

#[derive(Clone, Copy)]
pub struct HistoryView<'a> {
    corpus: &'a Corpus,
    cutoff: DateTime<Utc>,
    observer: Option<&'a dyn BoundaryObserver>,
}

impl<'a> HistoryView<'a> {
    pub fn at(corpus: &'a Corpus, cutoff: DateTime<Utc>) -> Self {
        HistoryView {
            corpus,
            cutoff,
            observer: None,
        }
    }

    pub fn with_observer(
        corpus: &'a Corpus,
        cutoff: DateTime<Utc>,
        observer: &'a dyn BoundaryObserver,
    ) -> Self {
        HistoryView {
            corpus,
            cutoff,
            observer: Some(observer),
        }
    }

    pub fn cutoff(&self) -> DateTime<Utc> {
        self.cutoff
    }

    pub fn corpus(&self) -> &'a Corpus {
        self.corpus
    }

    fn note(&self, what: &str, at: DateTime<Utc>) {
        if let Some(obs) = self.observer {
            obs.observe(what, at);
        }
    }

    /// Indices of past bug-study reports (closed, bug-labeled, linked).
    pub fn past_experimental(&self) -> Vec<usize> {
        self.past_reports(|c, i| c.is_experimental(i))
    }

    /// Indices of past resolved reports (closed with linked commits).
    pub fn past_resolved(&self) -> Vec<usize> {
        self.past_reports(|c, i| c.is_resolved(i))
    }

    fn past_reports(&self, keep: impl Fn(&Corpus, usize) -> bool) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, r) in self.corpus.reports().iter().enumerate() {
            if r.created_at >= self.cutoff {
                break; // reports are sorted by created_at
            }
            if keep(self.corpus, i) {
                self.note("report", r.created_at);
                out.push(i);
            }
        }
        out
    }

    /// Indices of commits strictly before the cutoff.
    pub fn past_commits(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, c) in self.corpus.commits().iter().enumerate() {
            if c.timestamp >= self.cutoff {
                break; // commits are sorted by timestamp
            }
            self.note("commit", c.timestamp);
            out.push(i);
        }
        out
    }

    pub fn report(&self, idx: usize) -> &'a BugReport {
        self.corpus.report(idx)
    }

    pub fn commit(&self, idx: usize) -> &'a Commit {
        &self.corpus.commits()[idx]
    }

    /// Number of past bug reports each developer fixed; developers without
    /// fixes are absent.
    pub fn bug_fix_counts(&self) -> BTreeMap<DevId, usize> {
        let mut counts = BTreeMap::new();
        for i in self.past_experimental() {
            if let Some(gt) = self.corpus.ground_truth(i) {
                for dev in gt.iter() {
                    *counts.entry(dev.clone()).or_insert(0) += 1;
                }
            }
        }
        counts
    }

    /// `(report_id, tokens)` documents for the similar-report index.
    pub fn report_docs(&self) -> Vec<(String, Vec<String>)> {
        self.past_experimental()
            .into_iter()
            .map(|i| {
                (
                    self.corpus.report(i).id.clone(),
                    self.corpus.report_tokens(i).to_vec(),
                )
            })
            .collect()
    }

    /// report id -> fixing developers, over past bug-study reports.
    pub fn fixers(&self) -> BTreeMap<String, GroundTruth> {
        self.past_experimental()
            .into_iter()
            .filter_map(|i| {
                self.corpus
                    .ground_truth(i)
                    .map(|gt| (self.corpus.report(i).id.clone(), gt.clone()))
            })
            .collect()
    }

    /// Developers with any prior activity: a past resolved fix, or a past
    /// commit as author or committer.
    pub fn candidates(&self) -> BTreeSet<DevId> {
        let mut devs = BTreeSet::new();
        for i in self.past_resolved() {
            if let Some(gt) = self.corpus.ground_truth(i) {
                devs.extend(gt.iter().cloned());
            }
        }
        for i in self.past_commits() {
            let c = &self.corpus.commits()[i];
            devs.insert(c.author.clone());
            devs.insert(c.committer.clone());
        }
        devs
    }
}
