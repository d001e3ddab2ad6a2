//! Per-developer activity profiles, rebuilt from history before each query.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};

use crate::corpus::DevId;
use crate::history::HistoryView;

/// Everything the ranking features need to know about one developer,
/// derived from resolved reports and commits before the query.
#[derive(Debug, Clone, PartialEq)]
pub struct DeveloperProfile {
    pub developer_id: DevId,
    /// Reports this developer fixed, oldest first.
    pub fixed_report_ids: Vec<String>,
    /// Token lists of those reports, parallel to `fixed_report_ids`.
    pub fixed_report_tokens: Vec<Vec<String>>,
    /// Fix events, timed by the fixed report's creation (the latest signal
    /// guaranteed to predate the query), parallel to `fixed_report_ids`.
    pub fix_timestamps: Vec<DateTime<Utc>>,
    /// Paths of files appearing in commits this developer authored.
    pub touched_files: BTreeSet<String>,
    /// Commits authored.
    pub commit_count: usize,
    /// Concatenated tokens of all touched files, path order.
    pub code_profile_tokens: Vec<String>,
    /// Concatenated tokens of all fixed reports, fix order.
    pub report_profile_tokens: Vec<String>,
}

impl DeveloperProfile {
    pub fn empty(developer_id: DevId) -> Self {
        DeveloperProfile {
            developer_id,
            fixed_report_ids: Vec::new(),
            fixed_report_tokens: Vec::new(),
            fix_timestamps: Vec::new(),
            touched_files: BTreeSet::new(),
            commit_count: 0,
            code_profile_tokens: Vec::new(),
            report_profile_tokens: Vec::new(),
        }
    }

    pub fn fix_count(&self) -> usize {
        self.fixed_report_ids.len()
    }

    pub fn last_fix(&self) -> Option<DateTime<Utc>> {
        self.fix_timestamps.iter().max().copied()
    }
}

/// Builds profiles for every developer with any activity in the view:
/// fixes come from resolved reports (any label), file/commit activity from
/// authored commits.
pub fn build_profiles(history: &HistoryView) -> BTreeMap<DevId, DeveloperProfile> {
    let corpus = history.corpus();
    let mut profiles: BTreeMap<DevId, DeveloperProfile> = BTreeMap::new();

    for i in history.past_resolved() {
        let Some(gt) = corpus.ground_truth(i) else { continue };
        let report = corpus.report(i);
        let tokens = corpus.report_tokens(i);
        for dev in gt.iter() {
            let p = profiles
                .entry(dev.clone())
                .or_insert_with(|| DeveloperProfile::empty(dev.clone()));
            p.fixed_report_ids.push(report.id.clone());
            p.fixed_report_tokens.push(tokens.to_vec());
            p.fix_timestamps.push(report.created_at);
            p.report_profile_tokens.extend(tokens.iter().cloned());
        }
    }

    for ci in history.past_commits() {
        let commit = history.commit(ci);
        let p = profiles
            .entry(commit.author.clone())
            .or_insert_with(|| DeveloperProfile::empty(commit.author.clone()));
        p.commit_count += 1;
        for f in &commit.files {
            p.touched_files.insert(f.clone());
        }
    }

    for p in profiles.values_mut() {
        for path in &p.touched_files {
            if let Some(tokens) = corpus.code_tokens_by_path(path) {
                p.code_profile_tokens.extend(tokens.iter().cloned());
            }
        }
    }

    // committers without fixes or authored commits still count as active
    for dev in history.candidates() {
        profiles
            .entry(dev.clone())
            .or_insert_with(|| DeveloperProfile::empty(dev));
    }
    profiles
}
