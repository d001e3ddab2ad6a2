//! Dataset model: bug reports, commits, code files, identity resolution,
//! commit linking, and ground-truth fixer sets.
//!
//! A corpus is loaded from four files (reports.jsonl, commits.jsonl,
//! code.jsonl, identities.json), normalized once, and immutable afterwards.
//! Reports are kept in chronological order (created_at, then id), commits in
//! (timestamp, then sha) order.

mod porter;
mod preprocess;

pub use porter::stem;
pub use preprocess::preprocess;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Canonical developer identifier.
pub type DevId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportStatus {
    Open,
    Closed,
}

/// One issue-tracker report, as stored in reports.jsonl.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BugReport {
    pub id: String,
    pub title: String,
    pub description: String,
    pub created_at: DateTime<Utc>,
    pub closed_at: Option<DateTime<Utc>>,
    pub labels: Vec<String>,
    pub assignees: Vec<DevId>,
    pub status: ReportStatus,
}

impl BugReport {
    /// Title and description joined, the text used for linking and queries.
    pub fn text(&self) -> String {
        format!("{} {}", self.title, self.description)
    }

    pub fn is_bug(&self) -> bool {
        self.labels.iter().any(|l| l.eq_ignore_ascii_case("bug"))
    }
}

/// One version-control commit, as stored in commits.jsonl.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commit {
    pub sha: String,
    pub author: DevId,
    pub committer: DevId,
    pub timestamp: DateTime<Utc>,
    pub message: String,
    pub files: Vec<String>,
}

/// One source file, as stored in code.jsonl.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeFile {
    pub path: String,
    pub content: String,
}

/// The set of developers credited with fixing a report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    devs: BTreeSet<DevId>,
}

impl GroundTruth {
    pub fn new(devs: BTreeSet<DevId>) -> Option<Self> {
        if devs.is_empty() {
            None
        } else {
            Some(Self { devs })
        }
    }

    pub fn contains(&self, dev: &str) -> bool {
        self.devs.contains(dev)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DevId> {
        self.devs.iter()
    }

    pub fn len(&self) -> usize {
        self.devs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devs.is_empty()
    }
}

impl fmt::Display for GroundTruth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<&str> = self.devs.iter().map(String::as_str).collect();
        write!(f, "{{{}}}", ids.join(","))
    }
}

/// Alias → canonical developer id mapping.
#[derive(Debug, Clone, Default)]
pub struct IdentityMap {
    map: BTreeMap<String, String>,
}

impl IdentityMap {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a map, rejecting non-idempotent chains (an alias may not point
    /// at another alias).
    pub fn from_map(map: BTreeMap<String, String>) -> Result<Self, CorpusError> {
        for canonical in map.values() {
            if let Some(next) = map.get(canonical) {
                if next != canonical {
                    return Err(CorpusError::IdentityChain {
                        canonical: canonical.clone(),
                        next: next.clone(),
                    });
                }
            }
        }
        Ok(Self { map })
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let raw = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: display_path(path),
            source,
        })?;
        let map: BTreeMap<String, String> =
            serde_json::from_str(&raw).map_err(|e| CorpusError::Line {
                path: display_path(path),
                line: e.line(),
                msg: e.to_string(),
            })?;
        Self::from_map(map)
    }

    pub fn canonical<'a>(&'a self, id: &'a str) -> &'a str {
        self.map.get(id).map(String::as_str).unwrap_or(id)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Line { path: String, line: usize, msg: String },
    #[error("{path}: duplicate report id {id:?}")]
    DuplicateReport { path: String, id: String },
    #[error("{path}: duplicate commit sha {sha:?}")]
    DuplicateCommit { path: String, sha: String },
    #[error("{path}: duplicate code path {file:?}")]
    DuplicateCodePath { path: String, file: String },
    #[error("identity map is not idempotent: {canonical:?} maps on to {next:?}")]
    IdentityChain { canonical: String, next: String },
    #[error("report {id:?} yields an empty ground-truth set")]
    EmptyGroundTruth { id: String },
}

fn display_path(path: &Path) -> String {
    path.display().to_string()
}

/// File locations for one dataset.
#[derive(Debug, Clone)]
pub struct DatasetPaths {
    pub reports: std::path::PathBuf,
    pub commits: std::path::PathBuf,
    pub code: std::path::PathBuf,
    pub identities: std::path::PathBuf,
}

impl DatasetPaths {
    /// Conventional file names under one directory.
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            reports: dir.join("reports.jsonl"),
            commits: dir.join("commits.jsonl"),
            code: dir.join("code.jsonl"),
            identities: dir.join("identities.json"),
        }
    }
}

/// Immutable, normalized dataset.
#[derive(Debug, Clone)]
pub struct Corpus {
    reports: Vec<BugReport>,
    commits: Vec<Commit>,
    code: Vec<CodeFile>,
    report_tokens: Vec<Vec<String>>,
    code_tokens: Vec<Vec<String>>,
    links: Vec<Vec<usize>>,
    ground_truth: Vec<Option<GroundTruth>>,
    experimental: Vec<bool>,
    report_idx: HashMap<String, usize>,
    code_idx: HashMap<String, usize>,
}

impl Corpus {
    /// Loads and normalizes a dataset from disk.
    pub fn load(paths: &DatasetPaths) -> Result<Self, CorpusError> {
        let reports: Vec<BugReport> = read_jsonl(&paths.reports)?;
        let commits: Vec<Commit> = read_jsonl(&paths.commits)?;
        let code: Vec<CodeFile> = read_jsonl(&paths.code)?;
        let identities = IdentityMap::load(&paths.identities)?;
        Self::from_parts(reports, commits, code, &identities).map_err(|e| match e {
            CorpusError::DuplicateReport { id, .. } => CorpusError::DuplicateReport {
                path: display_path(&paths.reports),
                id,
            },
            CorpusError::DuplicateCommit { sha, .. } => CorpusError::DuplicateCommit {
                path: display_path(&paths.commits),
                sha,
            },
            CorpusError::DuplicateCodePath { file, .. } => CorpusError::DuplicateCodePath {
                path: display_path(&paths.code),
                file,
            },
            other => other,
        })
    }

    /// Normalizes in-memory parts into a corpus: applies the identity map,
    /// sorts chronologically, links commits, and builds ground truth.
    pub fn from_parts(
        mut reports: Vec<BugReport>,
        mut commits: Vec<Commit>,
        code: Vec<CodeFile>,
        identities: &IdentityMap,
    ) -> Result<Self, CorpusError> {
        for r in &mut reports {
            for a in &mut r.assignees {
                *a = identities.canonical(a).to_string();
            }
            r.assignees.retain(|a| !a.is_empty());
        }
        for c in &mut commits {
            c.author = identities.canonical(&c.author).to_string();
            c.committer = identities.canonical(&c.committer).to_string();
        }

        reports.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        commits.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.sha.cmp(&b.sha)));

        let mut report_idx = HashMap::with_capacity(reports.len());
        for (i, r) in reports.iter().enumerate() {
            if report_idx.insert(r.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateReport {
                    path: String::new(),
                    id: r.id.clone(),
                });
            }
        }
        let mut seen_shas = HashSet::with_capacity(commits.len());
        for c in &commits {
            if !seen_shas.insert(c.sha.clone()) {
                return Err(CorpusError::DuplicateCommit {
                    path: String::new(),
                    sha: c.sha.clone(),
                });
            }
        }
        let mut code_idx = HashMap::with_capacity(code.len());
        for (i, f) in code.iter().enumerate() {
            if code_idx.insert(f.path.clone(), i).is_some() {
                return Err(CorpusError::DuplicateCodePath {
                    path: String::new(),
                    file: f.path.clone(),
                });
            }
        }

        let report_tokens: Vec<Vec<String>> =
            reports.iter().map(|r| preprocess(&r.text())).collect();
        let code_tokens: Vec<Vec<String>> =
            code.iter().map(|f| preprocess(&f.content)).collect();

        let links = link_commits(&reports, &commits);
        let mut ground_truth = Vec::with_capacity(reports.len());
        for (r, linked) in reports.iter().zip(&links) {
            if linked.is_empty() {
                ground_truth.push(None);
            } else {
                let linked_commits: Vec<&Commit> = linked.iter().map(|&ci| &commits[ci]).collect();
                // a linked report with no attributable developer is excluded,
                // same as a report with no links at all
                ground_truth.push(match build_ground_truth(r, &linked_commits, identities) {
                    Ok(gt) => Some(gt),
                    Err(CorpusError::EmptyGroundTruth { .. }) => None,
                    Err(e) => return Err(e),
                });
            }
        }

        let experimental = reports
            .iter()
            .zip(&ground_truth)
            .map(|(r, gt)| r.status == ReportStatus::Closed && r.is_bug() && gt.is_some())
            .collect();

        Ok(Self {
            reports,
            commits,
            code,
            report_tokens,
            code_tokens,
            links,
            ground_truth,
            experimental,
            report_idx,
            code_idx,
        })
    }

    pub fn reports(&self) -> &[BugReport] {
        &self.reports
    }

    pub fn commits(&self) -> &[Commit] {
        &self.commits
    }

    pub fn code_files(&self) -> &[CodeFile] {
        &self.code
    }

    pub fn report(&self, idx: usize) -> &BugReport {
        &self.reports[idx]
    }

    pub fn report_tokens(&self, idx: usize) -> &[String] {
        &self.report_tokens[idx]
    }

    pub fn code_tokens(&self, idx: usize) -> &[String] {
        &self.code_tokens[idx]
    }

    pub fn code_tokens_by_path(&self, path: &str) -> Option<&[String]> {
        self.code_idx.get(path).map(|&i| self.code_tokens[i].as_slice())
    }

    pub fn index_of(&self, report_id: &str) -> Option<usize> {
        self.report_idx.get(report_id).copied()
    }

    /// Indices of commits linked to the report, in commit order.
    pub fn linked_commits(&self, idx: usize) -> &[usize] {
        &self.links[idx]
    }

    pub fn ground_truth(&self, idx: usize) -> Option<&GroundTruth> {
        self.ground_truth[idx].as_ref()
    }

    /// Closed report with at least one linked commit: usable as history.
    pub fn is_resolved(&self, idx: usize) -> bool {
        self.reports[idx].status == ReportStatus::Closed && self.ground_truth[idx].is_some()
    }

    /// Resolved and labeled as a bug: usable as an experimental query.
    pub fn is_experimental(&self, idx: usize) -> bool {
        self.experimental[idx]
    }

    /// Chronologically ordered indices of experimental reports.
    pub fn experimental_indices(&self) -> Vec<usize> {
        (0..self.reports.len()).filter(|&i| self.experimental[i]).collect()
    }

    /// Every developer id appearing anywhere in the dataset.
    pub fn developers(&self) -> BTreeSet<DevId> {
        let mut devs = BTreeSet::new();
        for r in &self.reports {
            devs.extend(r.assignees.iter().cloned());
        }
        for c in &self.commits {
            devs.insert(c.author.clone());
            devs.insert(c.committer.clone());
        }
        devs
    }

    pub fn summary(&self) -> DatasetSummary {
        let experimental = self.experimental.iter().filter(|&&e| e).count();
        let gt_sizes: Vec<usize> = (0..self.reports.len())
            .filter(|&i| self.experimental[i])
            .filter_map(|i| self.ground_truth[i].as_ref().map(GroundTruth::len))
            .collect();
        let mean_gt = if gt_sizes.is_empty() {
            0.0
        } else {
            gt_sizes.iter().sum::<usize>() as f64 / gt_sizes.len() as f64
        };
        DatasetSummary {
            reports: self.reports.len(),
            experimental_reports: experimental,
            commits: self.commits.len(),
            code_files: self.code.len(),
            developers: self.developers().len(),
            mean_ground_truth_size: mean_gt,
        }
    }
}

/// Counts reported by the ingest command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub reports: usize,
    pub experimental_reports: usize,
    pub commits: usize,
    pub code_files: usize,
    pub developers: usize,
    pub mean_ground_truth_size: f64,
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let raw = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: display_path(path),
        source,
    })?;
    let mut rows = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = serde_json::from_str(line).map_err(|e| CorpusError::Line {
            path: display_path(path),
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

/// Associates commits with the reports they fix.
///
/// A commit links to a report when its message names the report id after a
/// fix/close/resolve keyword, or when the report text cites a ≥7 character
/// hex prefix of the commit sha. Returns, per report (in report order), the
/// indices of linked commits.
pub fn link_commits(reports: &[BugReport], commits: &[Commit]) -> Vec<Vec<usize>> {
    let keyword =
        Regex::new(r"(?i)(?:fix(?:es|ed)?|close(?:s|d)?|resolve(?:s|d)?)\s*:?\s*#(\w+)")
            .expect("static pattern");
    let hex_token = Regex::new(r"\b[0-9a-f]{7,40}\b").expect("static pattern");

    let word_ids: HashMap<&str, usize> = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| r.id.chars().all(|c| c.is_alphanumeric() || c == '_'))
        .map(|(i, r)| (r.id.as_str(), i))
        .collect();
    let odd_ids: Vec<(Regex, usize)> = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.id.chars().all(|c| c.is_alphanumeric() || c == '_'))
        .map(|(i, r)| {
            let pat = format!(
                r"(?i)(?:fix(?:es|ed)?|close(?:s|d)?|resolve(?:s|d)?)\s*:?\s*#{}\b",
                regex::escape(&r.id)
            );
            (Regex::new(&pat).expect("escaped pattern"), i)
        })
        .collect();

    let mut links: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); reports.len()];
    for (ci, commit) in commits.iter().enumerate() {
        for cap in keyword.captures_iter(&commit.message) {
            if let Some(&ri) = word_ids.get(&cap[1]) {
                links[ri].insert(ci);
            }
        }
        for (pat, ri) in &odd_ids {
            if pat.is_match(&commit.message) {
                links[*ri].insert(ci);
            }
        }
    }

    for (ri, report) in reports.iter().enumerate() {
        let text = report.text().to_lowercase();
        for tok in hex_token.find_iter(&text) {
            for (ci, commit) in commits.iter().enumerate() {
                if commit.sha.to_lowercase().starts_with(tok.as_str()) {
                    links[ri].insert(ci);
                }
            }
        }
    }

    links.into_iter().map(|s| s.into_iter().collect()).collect()
}

/// Union of tracker assignees and commit authors/committers, canonicalized.
pub fn build_ground_truth(
    report: &BugReport,
    linked_commits: &[&Commit],
    identities: &IdentityMap,
) -> Result<GroundTruth, CorpusError> {
    let mut devs = BTreeSet::new();
    for a in &report.assignees {
        if !a.is_empty() {
            devs.insert(identities.canonical(a).to_string());
        }
    }
    for c in linked_commits {
        if !c.author.is_empty() {
            devs.insert(identities.canonical(&c.author).to_string());
        }
        if !c.committer.is_empty() {
            devs.insert(identities.canonical(&c.committer).to_string());
        }
    }
    GroundTruth::new(devs).ok_or_else(|| CorpusError::EmptyGroundTruth {
        id: report.id.clone(),
    })
}
