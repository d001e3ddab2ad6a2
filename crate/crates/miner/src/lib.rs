//! Harvests bug reports and commits from a GitHub-style REST API into the
//! dataset layout the rest of the toolkit consumes.
//!
//! Two modes: live HTTPS against the real tracker, or replay of a recorded
//! fixture directory so experiments never depend on the network. The auth
//! token is read exclusively from the `TRIAGE_LAB_TOKEN` environment
//! variable; there is deliberately no flag or config-file path for it.

pub mod transport;

use std::env;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Deserialize;
use thiserror::Error;

use triage_lab_core::corpus::{BugReport, Commit, ReportStatus};
use transport::{
    FixtureTransport, HttpTransport, Response, Transport, TransportError,
};

/// The only place a credential may come from.
pub const TOKEN_ENV_VAR: &str = "TRIAGE_LAB_TOKEN";
/// Tracker API host used in live mode.
pub const DEFAULT_API_BASE: &str = "https://api.github.com";

/// Total attempts per request, including the first.
const MAX_TRIES: u32 = 5;

#[derive(Debug, Error)]
pub enum MinerError {
    #[error("invalid miner config: {0}")]
    InvalidConfig(String),
    #[error("authentication rejected (401); check {TOKEN_ENV_VAR}")]
    AuthFailed,
    #[error("gave up after {tries} tries (last status: {last_status:?})")]
    RetriesExhausted { tries: u32, last_status: Option<u16> },
    #[error("unexpected status {status} for {path}")]
    UnexpectedStatus { status: u16, path: String },
    #[error("fixture problem: {0}")]
    Fixture(String),
    #[error("cannot parse response for {path}: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Bearer token. Debug output is redacted so the value cannot leak into
/// logs; construction is only possible from the environment.
#[derive(Clone)]
pub struct SecretToken(String);

impl SecretToken {
    pub fn from_env() -> Option<Self> {
        env::var(TOKEN_ENV_VAR).ok().filter(|t| !t.is_empty()).map(SecretToken)
    }

    fn bearer(&self) -> String {
        format!("Bearer {}", self.0)
    }
}

impl fmt::Debug for SecretToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretToken(***)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinerMode {
    Live,
    Fixture,
}

#[derive(Debug, Clone)]
pub struct MinerConfig {
    /// `owner/name` repository slug.
    pub slug: String,
    /// Only fetch records updated at or after this instant.
    pub since: Option<DateTime<Utc>>,
    /// Records per page; the API caps this at 100.
    pub page_size: usize,
    /// Where `export_dataset` writes by default.
    pub out_dir: PathBuf,
    pub mode: MinerMode,
    /// Recorded responses for fixture mode.
    pub fixture_dir: Option<PathBuf>,
    token: Option<SecretToken>,
}

impl MinerConfig {
    pub fn live(slug: impl Into<String>) -> Self {
        MinerConfig {
            slug: slug.into(),
            since: None,
            page_size: 100,
            out_dir: PathBuf::from("data/mined"),
            mode: MinerMode::Live,
            fixture_dir: None,
            token: SecretToken::from_env(),
        }
    }

    pub fn fixture(slug: impl Into<String>, dir: impl Into<PathBuf>) -> Self {
        MinerConfig {
            slug: slug.into(),
            since: None,
            page_size: 100,
            out_dir: PathBuf::from("data/mined"),
            mode: MinerMode::Fixture,
            fixture_dir: Some(dir.into()),
            token: SecretToken::from_env(),
        }
    }

    pub fn validate(&self) -> Result<(), MinerError> {
        let mut parts = self.slug.split('/');
        let valid_slug = matches!(
            (parts.next(), parts.next(), parts.next()),
            (Some(owner), Some(name), None) if !owner.is_empty() && !name.is_empty()
        );
        if !valid_slug {
            return Err(MinerError::InvalidConfig(format!(
                "slug must be owner/name, got {:?}",
                self.slug
            )));
        }
        if self.page_size == 0 || self.page_size > 100 {
            return Err(MinerError::InvalidConfig(format!(
                "page size must be 1..=100, got {}",
                self.page_size
            )));
        }
        if self.mode == MinerMode::Fixture && self.fixture_dir.is_none() {
            return Err(MinerError::InvalidConfig(
                "fixture mode needs a fixture directory".to_string(),
            ));
        }
        Ok(())
    }
}

/// Injectable wall-clock wait, so tests can observe backoff without waiting.
pub trait Sleeper: Send + Sync {
    fn sleep(&self, duration: Duration);
}

pub struct RealSleeper;

impl Sleeper for RealSleeper {
    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Injectable current time, for rate-limit reset arithmetic.
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

pub struct RealClock;

impl Clock for RealClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

pub struct Miner<T: Transport> {
    config: MinerConfig,
    transport: T,
    sleeper: Box<dyn Sleeper>,
    clock: Box<dyn Clock>,
}

/// Builds a miner whose transport matches the configured mode.
pub fn open_miner(config: MinerConfig) -> Result<Miner<Box<dyn Transport>>, MinerError> {
    config.validate()?;
    let transport: Box<dyn Transport> = match config.mode {
        MinerMode::Fixture => {
            let dir = config.fixture_dir.clone().expect("validated above");
            Box::new(
                FixtureTransport::open(&dir).map_err(|err| MinerError::Fixture(err.to_string()))?,
            )
        }
        MinerMode::Live => Box::new(HttpTransport::new(DEFAULT_API_BASE)),
    };
    Miner::with_transport(config, transport)
}

impl<T: Transport> Miner<T> {
    pub fn with_transport(config: MinerConfig, transport: T) -> Result<Self, MinerError> {
        config.validate()?;
        Ok(Miner {
            config,
            transport,
            sleeper: Box::new(RealSleeper),
            clock: Box::new(RealClock),
        })
    }

    pub fn with_timing(
        mut self,
        sleeper: impl Sleeper + 'static,
        clock: impl Clock + 'static,
    ) -> Self {
        self.sleeper = Box::new(sleeper);
        self.clock = Box::new(clock);
        self
    }

    pub fn config(&self) -> &MinerConfig {
        &self.config
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    /// All issues for the repository, pull requests filtered out, in the
    /// order the API returned them.
    pub fn fetch_issues(&self) -> Result<Vec<BugReport>, MinerError> {
        let mut reports = Vec::new();
        let mut page = 1;
        loop {
            let path = self.issues_path(page);
            let response = self.request(&path)?;
            let raw: Vec<RawIssue> = parse_body(&path, &response.body)?;
            let fetched = raw.len();
            for issue in raw {
                // The issues endpoint interleaves pull requests; real bug
                // reports never carry the pull_request key.
                if issue.pull_request.is_some() {
                    continue;
                }
                reports.push(issue.into_report());
            }
            if fetched == 0 || !response.has_next_page() {
                break;
            }
            page += 1;
        }
        Ok(reports)
    }

    /// All commits, with per-commit file lists. The list endpoint does not
    /// include touched files, so each sha costs one extra detail request.
    pub fn fetch_commits(&self) -> Result<Vec<Commit>, MinerError> {
        let mut shas = Vec::new();
        let mut page = 1;
        loop {
            let path = self.commits_path(page);
            let response = self.request(&path)?;
            let raw: Vec<RawCommitSummary> = parse_body(&path, &response.body)?;
            let fetched = raw.len();
            shas.extend(raw.into_iter().map(|c| c.sha));
            if fetched == 0 || !response.has_next_page() {
                break;
            }
            page += 1;
        }
        let mut commits = Vec::with_capacity(shas.len());
        for sha in shas {
            let path = format!("/repos/{}/commits/{sha}", self.config.slug);
            let response = self.request(&path)?;
            let detail: RawCommitDetail = parse_body(&path, &response.body)?;
            commits.push(detail.into_commit());
        }
        Ok(commits)
    }

    fn issues_path(&self, page: usize) -> String {
        let mut path = format!(
            "/repos/{}/issues?state=all&per_page={}",
            self.config.slug, self.config.page_size
        );
        if let Some(since) = self.config.since {
            path.push_str(&format!(
                "&since={}",
                since.to_rfc3339_opts(SecondsFormat::Secs, true)
            ));
        }
        path.push_str(&format!("&page={page}"));
        path
    }

    fn commits_path(&self, page: usize) -> String {
        let mut path = format!(
            "/repos/{}/commits?per_page={}",
            self.config.slug, self.config.page_size
        );
        if let Some(since) = self.config.since {
            path.push_str(&format!(
                "&since={}",
                since.to_rfc3339_opts(SecondsFormat::Secs, true)
            ));
        }
        path.push_str(&format!("&page={page}"));
        path
    }

    fn auth_headers(&self) -> Vec<(String, String)> {
        match &self.config.token {
            Some(token) => vec![("Authorization".to_string(), token.bearer())],
            None => Vec::new(),
        }
    }

    /// Issues one request with the retry policy: up to five tries total;
    /// transient failures and 5xx back off 1, 2, 4, 8 seconds; a rate-limit
    /// response sleeps until the advertised reset instead. 401 and other
    /// 4xx are terminal immediately.
    fn request(&self, path_query: &str) -> Result<Response, MinerError> {
        let headers = self.auth_headers();
        let mut last_status = None;
        for attempt in 1..=MAX_TRIES {
            match self.transport.get(path_query, &headers) {
                Ok(response) if response.status == 200 => return Ok(response),
                Ok(response) if response.status == 401 => return Err(MinerError::AuthFailed),
                Ok(response) if rate_limited(&response) => {
                    last_status = Some(response.status);
                    if attempt < MAX_TRIES {
                        self.sleeper.sleep(self.rate_limit_wait(&response, attempt));
                    }
                }
                Ok(response) if response.status >= 500 => {
                    last_status = Some(response.status);
                    if attempt < MAX_TRIES {
                        self.sleeper.sleep(backoff(attempt));
                    }
                }
                Ok(response) => {
                    return Err(MinerError::UnexpectedStatus {
                        status: response.status,
                        path: path_query.to_string(),
                    })
                }
                Err(TransportError::Transient(_)) => {
                    last_status = None;
                    if attempt < MAX_TRIES {
                        self.sleeper.sleep(backoff(attempt));
                    }
                }
                Err(TransportError::Fatal(message)) => return Err(MinerError::Fixture(message)),
            }
        }
        Err(MinerError::RetriesExhausted { tries: MAX_TRIES, last_status })
    }

    fn rate_limit_wait(&self, response: &Response, attempt: u32) -> Duration {
        let reset = response
            .header("x-ratelimit-reset")
            .and_then(|value| value.parse::<i64>().ok());
        match reset {
            Some(epoch) => {
                let wait = epoch - self.clock.now().timestamp();
                Duration::from_secs(wait.max(0) as u64)
            }
            None => backoff(attempt),
        }
    }
}

fn backoff(attempt: u32) -> Duration {
    Duration::from_secs(1 << (attempt - 1))
}

fn rate_limited(response: &Response) -> bool {
    response.status == 429
        || (response.status == 403
            && response.header("x-ratelimit-remaining") == Some("0"))
}

fn parse_body<'a, R: Deserialize<'a>>(path: &str, body: &'a str) -> Result<R, MinerError> {
    serde_json::from_str(body).map_err(|source| MinerError::Parse {
        path: path.to_string(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportedPaths {
    pub reports: PathBuf,
    pub commits: PathBuf,
    pub code: PathBuf,
    pub identities: PathBuf,
}

/// Writes a loadable dataset directory: `reports.jsonl` and `commits.jsonl`
/// carry the mined records one per line in input order, while `code.jsonl`
/// and `identities.json` are written empty (the tracker API serves neither a
/// source snapshot nor an alias map). Same records in, same bytes out.
pub fn export_dataset(
    reports: &[BugReport],
    commits: &[Commit],
    dir: &Path,
) -> Result<ExportedPaths, MinerError> {
    fs::create_dir_all(dir)?;
    let paths = ExportedPaths {
        reports: dir.join("reports.jsonl"),
        commits: dir.join("commits.jsonl"),
        code: dir.join("code.jsonl"),
        identities: dir.join("identities.json"),
    };
    fs::write(&paths.reports, jsonl(reports))?;
    fs::write(&paths.commits, jsonl(commits))?;
    fs::write(&paths.code, "")?;
    fs::write(&paths.identities, "{}\n")?;
    Ok(paths)
}

fn jsonl<R: serde::Serialize>(records: &[R]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("dataset records serialize"));
        out.push('\n');
    }
    out
}

#[derive(Deserialize)]
struct RawIssue {
    number: u64,
    title: String,
    #[serde(default)]
    body: Option<String>,
    state: String,
    created_at: DateTime<Utc>,
    #[serde(default)]
    closed_at: Option<DateTime<Utc>>,
    #[serde(default)]
    labels: Vec<RawLabel>,
    #[serde(default)]
    assignees: Vec<RawUser>,
    #[serde(default)]
    pull_request: Option<serde_json::Value>,
}

#[derive(Deserialize)]
struct RawLabel {
    name: String,
}

#[derive(Deserialize)]
struct RawUser {
    login: String,
}

impl RawIssue {
    fn into_report(self) -> BugReport {
        BugReport {
            id: self.number.to_string(),
            title: self.title,
            description: self.body.unwrap_or_default(),
            created_at: self.created_at,
            closed_at: self.closed_at,
            labels: self.labels.into_iter().map(|label| label.name).collect(),
            assignees: self.assignees.into_iter().map(|user| user.login).collect(),
            status: if self.state == "open" {
                ReportStatus::Open
            } else {
                ReportStatus::Closed
            },
        }
    }
}

#[derive(Deserialize)]
struct RawCommitSummary {
    sha: String,
}

#[derive(Deserialize)]
struct RawCommitDetail {
    sha: String,
    commit: RawGitMeta,
    #[serde(default)]
    author: Option<RawUser>,
    #[serde(default)]
    committer: Option<RawUser>,
    #[serde(default)]
    files: Vec<RawFile>,
}

#[derive(Deserialize)]
struct RawGitMeta {
    author: RawGitIdentity,
    committer: RawGitIdentity,
    message: String,
}

#[derive(Deserialize)]
struct RawGitIdentity {
    name: String,
    email: String,
    date: DateTime<Utc>,
}

#[derive(Deserialize)]
struct RawFile {
    filename: String,
}

impl RawCommitDetail {
    /// Account login when the tracker matched one, otherwise the recorded
    /// git identity as `name <email>`.
    fn identity(user: Option<RawUser>, identity: &RawGitIdentity) -> String {
        match user {
            Some(user) => user.login,
            None => format!("{} <{}>", identity.name, identity.email),
        }
    }

    fn into_commit(self) -> Commit {
        Commit {
            author: Self::identity(self.author, &self.commit.author),
            committer: Self::identity(self.committer, &self.commit.committer),
            timestamp: self.commit.committer.date,
            sha: self.sha,
            message: self.commit.message,
            files: self.files.into_iter().map(|file| file.filename).collect(),
        }
    }
}
