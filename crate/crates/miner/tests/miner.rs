use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, TimeZone, Utc};
use serde_json::json;
use tempfile::TempDir;

use triage_lab_core::corpus::{Corpus, DatasetPaths};
use triage_lab_miner::transport::{CountingTransport, FixtureTransport, FixtureWriter};
use triage_lab_miner::{
    export_dataset, open_miner, Clock, Miner, MinerConfig, MinerError, Sleeper, TOKEN_ENV_VAR,
};

const SLUG: &str = "octo/widgets";

fn issues_endpoint(page_size: usize) -> String {
    format!("/repos/{SLUG}/issues?state=all&per_page={page_size}")
}

fn commits_endpoint(page_size: usize) -> String {
    format!("/repos/{SLUG}/commits?per_page={page_size}")
}

fn issue(n: u64, state: &str) -> serde_json::Value {
    let closed_at = if state == "closed" {
        json!("2014-05-04T10:00:00Z")
    } else {
        json!(null)
    };
    json!({
        "number": n,
        "title": format!("widget {n} breaks"),
        "body": format!("steps to reproduce {n}"),
        "state": state,
        "created_at": "2014-05-03T10:00:00Z",
        "closed_at": closed_at,
        "labels": [{"name": "bug"}],
        "assignees": [{"login": "alice"}],
    })
}

fn issue_page(numbers: std::ops::Range<u64>) -> String {
    let items: Vec<_> = numbers.map(|n| issue(n, "closed")).collect();
    serde_json::to_string(&items).unwrap()
}

fn next_link(page: usize) -> String {
    format!("<https://api.example/repos/{SLUG}/issues?page={page}>; rel=\"next\"")
}

#[derive(Clone, Default)]
struct RecordingSleeper(Arc<Mutex<Vec<Duration>>>);

impl RecordingSleeper {
    fn naps(&self) -> Vec<Duration> {
        self.0.lock().unwrap().clone()
    }
}

impl Sleeper for RecordingSleeper {
    fn sleep(&self, duration: Duration) {
        self.0.lock().unwrap().push(duration);
    }
}

struct FakeClock(DateTime<Utc>);

impl Clock for FakeClock {
    fn now(&self) -> DateTime<Utc> {
        self.0
    }
}

fn fixture_miner(dir: &TempDir) -> Miner<CountingTransport<FixtureTransport>> {
    let transport =
        CountingTransport::new(FixtureTransport::open(dir.path()).expect("fixture opens"));
    Miner::with_transport(MinerConfig::fixture(SLUG, dir.path()), transport).expect("valid config")
}

#[test]
fn empty_issue_fixture_yields_no_reports() {
    let dir = TempDir::new().unwrap();
    let mut writer = FixtureWriter::new(dir.path());
    writer.push(&issues_endpoint(100), 1, 200, &[], "[]").unwrap();
    writer.finish().unwrap();

    let miner = open_miner(MinerConfig::fixture(SLUG, dir.path())).unwrap();
    assert_eq!(miner.fetch_issues().unwrap(), Vec::new());
}

#[test]
fn empty_commit_fixture_yields_no_commits() {
    let dir = TempDir::new().unwrap();
    let mut writer = FixtureWriter::new(dir.path());
    writer.push(&commits_endpoint(100), 1, 200, &[], "[]").unwrap();
    writer.finish().unwrap();

    let miner = fixture_miner(&dir);
    assert_eq!(miner.fetch_commits().unwrap(), Vec::new());
}

#[test]
fn pagination_walks_the_link_header_and_records_every_request() {
    let dir = TempDir::new().unwrap();
    let endpoint = issues_endpoint(100);
    let mut writer = FixtureWriter::new(dir.path());
    writer
        .push(&endpoint, 1, 200, &[("Link", &next_link(2))], &issue_page(1..101))
        .unwrap();
    writer
        .push(&endpoint, 2, 200, &[("Link", &next_link(3))], &issue_page(101..201))
        .unwrap();
    writer.push(&endpoint, 3, 200, &[], &issue_page(201..202)).unwrap();
    writer.finish().unwrap();

    let miner = fixture_miner(&dir);
    let reports = miner.fetch_issues().unwrap();

    assert_eq!(reports.len(), 201);
    assert_eq!(reports[0].id, "1");
    assert_eq!(reports[200].id, "201");
    assert_eq!(miner.transport().calls(), 3);
    assert_eq!(
        miner.transport().requests(),
        vec![
            format!("{endpoint}&page=1"),
            format!("{endpoint}&page=2"),
            format!("{endpoint}&page=3"),
        ]
    );
}

#[test]
fn pull_requests_are_filtered_out_of_issue_results() {
    let dir = TempDir::new().unwrap();
    let mut pr = issue(2, "open");
    pr["pull_request"] = json!({"url": "https://api.example/pulls/2"});
    let body = serde_json::to_string(&[issue(1, "closed"), pr, issue(3, "open")]).unwrap();
    let mut writer = FixtureWriter::new(dir.path());
    writer.push(&issues_endpoint(100), 1, 200, &[], &body).unwrap();
    writer.finish().unwrap();

    let reports = fixture_miner(&dir).fetch_issues().unwrap();
    let ids: Vec<_> = reports.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, ["1", "3"]);
    assert_eq!(reports[0].title, "widget 1 breaks");
    assert_eq!(reports[0].labels, ["bug"]);
    assert_eq!(reports[0].assignees, ["alice"]);
    assert!(reports[0].closed_at.is_some());
    assert!(reports[1].closed_at.is_none());
}

#[test]
fn rate_limited_requests_wait_until_the_advertised_reset() {
    let dir = TempDir::new().unwrap();
    let endpoint = issues_endpoint(100);
    let reset = 1_400_000_037i64;
    let mut writer = FixtureWriter::new(dir.path());
    writer
        .push(
            &endpoint,
            1,
            403,
            &[("X-RateLimit-Remaining", "0"), ("X-RateLimit-Reset", &reset.to_string())],
            "rate limited",
        )
        .unwrap();
    writer.push(&endpoint, 1, 200, &[], &issue_page(1..3)).unwrap();
    writer.finish().unwrap();

    let sleeper = RecordingSleeper::default();
    let naps = sleeper.clone();
    let now = Utc.timestamp_opt(1_400_000_000, 0).unwrap();
    let miner = fixture_miner(&dir).with_timing(sleeper, FakeClock(now));

    let reports = miner.fetch_issues().unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(naps.naps(), vec![Duration::from_secs(37)]);
}

#[test]
fn server_errors_back_off_exponentially_before_succeeding() {
    let dir = TempDir::new().unwrap();
    let endpoint = issues_endpoint(100);
    let mut writer = FixtureWriter::new(dir.path());
    for _ in 0..3 {
        writer.push(&endpoint, 1, 500, &[], "boom").unwrap();
    }
    writer.push(&endpoint, 1, 200, &[], &issue_page(1..2)).unwrap();
    writer.finish().unwrap();

    let sleeper = RecordingSleeper::default();
    let naps = sleeper.clone();
    let miner =
        fixture_miner(&dir).with_timing(sleeper, FakeClock(Utc.timestamp_opt(0, 0).unwrap()));

    let reports = miner.fetch_issues().unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(
        naps.naps(),
        vec![Duration::from_secs(1), Duration::from_secs(2), Duration::from_secs(4)]
    );
}

#[test]
fn persistent_server_errors_exhaust_the_retry_budget() {
    let dir = TempDir::new().unwrap();
    let endpoint = issues_endpoint(100);
    let mut writer = FixtureWriter::new(dir.path());
    for _ in 0..5 {
        writer.push(&endpoint, 1, 502, &[], "bad gateway").unwrap();
    }
    writer.finish().unwrap();

    let sleeper = RecordingSleeper::default();
    let naps = sleeper.clone();
    let miner =
        fixture_miner(&dir).with_timing(sleeper, FakeClock(Utc.timestamp_opt(0, 0).unwrap()));

    match miner.fetch_issues() {
        Err(MinerError::RetriesExhausted { tries: 5, last_status: Some(502) }) => {}
        other => panic!("expected exhausted retries, got {other:?}"),
    }
    assert_eq!(
        naps.naps(),
        vec![
            Duration::from_secs(1),
            Duration::from_secs(2),
            Duration::from_secs(4),
            Duration::from_secs(8),
        ]
    );
    assert_eq!(miner.transport().calls(), 5);
}

#[test]
fn authentication_failures_are_terminal() {
    let dir = TempDir::new().unwrap();
    let mut writer = FixtureWriter::new(dir.path());
    writer.push(&issues_endpoint(100), 1, 401, &[], "bad credentials").unwrap();
    writer.finish().unwrap();

    let miner = fixture_miner(&dir);
    assert!(matches!(miner.fetch_issues(), Err(MinerError::AuthFailed)));
    assert_eq!(miner.transport().calls(), 1);
}

#[test]
fn unexpected_client_statuses_are_terminal() {
    let dir = TempDir::new().unwrap();
    let mut writer = FixtureWriter::new(dir.path());
    writer.push(&issues_endpoint(100), 1, 404, &[], "missing").unwrap();
    writer.finish().unwrap();

    let miner = fixture_miner(&dir);
    match miner.fetch_issues() {
        Err(MinerError::UnexpectedStatus { status: 404, .. }) => {}
        other => panic!("expected unexpected-status error, got {other:?}"),
    }
}

#[test]
fn auth_token_comes_only_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let endpoint = issues_endpoint(100);
    let mut writer = FixtureWriter::new(dir.path());
    writer.push(&endpoint, 1, 200, &[], "[]").unwrap();
    writer.push(&endpoint, 1, 200, &[], "[]").unwrap();
    writer.finish().unwrap();

    std::env::remove_var(TOKEN_ENV_VAR);
    let anonymous = fixture_miner(&dir);
    anonymous.fetch_issues().unwrap();
    assert_eq!(anonymous.transport().authorized(), vec![false]);

    std::env::set_var(TOKEN_ENV_VAR, "hunter2");
    let authed = fixture_miner(&dir);
    std::env::remove_var(TOKEN_ENV_VAR);
    authed.fetch_issues().unwrap();
    assert_eq!(authed.transport().authorized(), vec![true]);
    let debug = format!("{:?}", authed.config());
    assert!(!debug.contains("hunter2"), "token leaked into debug output: {debug}");
}

#[test]
fn commit_details_fetch_files_and_fall_back_to_recorded_identities() {
    let dir = TempDir::new().unwrap();
    let list = json!([{"sha": "aaa111"}, {"sha": "bbb222"}]);
    let with_account = json!({
        "sha": "aaa111",
        "commit": {
            "author": {"name": "Alice", "email": "alice@example.com", "date": "2014-05-05T09:00:00Z"},
            "committer": {"name": "Bob", "email": "bob@example.com", "date": "2014-05-05T10:00:00Z"},
            "message": "fix widget\n\nfixes #1",
        },
        "author": {"login": "alice"},
        "committer": {"login": "bob"},
        "files": [{"filename": "src/widget.rs"}, {"filename": "src/lib.rs"}],
    });
    let without_account = json!({
        "sha": "bbb222",
        "commit": {
            "author": {"name": "Jane Doe", "email": "jane@example.com", "date": "2014-05-06T09:00:00Z"},
            "committer": {"name": "Jane Doe", "email": "jane@example.com", "date": "2014-05-06T09:30:00Z"},
            "message": "tidy docs",
        },
        "author": null,
        "committer": null,
        "files": [{"filename": "README.md"}],
    });
    let mut writer = FixtureWriter::new(dir.path());
    writer.push(&commits_endpoint(100), 1, 200, &[], &list.to_string()).unwrap();
    writer
        .push(&format!("/repos/{SLUG}/commits/aaa111"), 1, 200, &[], &with_account.to_string())
        .unwrap();
    writer
        .push(&format!("/repos/{SLUG}/commits/bbb222"), 1, 200, &[], &without_account.to_string())
        .unwrap();
    writer.finish().unwrap();

    let miner = fixture_miner(&dir);
    let commits = miner.fetch_commits().unwrap();

    assert_eq!(commits.len(), 2);
    assert_eq!(miner.transport().calls(), 3);

    assert_eq!(commits[0].sha, "aaa111");
    assert_eq!(commits[0].author, "alice");
    assert_eq!(commits[0].committer, "bob");
    assert_eq!(commits[0].timestamp, Utc.with_ymd_and_hms(2014, 5, 5, 10, 0, 0).unwrap());
    assert_eq!(commits[0].files, ["src/widget.rs", "src/lib.rs"]);

    assert_eq!(commits[1].author, "Jane Doe <jane@example.com>");
    assert_eq!(commits[1].committer, "Jane Doe <jane@example.com>");
    assert_eq!(commits[1].files, ["README.md"]);
}

#[test]
fn exported_datasets_round_trip_and_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let issues_body = serde_json::to_string(&[issue(1, "closed"), issue(2, "open")]).unwrap();
    let list = json!([{"sha": "aaa111"}]);
    let detail = json!({
        "sha": "aaa111",
        "commit": {
            "author": {"name": "Alice", "email": "alice@example.com", "date": "2014-05-05T09:00:00Z"},
            "committer": {"name": "Alice", "email": "alice@example.com", "date": "2014-05-05T09:00:00Z"},
            "message": "fix widget\n\nfixes #1",
        },
        "author": {"login": "alice"},
        "committer": {"login": "alice"},
        "files": [{"filename": "src/widget.rs"}],
    });
    let mut writer = FixtureWriter::new(dir.path());
    writer.push(&issues_endpoint(100), 1, 200, &[], &issues_body).unwrap();
    writer.push(&commits_endpoint(100), 1, 200, &[], &list.to_string()).unwrap();
    writer
        .push(&format!("/repos/{SLUG}/commits/aaa111"), 1, 200, &[], &detail.to_string())
        .unwrap();
    writer.finish().unwrap();

    let miner = fixture_miner(&dir);
    let reports = miner.fetch_issues().unwrap();
    let commits = miner.fetch_commits().unwrap();

    let out = TempDir::new().unwrap();
    let first = export_dataset(&reports, &commits, out.path()).unwrap();
    let reports_bytes = std::fs::read(&first.reports).unwrap();
    let commits_bytes = std::fs::read(&first.commits).unwrap();
    assert_eq!(reports_bytes.iter().filter(|&&b| b == b'\n').count(), 2);

    let second = export_dataset(&reports, &commits, out.path()).unwrap();
    assert_eq!(std::fs::read(&second.reports).unwrap(), reports_bytes);
    assert_eq!(std::fs::read(&second.commits).unwrap(), commits_bytes);

    // The export alone must be loadable: empty code and identity files included.
    assert_eq!(std::fs::read(&second.code).unwrap(), b"");
    assert_eq!(std::fs::read_to_string(&second.identities).unwrap().trim(), "{}");
    let corpus = Corpus::load(&DatasetPaths::in_dir(out.path())).unwrap();
    assert_eq!(corpus.reports(), reports.as_slice());
    assert_eq!(corpus.commits(), commits.as_slice());
}

#[test]
fn since_lands_in_the_query_string_before_the_page_parameter() {
    let dir = TempDir::new().unwrap();
    let since = Utc.with_ymd_and_hms(2014, 5, 1, 0, 0, 0).unwrap();
    let endpoint = format!("/repos/{SLUG}/issues?state=all&per_page=50&since=2014-05-01T00:00:00Z");
    let mut writer = FixtureWriter::new(dir.path());
    writer.push(&endpoint, 1, 200, &[], &issue_page(1..2)).unwrap();
    writer.finish().unwrap();

    let mut config = MinerConfig::fixture(SLUG, dir.path());
    config.since = Some(since);
    config.page_size = 50;
    let transport =
        CountingTransport::new(FixtureTransport::open(dir.path()).expect("fixture opens"));
    let miner = Miner::with_transport(config, transport).unwrap();

    assert_eq!(miner.fetch_issues().unwrap().len(), 1);
    assert_eq!(miner.transport().requests(), vec![format!("{endpoint}&page=1")]);
}

#[test]
fn config_validation_rejects_bad_inputs() {
    let no_slash = MinerConfig::fixture("octowidgets", "fx");
    assert!(matches!(no_slash.validate(), Err(MinerError::InvalidConfig(_))));

    let mut zero_page = MinerConfig::fixture(SLUG, "fx");
    zero_page.page_size = 0;
    assert!(matches!(zero_page.validate(), Err(MinerError::InvalidConfig(_))));

    let mut oversized = MinerConfig::fixture(SLUG, "fx");
    oversized.page_size = 101;
    assert!(matches!(oversized.validate(), Err(MinerError::InvalidConfig(_))));

    let mut missing_dir = MinerConfig::fixture(SLUG, "fx");
    missing_dir.fixture_dir = None;
    assert!(matches!(missing_dir.validate(), Err(MinerError::InvalidConfig(_))));

    assert!(MinerConfig::fixture(SLUG, "fx").validate().is_ok());
}
