//! Deterministic synthetic datasets.
//!
//! `mini_parts` generates the small project bundled under `data/mini/`;
//! the other fixtures construct corner-case corpora used by the experiment
//! tests: verbatim query duplication and a dataset whose best approach is
//! decided by a clean threshold on one meta-feature.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{BugReport, CodeFile, Commit, Corpus, IdentityMap, ReportStatus};

pub struct DatasetParts {
    pub reports: Vec<BugReport>,
    pub commits: Vec<Commit>,
    pub code: Vec<CodeFile>,
    pub identities: BTreeMap<String, String>,
}

impl DatasetParts {
    pub fn into_corpus(self) -> Corpus {
        let identities = IdentityMap::from_map(self.identities).expect("flat alias map");
        Corpus::from_parts(self.reports, self.commits, self.code, &identities)
            .expect("synthetic parts are well formed")
    }

    pub fn reports_jsonl(&self) -> String {
        jsonl(&self.reports)
    }

    pub fn commits_jsonl(&self) -> String {
        jsonl(&self.commits)
    }

    pub fn code_jsonl(&self) -> String {
        jsonl(&self.code)
    }

    pub fn identities_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&self.identities).expect("string map");
        out.push('\n');
        out
    }
}

fn jsonl<T: serde::Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serializable item"));
        out.push('\n');
    }
    out
}

const MINI_SEED: u64 = 0x4D49_4E49;
const MINI_REPORTS: usize = 132;

const DEVS: [&str; 8] = [
    "alice", "bruno", "carol", "diego", "elena", "felix", "gita", "hugo",
];

const TOPICS: [&str; 6] = ["parser", "network", "storage", "ui", "auth", "build"];

const TOPIC_VOCAB: [[&str; 10]; 6] = [
    [
        "parser", "token", "grammar", "syntax", "bracket", "nested", "literal", "lexer", "quote",
        "newline",
    ],
    [
        "socket", "packet", "timeout", "retry", "upload", "proxy", "header", "stream", "latency",
        "buffer",
    ],
    [
        "disk", "journal", "flush", "segment", "compaction", "snapshot", "corrupt", "record",
        "offset", "checksum",
    ],
    [
        "button", "layout", "widget", "click", "scroll", "overlap", "pixel", "theme", "modal",
        "focus",
    ],
    [
        "login", "password", "session", "permission", "role", "expired", "cookie", "redirect",
        "denied", "signup",
    ],
    [
        "compile", "artifact", "target", "bundle", "dependency", "manifest", "toolchain",
        "incremental", "symbol", "archive",
    ],
];

const FILLERS: [&str; 10] = [
    "crash",
    "regression",
    "slow",
    "broken",
    "unexpected",
    "warning",
    "failure",
    "flaky",
    "freeze",
    "wrong",
];

/// Developer indices most active per topic.
const TOPIC_DEVS: [[usize; 2]; 6] = [[0, 7], [1, 6], [4, 0], [2, 6], [3, 2], [5, 1]];

/// The bundled mini project: eight developers, thirty source files, and
/// `MINI_REPORTS` reports over six weeks. Around one report in six is not
/// usable for experiments (open, not a bug, or unattributable), matching
/// the filtering a real tracker export goes through.
pub fn mini_parts() -> DatasetParts {
    let mut rng = ChaCha8Rng::seed_from_u64(MINI_SEED);
    let base = Utc.with_ymd_and_hms(2024, 1, 2, 0, 0, 0).unwrap();

    let mut code = Vec::new();
    for (t, topic) in TOPICS.iter().enumerate() {
        for f in 0..5 {
            let w = TOPIC_VOCAB[t];
            let path = format!("src/{topic}/{}.rs", w[f]);
            let content = format!(
                "{} {} {} handles {} {} paths and guards the {} case",
                w[f],
                w[(f + 1) % 10],
                w[(f + 2) % 10],
                w[(f + 5) % 10],
                w[(f + 7) % 10],
                FILLERS[(t * 5 + f) % FILLERS.len()],
            );
            code.push(CodeFile { path, content });
        }
    }

    let mut reports = Vec::new();
    let mut commits = Vec::new();
    let mut sha_counter: u64 = 0x100;

    for i in 0..MINI_REPORTS {
        let id = format!("{}", 1001 + i);
        let created = base + Duration::hours(7 * i as i64);
        let topic = rng.gen_range(0..TOPICS.len());

        let mut words: Vec<&str> = if matches!(i, 40 | 80 | 104) {
            vec![TOPIC_VOCAB[topic][rng.gen_range(0..10)]]
        } else {
            let count = rng.gen_range(3..=6);
            let mut picks = rand::seq::index::sample(&mut rng, 10, count)
                .into_iter()
                .map(|w| TOPIC_VOCAB[topic][w])
                .collect::<Vec<_>>();
            if rng.gen_bool(0.6) {
                picks.push(FILLERS[rng.gen_range(0..FILLERS.len())]);
            }
            if rng.gen_bool(0.25) {
                let other = (topic + rng.gen_range(1..TOPICS.len())) % TOPICS.len();
                picks.push(TOPIC_VOCAB[other][rng.gen_range(0..10)]);
            }
            picks
        };
        if words.len() > 2 && rng.gen_bool(0.3) {
            let repeat = words[rng.gen_range(0..words.len())];
            words.push(repeat);
        }
        let split = words.len().min(3);
        let title = words[..split].join(" ");
        let description = words[split..].join(" ");

        let fixer_idx = if rng.gen_bool(0.7) {
            TOPIC_DEVS[topic][rng.gen_range(0..2)]
        } else {
            rng.gen_range(0..DEVS.len())
        };
        let fixer = DEVS[fixer_idx].to_string();

        let open = i % 13 == 7;
        let enhancement = !open && i % 17 == 11;
        let orphan = !open && !enhancement && i % 19 == 5;

        if open {
            reports.push(BugReport {
                id,
                title,
                description,
                created_at: created,
                closed_at: None,
                labels: vec!["bug".to_string()],
                assignees: Vec::new(),
                status: ReportStatus::Open,
            });
            continue;
        }
        if orphan {
            // Closed bug with no assignee and no linked commit: excluded
            // from experiments because nobody can be credited.
            reports.push(BugReport {
                id,
                title,
                description,
                created_at: created,
                closed_at: Some(created + Duration::hours(2)),
                labels: vec!["bug".to_string()],
                assignees: Vec::new(),
                status: ReportStatus::Closed,
            });
            continue;
        }

        let label = if enhancement { "enhancement" } else { "bug" };
        reports.push(BugReport {
            id: id.clone(),
            title,
            description,
            created_at: created,
            closed_at: Some(created + Duration::hours(2)),
            labels: vec![label.to_string()],
            assignees: vec![fixer.clone()],
            status: ReportStatus::Closed,
        });

        let author = match (fixer.as_str(), rng.gen_bool(0.3)) {
            ("alice", true) => "alice.dev".to_string(),
            ("bruno", true) => "bruno-gh".to_string(),
            _ => fixer.clone(),
        };
        let committer = if rng.gen_bool(0.15) {
            DEVS[(fixer_idx + 1 + rng.gen_range(0..DEVS.len() - 1)) % DEVS.len()].to_string()
        } else {
            author.clone()
        };
        let file_count = rng.gen_range(1..=3);
        let files: Vec<String> = rand::seq::index::sample(&mut rng, 5, file_count)
            .into_iter()
            .map(|f| code[topic * 5 + f].path.clone())
            .collect();
        let verb = ["fixes", "Fixes", "closes", "resolves", "fixed:", "resolved:"]
            [rng.gen_range(0..6)];
        sha_counter += 1;
        commits.push(Commit {
            sha: format!("{sha_counter:040x}"),
            author,
            committer,
            timestamp: created + Duration::hours(1),
            message: format!("{verb} #{id} guard the {} path", TOPIC_VOCAB[topic][0]),
            files,
        });
    }

    // Untracked maintenance work: commits nobody links to a report. One is
    // by a developer who never fixes anything and exists only as a
    // candidate with an empty profile.
    let noise = [
        ("hugo", "refactor shared helpers", 40),
        ("gita", "bump toolchain and tidy imports", 70),
        ("iris", "normalize whitespace in docs", 100),
    ];
    for (author, message, report_offset) in noise {
        sha_counter += 1;
        commits.push(Commit {
            sha: format!("{sha_counter:040x}"),
            author: author.to_string(),
            committer: author.to_string(),
            timestamp: base + Duration::hours(7 * report_offset + 3),
            message: message.to_string(),
            files: vec![code[(report_offset as usize) % code.len()].path.clone()],
        });
    }

    let mut identities = BTreeMap::new();
    identities.insert("alice.dev".to_string(), "alice".to_string());
    identities.insert("bruno-gh".to_string(), "bruno".to_string());

    DatasetParts {
        reports,
        commits,
        code,
        identities,
    }
}

pub fn mini_corpus() -> Corpus {
    mini_parts().into_corpus()
}

pub struct DuplicationFixture {
    pub corpus: Corpus,
    /// Ids of the twenty late queries, each a verbatim copy of an earlier
    /// report fixed by the same developer.
    pub query_ids: Vec<String>,
}

pub fn duplication_corpus() -> DuplicationFixture {
    let base = Utc.with_ymd_and_hms(2024, 5, 1, 8, 0, 0).unwrap();
    let devs = ["dana", "eli", "finn", "iris"];
    let mut reports = Vec::new();
    let mut commits = Vec::new();
    let mut sha_counter: u64 = 0x9000;

    let push_report =
        |reports: &mut Vec<BugReport>,
         commits: &mut Vec<Commit>,
         sha_counter: &mut u64,
         id: String,
         title: String,
         description: String,
         created: DateTime<Utc>,
         dev: &str| {
            reports.push(BugReport {
                id: id.clone(),
                title,
                description,
                created_at: created,
                closed_at: Some(created + Duration::hours(2)),
                labels: vec!["bug".to_string()],
                assignees: vec![dev.to_string()],
                status: ReportStatus::Closed,
            });
            *sha_counter += 1;
            commits.push(Commit {
                sha: format!("{sha_counter:040x}"),
                author: dev.to_string(),
                committer: dev.to_string(),
                timestamp: created + Duration::hours(1),
                message: format!("fixes #{id}"),
                files: Vec::new(),
            });
        };

    for i in 0..20 {
        let dev = devs[i % devs.len()];
        push_report(
            &mut reports,
            &mut commits,
            &mut sha_counter,
            format!("d-{:03}", i + 1),
            format!("motif{i}a motif{i}b"),
            format!("motif{i}c stray{i}"),
            base + Duration::days(i as i64),
            dev,
        );
    }
    let mut query_ids = Vec::new();
    for i in 0..20 {
        let dev = devs[i % devs.len()];
        let id = format!("d-{:03}", 101 + i);
        query_ids.push(id.clone());
        push_report(
            &mut reports,
            &mut commits,
            &mut sha_counter,
            id,
            format!("motif{i}a motif{i}b"),
            format!("motif{i}c stray{i}"),
            base + Duration::days(40 + i as i64),
            dev,
        );
    }

    let corpus = Corpus::from_parts(reports, commits, Vec::new(), &IdentityMap::empty())
        .expect("duplication fixture is well formed");
    DuplicationFixture { corpus, query_ids }
}

const THRESHOLD_EVAL_QUERIES: usize = 126;

/// A corpus where the best approach is decided by whether the query's
/// devIDF is zero. Even queries carry a single never-seen term: TEXTSIM
/// misses, FREQ's top developer fixes them. Odd queries duplicate an early
/// report verbatim: TEXTSIM hits at rank one while FREQ's leader does not
/// fix them. Every fixing developer has a shadow developer whose non-bug
/// workload mirrors theirs exactly (same texts, timestamps, and touched
/// files, smaller id), so the rank learner can never place the true fixer
/// first: the shadow always ties and outsorts them. That pins the best
/// approach on each side, with no rank ties anywhere.
pub fn threshold_corpus() -> Corpus {
    let base = Utc.with_ymd_and_hms(2024, 4, 1, 6, 0, 0).unwrap();
    let mut reports = Vec::new();
    let mut commits = Vec::new();
    let mut sha_counter: u64 = 0x20_000;

    let files_for = |ordinal: usize| -> Vec<String> {
        if ordinal % 2 == 0 {
            vec!["src/engine.rs".to_string()]
        } else {
            vec!["src/engine.rs".to_string(), "src/gearbox.rs".to_string()]
        }
    };

    // A fixed report plus its shadow twin: same text and instants, a
    // non-bug label, the mirror developer, and the same touched files.
    let push_pair = |reports: &mut Vec<BugReport>,
                         commits: &mut Vec<Commit>,
                         sha_counter: &mut u64,
                         id: String,
                         twin_id: String,
                         title: &str,
                         created: DateTime<Utc>,
                         dev: &str,
                         twin_dev: &str,
                         ordinal: usize| {
        for (report_id, developer, label) in
            [(id, dev, "bug"), (twin_id, twin_dev, "chore")]
        {
            reports.push(BugReport {
                id: report_id.clone(),
                title: title.to_string(),
                description: String::new(),
                created_at: created,
                closed_at: Some(created + Duration::hours(2)),
                labels: vec![label.to_string()],
                assignees: vec![developer.to_string()],
                status: ReportStatus::Closed,
            });
            *sha_counter += 1;
            commits.push(Commit {
                sha: format!("{sha_counter:040x}"),
                author: developer.to_string(),
                committer: developer.to_string(),
                timestamp: created + Duration::hours(1),
                message: format!("fixes #{report_id}"),
                files: files_for(ordinal),
            });
        }
    };

    // Early history, fold one of the ten-fold protocol: eight reports fixed
    // by fay and six by tom, so FREQ always ranks fay ahead of tom.
    let fay_slots = [0, 2, 4, 6, 8, 10, 12, 13];
    let tom_slots = [1, 3, 5, 7, 9, 11];
    for (k, slot) in fay_slots.iter().enumerate() {
        push_pair(
            &mut reports,
            &mut commits,
            &mut sha_counter,
            format!("h-1{:02}", k + 1),
            format!("h-2{:02}", k + 1),
            &format!("mill grind{}", k + 1),
            base + Duration::days(*slot),
            "fay",
            "ada",
            k,
        );
    }
    for (k, slot) in tom_slots.iter().enumerate() {
        push_pair(
            &mut reports,
            &mut commits,
            &mut sha_counter,
            format!("h-3{:02}", k + 1),
            format!("h-4{:02}", k + 1),
            &format!("beta veil{}", k + 1),
            base + Duration::days(*slot),
            "tom",
            "bea",
            k,
        );
    }

    for j in 0..THRESHOLD_EVAL_QUERIES {
        let created = base + Duration::days(20 + j as i64);
        let (title, dev, twin_dev) = if j % 2 == 0 {
            // Single novel term: devIDF is exactly zero.
            (format!("rune{}", 200 + j), "fay", "ada")
        } else {
            // Verbatim duplicate of an early tom report: two terms with
            // different document frequencies, so devIDF is well above zero.
            (format!("beta veil{}", (j / 2) % 6 + 1), "tom", "bea")
        };
        push_pair(
            &mut reports,
            &mut commits,
            &mut sha_counter,
            format!("q-{:03}", j + 1),
            format!("t-{:03}", j + 1),
            &title,
            created,
            dev,
            twin_dev,
            j,
        );
    }

    let code = vec![
        CodeFile {
            path: "src/engine.rs".to_string(),
            content: "engine crankshaft piston manifold".to_string(),
        },
        CodeFile {
            path: "src/gearbox.rs".to_string(),
            content: "gearbox clutch flywheel synchro".to_string(),
        },
    ];

    Corpus::from_parts(reports, commits, code, &IdentityMap::empty())
        .expect("threshold fixture is well formed")
}
