//! The seven subcommands. Each returns `CliError::Usage` for problems the
//! caller can fix on the command line and `CliError::Data` for problems in
//! the data they pointed at.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use triage_lab_core::classifiers::{
    grid_search_chronological, train_classifier, ClassifierKind, Hyperparams, LabeledExample,
};
use triage_lab_core::corpus::{Corpus, DatasetPaths};
use triage_lab_core::evalkit::{
    aggregate, best_approach_labels, oracle_approach, Approach, Metrics, QueryResult,
};
use triage_lab_core::lupin::{
    lupin_recommend, run_l2r_protocol, run_lupin_experiment, ExperimentConfig, ExperimentReport,
    LupinError, ProtocolOutput,
};
use triage_lab_core::metafeatures::MetaFeatureVector;
use triage_lab_core::recommenders::Method;
use triage_lab_core::render::{distribution_table, metrics_table};
use triage_lab_miner::{export_dataset, open_miner, MinerConfig, MinerError};

use crate::config::Settings;
use crate::manifest::RunManifest;
use crate::{CliError, RunApproach};

/// One line of a `run` output file: the ranked developers for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationRecord {
    pub report_id: String,
    pub approach: String,
    /// For dispatching approaches, the base approach that produced the
    /// ranking; null for the base approaches themselves.
    pub dispatched: Option<String>,
    pub developers: Vec<String>,
}

pub fn mine(settings: &Settings, out: Option<&Path>) -> Result<(), CliError> {
    let repo = settings.mine.repo.clone().ok_or_else(|| {
        CliError::Usage("mine needs --repo owner/name (or repo= in the config file)".to_string())
    })?;
    let mut config = match &settings.mine.fixture {
        Some(dir) => MinerConfig::fixture(repo, dir),
        None => MinerConfig::live(repo),
    };
    config.since = settings.mine.since;
    config.page_size = settings.mine.page_size;
    let out_dir: PathBuf = out
        .map(Path::to_path_buf)
        .or_else(|| settings.out.clone())
        .unwrap_or_else(|| config.out_dir.clone());

    let miner = open_miner(config).map_err(miner_err)?;
    let reports = miner.fetch_issues().map_err(miner_err)?;
    let commits = miner.fetch_commits().map_err(miner_err)?;
    let paths = export_dataset(&reports, &commits, &out_dir).map_err(miner_err)?;
    println!("{} reports -> {}", reports.len(), paths.reports.display());
    println!("{} commits -> {}", commits.len(), paths.commits.display());
    println!("dataset ready in {}", out_dir.display());
    Ok(())
}

pub fn ingest(settings: &Settings, out: Option<&Path>) -> Result<(), CliError> {
    let corpus = load_corpus(&settings.data)?;
    let summary = corpus.summary();
    println!("dataset               {}", settings.data.display());
    println!("reports               {}", summary.reports);
    println!("experimental reports  {}", summary.experimental_reports);
    println!("commits               {}", summary.commits);
    println!("code files            {}", summary.code_files);
    println!("developers            {}", summary.developers);
    println!("mean ground truth     {:.3}", summary.mean_ground_truth_size);
    if let Some(path) = out {
        write_file(path, &to_pretty_json(&summary))?;
    }
    Ok(())
}

pub fn features(settings: &Settings, out: Option<&Path>) -> Result<(), CliError> {
    let corpus = load_corpus(&settings.data)?;
    settings.experiment.validate().map_err(lupin_err)?;
    let protocol = run_l2r_protocol(&corpus, &settings.experiment).map_err(lupin_err)?;
    let mut csv = MetaFeatureVector::csv_header();
    csv.push('\n');
    for query in &protocol.queries {
        csv.push_str(&query.features.csv_row(&query.report_id));
        csv.push('\n');
    }
    emit(out, &csv)
}

pub fn run(settings: &Settings, approach: RunApproach, out: Option<&Path>) -> Result<(), CliError> {
    let corpus = load_corpus(&settings.data)?;
    settings.experiment.validate().map_err(lupin_err)?;
    let protocol = run_l2r_protocol(&corpus, &settings.experiment).map_err(lupin_err)?;
    let records = match approach {
        RunApproach::Freq => base_records(&protocol, Approach::Freq),
        RunApproach::Textsim => base_records(&protocol, Approach::Textsim),
        RunApproach::L2r => base_records(&protocol, Approach::L2r),
        RunApproach::Oracle => oracle_records(&protocol),
        RunApproach::Lupin => lupin_records(&protocol, &settings.experiment)?,
    };
    emit(out, &to_pretty_json(&records))
}

fn base_records(protocol: &ProtocolOutput, approach: Approach) -> Vec<RecommendationRecord> {
    protocol
        .queries
        .iter()
        .map(|query| RecommendationRecord {
            report_id: query.report_id.clone(),
            approach: approach.name().to_string(),
            dispatched: None,
            developers: query.recommendations.get(approach).developer_ids(),
        })
        .collect()
}

fn oracle_records(protocol: &ProtocolOutput) -> Vec<RecommendationRecord> {
    protocol
        .queries
        .iter()
        .map(|query| {
            let best = oracle_approach(&query.triple());
            RecommendationRecord {
                report_id: query.report_id.clone(),
                approach: "ORACLE".to_string(),
                dispatched: Some(best.name().to_string()),
                developers: query.recommendations.get(best).developer_ids(),
            }
        })
        .collect()
}

/// One training pass of the two-step recommender: label the leading
/// train_fraction of the evaluation queries with their best approach, grid
/// search all classifier kinds, keep the best cross-validated one, and
/// dispatch the remaining queries. The full repeated-seed study lives in
/// `experiment`; this is the single-model view of the same pipeline.
fn lupin_records(
    protocol: &ProtocolOutput,
    config: &ExperimentConfig,
) -> Result<Vec<RecommendationRecord>, CliError> {
    let eval = &protocol.queries;
    let train_len = (eval.len() as f64 * config.train_fraction).floor() as usize;
    if train_len == 0 || train_len == eval.len() {
        return Err(CliError::Data(format!(
            "chronological split left an empty side: {} train, {} test queries",
            train_len,
            eval.len() - train_len
        )));
    }
    let seed = config.seeds[0];
    let triples = protocol.triples();
    let labeling = best_approach_labels(&triples, seed);
    let train: Vec<LabeledExample> = eval[..train_len]
        .iter()
        .filter_map(|query| {
            labeling.labels.get(&query.report_id).map(|&label| LabeledExample {
                report_id: query.report_id.clone(),
                features: query.features,
                label,
                created_at: query.created_at,
            })
        })
        .collect();

    let mut best: Option<(f64, ClassifierKind, Hyperparams)> = None;
    for kind in ClassifierKind::ALL {
        let search = grid_search_chronological(kind, &train, &config.grid_for(kind), seed)
            .map_err(|err| CliError::Data(err.to_string()))?;
        if best.as_ref().is_none_or(|&(score, _, _)| search.best_score > score) {
            best = Some((search.best_score, kind, search.best));
        }
    }
    let (_, kind, hyperparams) = best.expect("four classifier kinds searched");
    let model = train_classifier(kind, &train, &hyperparams, seed)
        .map_err(|err| CliError::Data(err.to_string()))?;

    Ok(eval[train_len..]
        .iter()
        .map(|query| {
            let picked = lupin_recommend(query, &model);
            RecommendationRecord {
                report_id: query.report_id.clone(),
                approach: Method::Lupin.name().to_string(),
                dispatched: Some(picked.dispatched.name().to_string()),
                developers: picked.recommendation.developer_ids(),
            }
        })
        .collect())
}

pub fn eval(settings: &Settings, recs: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let corpus = load_corpus(&settings.data)?;
    let text = fs::read_to_string(recs)
        .map_err(|err| CliError::Data(format!("{}: {err}", recs.display())))?;
    let records: Vec<RecommendationRecord> = serde_json::from_str(&text)
        .map_err(|err| CliError::Data(format!("{}: {err}", recs.display())))?;
    if records.is_empty() {
        return Err(CliError::Data(format!("{}: no recommendations", recs.display())));
    }

    let mut truth = BTreeMap::new();
    for idx in corpus.experimental_indices() {
        if let Some(gt) = corpus.ground_truth(idx) {
            truth.insert(corpus.report(idx).id.clone(), gt);
        }
    }

    let mut grouped: BTreeMap<String, Vec<QueryResult>> = BTreeMap::new();
    for record in &records {
        let gt = truth.get(&record.report_id).ok_or_else(|| {
            CliError::Data(format!(
                "report {:?} has no ground truth in {}",
                record.report_id,
                settings.data.display()
            ))
        })?;
        grouped.entry(record.approach.clone()).or_default().push(QueryResult::evaluate(
            &record.report_id,
            &record.approach,
            &record.developers,
            gt,
        ));
    }

    let mut rows = Vec::new();
    for (name, results) in &grouped {
        let metrics = aggregate(results).map_err(|err| CliError::Data(err.to_string()))?;
        rows.push((name.clone(), metrics));
    }
    println!("{}", metrics_table("Recommendation quality", &rows));
    if let Some(path) = out {
        let json: BTreeMap<&str, &Metrics> =
            rows.iter().map(|(name, metrics)| (name.as_str(), metrics)).collect();
        write_file(path, &to_pretty_json(&json))?;
    }
    Ok(())
}

pub fn experiment(settings: &Settings, out: Option<&Path>) -> Result<(), CliError> {
    let corpus = load_corpus(&settings.data)?;
    settings.experiment.validate().map_err(lupin_err)?;
    let started = Instant::now();
    let report = run_lupin_experiment(&corpus, &settings.experiment).map_err(lupin_err)?;
    let duration_ms = started.elapsed().as_millis() as u64;

    let out_dir: PathBuf = out
        .map(Path::to_path_buf)
        .or_else(|| settings.out.clone())
        .unwrap_or_else(|| PathBuf::from("runs/experiment"));
    fs::create_dir_all(&out_dir)
        .map_err(|err| CliError::Data(format!("{}: {err}", out_dir.display())))?;

    let report_path = out_dir.join("report.json");
    write_file(&report_path, &to_pretty_json(&report))?;
    let manifest = RunManifest::new(
        &settings.experiment,
        &DatasetPaths::in_dir(&settings.data),
        duration_ms,
    )?;
    let manifest_path = out_dir.join("manifest.json");
    write_file(&manifest_path, &to_pretty_json(&manifest))?;

    println!("{}", render_experiment(&report));
    println!("report:   {}", report_path.display());
    println!("manifest: {}", manifest_path.display());
    Ok(())
}

pub fn report(path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|err| CliError::Data(format!("{}: {err}", path.display())))?;
    let report: ExperimentReport = serde_json::from_str(&text)
        .map_err(|err| CliError::Data(format!("{}: {err}", path.display())))?;
    println!("{}", render_experiment(&report));
    Ok(())
}

pub fn render_experiment(report: &ExperimentReport) -> String {
    let mut text = String::new();
    text.push_str(&format!(
        "folds: {}  sizes: {:?}\n",
        report.fold_count, report.fold_sizes
    ));
    text.push_str(&format!(
        "queries: {} evaluated = {} train + {} test\n\n",
        report.evaluation_queries, report.train_queries, report.test_queries
    ));

    let mut eval_rows = approach_rows(&report.approach_eval);
    eval_rows.push(("ORACLE".to_string(), report.oracle_eval));
    text.push_str(&metrics_table("Evaluation queries", &eval_rows));
    text.push('\n');

    let mut test_rows = approach_rows(&report.approach_test);
    for summary in &report.classifier_means {
        test_rows.push((format!("LUPIN[{}]", summary.kind.name()), summary.mean));
    }
    test_rows.push(("LUPIN".to_string(), report.lupin));
    test_rows.push(("ORACLE".to_string(), report.oracle_test));
    text.push_str(&metrics_table(
        "Held-out test queries (classifier rows average the runs)",
        &test_rows,
    ));
    text.push('\n');

    text.push_str(&distribution_table(&report.distribution, report.all_miss));
    text.push('\n');
    text.push_str(&format!("selected classifier: {}\n", report.selected_classifier.name()));
    text
}

fn approach_rows(metrics: &BTreeMap<String, Metrics>) -> Vec<(String, Metrics)> {
    Approach::ALL
        .iter()
        .filter_map(|a| metrics.get(a.name()).map(|m| (a.name().to_string(), *m)))
        .collect()
}

fn load_corpus(dir: &Path) -> Result<Corpus, CliError> {
    Corpus::load(&DatasetPaths::in_dir(dir)).map_err(|err| CliError::Data(err.to_string()))
}

fn lupin_err(err: LupinError) -> CliError {
    match err {
        LupinError::InvalidConfig(_) => CliError::Usage(err.to_string()),
        other => CliError::Data(other.to_string()),
    }
}

fn miner_err(err: MinerError) -> CliError {
    match err {
        MinerError::InvalidConfig(_) => CliError::Usage(err.to_string()),
        other => CliError::Data(other.to_string()),
    }
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut json = serde_json::to_string_pretty(value).expect("reports serialize");
    json.push('\n');
    json
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|err| CliError::Data(format!("{}: {err}", parent.display())))?;
        }
    }
    fs::write(path, text).map_err(|err| CliError::Data(format!("{}: {err}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
