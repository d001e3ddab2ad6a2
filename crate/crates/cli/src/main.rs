//! `triage-lab`: dataset mining, feature export, recommendation runs, and
//! the full chronological experiment, all from one binary.
//!
//! Exit codes: 0 success, 1 usage problems, 2 data problems.

mod commands;
mod config;
mod manifest;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Settings;

#[derive(Debug)]
pub enum CliError {
    /// The invocation was wrong: bad flags, bad config values.
    Usage(String),
    /// The invocation was fine but the data was not.
    Data(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) => f.write_str(msg),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "triage-lab",
    version,
    about = "Bug triage research toolkit",
    disable_help_subcommand = true
)]
struct Cli {
    /// Key = value config file; command-line flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Base seed; replaces the configured seed list with base, base+1, ..
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Cap on worker threads for the parallel sections.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Output file (run, eval, features, ingest) or directory (mine,
    /// experiment); defaults to stdout or a built-in location.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Harvest issues and commits from the tracker into dataset files.
    Mine(MineArgs),
    /// Validate a dataset directory and print its summary counts.
    Ingest(DataArgs),
    /// Export the query features of every evaluation query as CSV.
    Features(DataArgs),
    /// Write per-query developer recommendations as JSON.
    Run(RunArgs),
    /// Score a recommendations file against the dataset's ground truth.
    Eval(EvalArgs),
    /// Run the full chronological experiment; write report and manifest.
    Experiment(DataArgs),
    /// Render an experiment report JSON file as text tables.
    Report(ReportArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Dataset directory (reports.jsonl, commits.jsonl, code.jsonl,
    /// identities.json).
    #[arg(long, value_name = "DIR")]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct MineArgs {
    /// Repository slug, owner/name.
    #[arg(long, value_name = "SLUG")]
    repo: Option<String>,
    /// Only harvest records updated at or after this RFC 3339 instant.
    #[arg(long, value_name = "WHEN")]
    since: Option<String>,
    /// Records per API page (at most 100).
    #[arg(long, value_name = "N")]
    page_size: Option<usize>,
    /// Replay recorded responses from this directory instead of the
    /// network.
    #[arg(long, value_name = "DIR")]
    fixture: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Which recommender to run.
    #[arg(long, value_enum)]
    approach: RunApproach,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RunApproach {
    Freq,
    Textsim,
    L2r,
    Lupin,
    Oracle,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Recommendations JSON produced by `run`.
    #[arg(long, value_name = "FILE")]
    recs: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// report.json produced by `experiment`.
    #[arg(long, value_name = "FILE")]
    report: PathBuf,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version print to stdout and succeed; everything
            // else is a usage error.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let mut settings = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    if let Some(seed) = cli.seed {
        settings.override_seed(seed);
    }
    if let Some(jobs) = cli.jobs {
        settings.jobs = Some(jobs);
    }
    if let Some(jobs) = settings.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".to_string()));
        }
        // First caller wins; harmless if the pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let out = cli.out.as_deref();

    match cli.command {
        Command::Mine(args) => {
            if let Some(repo) = args.repo {
                settings.mine.repo = Some(repo);
            }
            if let Some(since) = args.since {
                let parsed = chrono::DateTime::parse_from_rfc3339(&since)
                    .map_err(|err| CliError::Usage(format!("--since: {err}")))?;
                settings.mine.since = Some(parsed.with_timezone(&chrono::Utc));
            }
            if let Some(page_size) = args.page_size {
                settings.mine.page_size = page_size;
            }
            if let Some(fixture) = args.fixture {
                settings.mine.fixture = Some(fixture);
            }
            commands::mine(&settings, out)
        }
        Command::Ingest(args) => {
            resolve_data(&mut settings, args);
            commands::ingest(&settings, out)
        }
        Command::Features(args) => {
            resolve_data(&mut settings, args);
            commands::features(&settings, out)
        }
        Command::Run(args) => {
            resolve_data(&mut settings, args.data);
            commands::run(&settings, args.approach, out)
        }
        Command::Eval(args) => {
            resolve_data(&mut settings, args.data);
            commands::eval(&settings, &args.recs, out)
        }
        Command::Experiment(args) => {
            resolve_data(&mut settings, args);
            commands::experiment(&settings, out)
        }
        Command::Report(args) => commands::report(&args.report),
    }
}

fn resolve_data(settings: &mut Settings, args: DataArgs) {
    if let Some(data) = args.data {
        settings.data = data;
    }
}
