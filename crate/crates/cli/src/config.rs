//! Settings resolution: built-in defaults, then the key=value config file,
//! then command-line flags, later layers winning.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use triage_lab_core::lupin::ExperimentConfig;

use crate::CliError;

/// Everything a subcommand might need, fully resolved.
#[derive(Debug, Clone)]
pub struct Settings {
    /// Dataset directory with reports.jsonl, commits.jsonl, code.jsonl,
    /// identities.json.
    pub data: PathBuf,
    /// Default output location; subcommands interpret it as file or dir.
    pub out: Option<PathBuf>,
    /// Worker thread cap; None leaves the parallel runtime at its default.
    pub jobs: Option<usize>,
    pub experiment: ExperimentConfig,
    pub mine: MineSettings,
}

#[derive(Debug, Clone)]
pub struct MineSettings {
    pub repo: Option<String>,
    pub since: Option<DateTime<Utc>>,
    pub page_size: usize,
    pub fixture: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            data: PathBuf::from("data/mini"),
            out: None,
            jobs: None,
            experiment: ExperimentConfig::default(),
            mine: MineSettings {
                repo: None,
                since: None,
                page_size: 100,
                fixture: None,
            },
        }
    }
}

impl Settings {
    /// Reads a config file: one `key = value` per line, `#` comments.
    /// Unknown keys are rejected so typos cannot silently fall back to
    /// defaults.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|err| CliError::Data(format!("{}: {err}", path.display())))?;
        let mut settings = Settings::default();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "{}:{}: expected key = value, got {line:?}",
                    path.display(),
                    number + 1
                )));
            };
            settings.apply(key.trim(), value.trim()).map_err(|msg| {
                CliError::Usage(format!("{}:{}: {msg}", path.display(), number + 1))
            })?;
        }
        Ok(settings)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "data" => self.data = PathBuf::from(value),
            "out" => self.out = Some(PathBuf::from(value)),
            "jobs" => self.jobs = Some(parse(key, value)?),
            "fold_count" => self.experiment.fold_count = parse(key, value)?,
            "train_fraction" => self.experiment.train_fraction = parse(key, value)?,
            "repetitions" => self.experiment.repetitions = parse(key, value)?,
            "seeds" => {
                let seeds = value
                    .split(',')
                    .map(|s| parse("seeds", s.trim()))
                    .collect::<Result<Vec<u64>, String>>()?;
                self.experiment.repetitions = seeds.len();
                self.experiment.seeds = seeds;
            }
            "k_max" => self.experiment.k_max = parse(key, value)?,
            "bm25_k1" => self.experiment.bm25_k1 = parse(key, value)?,
            "bm25_b" => self.experiment.bm25_b = parse(key, value)?,
            "rank_learning_rate" => self.experiment.rank.learning_rate = parse(key, value)?,
            "rank_epochs" => self.experiment.rank.epochs = parse(key, value)?,
            "rank_regularization" => self.experiment.rank.regularization = parse(key, value)?,
            "rank_seed" => self.experiment.rank.seed = parse(key, value)?,
            "repo" => self.mine.repo = Some(value.to_string()),
            "since" => {
                let parsed = DateTime::parse_from_rfc3339(value)
                    .map_err(|err| format!("since: {err}"))?;
                self.mine.since = Some(parsed.with_timezone(&Utc));
            }
            "page_size" => self.mine.page_size = parse(key, value)?,
            "fixture" => self.mine.fixture = Some(PathBuf::from(value)),
            other => return Err(format!("unknown config key {other:?}")),
        }
        Ok(())
    }

    /// Replaces the seed list with `base, base+1, ..` keeping the
    /// configured repetition count.
    pub fn override_seed(&mut self, base: u64) {
        let reps = self.experiment.repetitions.max(1);
        self.experiment.repetitions = reps;
        self.experiment.seeds = (0..reps as u64).map(|i| base + i).collect();
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|err| format!("{key}: cannot parse {value:?}: {err}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(text: &str) -> (tempfile::TempDir, PathBuf) {
        let dir = tempfile::TempDir::new().unwrap();
        let path = dir.path().join("lab.conf");
        std::fs::write(&path, text).unwrap();
        (dir, path)
    }

    #[test]
    fn config_files_layer_over_defaults() {
        let (_dir, path) = write_config(
            "# comment\n\
             data = data/full\n\
             fold_count = 8\n\
             seeds = 7, 8, 9\n\
             bm25_b = 0.6\n",
        );
        let settings = Settings::load(&path).unwrap();
        assert_eq!(settings.data, PathBuf::from("data/full"));
        assert_eq!(settings.experiment.fold_count, 8);
        assert_eq!(settings.experiment.seeds, vec![7, 8, 9]);
        assert_eq!(settings.experiment.repetitions, 3);
        assert_eq!(settings.experiment.bm25_b, 0.6);
        assert_eq!(settings.experiment.k_max, 5);
    }

    #[test]
    fn unknown_keys_and_malformed_lines_are_usage_errors() {
        let (_dir, path) = write_config("folds = 8\n");
        assert!(matches!(Settings::load(&path), Err(CliError::Usage(_))));

        let (_dir, path) = write_config("fold_count 8\n");
        let err = Settings::load(&path).unwrap_err();
        assert!(matches!(err, CliError::Usage(msg) if msg.contains(":1:")));
    }

    #[test]
    fn seed_override_renumbers_the_whole_list() {
        let mut settings = Settings::default();
        settings.override_seed(40);
        assert_eq!(settings.experiment.seeds, vec![40, 41, 42, 43, 44]);
        assert_eq!(settings.experiment.repetitions, 5);
    }
}
