//! Run configuration files.
//!
//! A run config is one JSON object: the experiment fields (`policies`,
//! `budget`, `split`, ...) at top level, plus `data`, `output_dir` and an
//! optional `verbosity`. Relative paths resolve against the config file's
//! directory.

use std::path::{Path, PathBuf};

use mabsel::harness::ExperimentConfig;
use mabsel::pool::{generate_synthetic, MetaColumn, PoolError, SourcePool, SyntheticConfig};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

const RUN_KEYS: [&str; 3] = ["data", "output_dir", "verbosity"];
const EXPERIMENT_KEYS: [&str; 12] = [
    "split",
    "partitions",
    "policies",
    "lambda",
    "budget",
    "repeats",
    "base_seed",
    "checkpoint_interval",
    "reward_baseline",
    "label_prior_bins",
    "label_column",
    "dataset_column",
];
const REQUIRED: [&str; 4] = ["data", "policies", "budget", "output_dir"];

/// Where the pool comes from: a synthetic generator config with its seed, or a
/// CSV file with its metadata schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schema: Vec<MetaColumn>,
}

impl DataSpec {
    fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        match (&self.synthetic, &self.csv) {
            (Some(_), Some(_)) => out.push("data: give either `synthetic` or `csv`, not both".into()),
            (None, None) => out.push("data: one of `synthetic` or `csv` is required".into()),
            (Some(cfg), None) => {
                if let Err(e) = cfg.validate() {
                    out.push(format!("data.synthetic: {e}"));
                }
            }
            (None, Some(_)) => {
                if self.schema.is_empty() {
                    out.push("data.schema: required with `csv`".into());
                }
            }
        }
        out
    }

    pub fn load(&self) -> Result<SourcePool, PoolError> {
        match (&self.synthetic, &self.csv) {
            (Some(cfg), _) => generate_synthetic(cfg, self.seed),
            (None, Some(path)) => SourcePool::load_csv(path, &self.schema),
            (None, None) => Err(PoolError::Config("no data source".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verbosity {
    Quiet,
    Warn,
    #[default]
    Info,
    Debug,
}

impl Verbosity {
    pub fn filter(self) -> log::LevelFilter {
        match self {
            Verbosity::Quiet => log::LevelFilter::Error,
            Verbosity::Warn => log::LevelFilter::Warn,
            Verbosity::Info => log::LevelFilter::Info,
            Verbosity::Debug => log::LevelFilter::Debug,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: DataSpec,
    pub experiment: ExperimentConfig,
    pub output_dir: PathBuf,
    pub verbosity: Verbosity,
}

/// Parses a run config, collecting every problem found instead of stopping at
/// the first.
pub fn parse_run_config(text: &str, base_dir: &Path) -> Result<RunConfig, Vec<String>> {
    let value: Value = serde_json::from_str(text).map_err(|e| vec![format!("not valid JSON: {e}")])?;
    let Value::Object(mut obj) = value else {
        return Err(vec!["config must be a JSON object".into()]);
    };

    let mut problems = Vec::new();
    for key in REQUIRED {
        if !obj.contains_key(key) {
            problems.push(format!("missing required field `{key}`"));
        }
    }
    for key in obj.keys() {
        if !RUN_KEYS.contains(&key.as_str()) && !EXPERIMENT_KEYS.contains(&key.as_str()) {
            problems.push(format!("unknown field `{key}`"));
        }
    }

    let data = obj.remove("data").and_then(|v| field::<DataSpec>(v, "data", &mut problems));
    if let Some(d) = &data {
        problems.extend(d.problems());
    }
    let output_dir = obj
        .remove("output_dir")
        .and_then(|v| field::<PathBuf>(v, "output_dir", &mut problems));
    let verbosity = match obj.remove("verbosity") {
        Some(v) => field::<Verbosity>(v, "verbosity", &mut problems),
        None => Some(Verbosity::default()),
    };

    let experiment_obj: Map<String, Value> =
        obj.into_iter().filter(|(k, _)| EXPERIMENT_KEYS.contains(&k.as_str())).collect();
    let mut experiment = None;
    for (k, v) in &experiment_obj {
        check_experiment_field(k, v, &mut problems);
    }
    if ["policies", "budget"].iter().all(|k| experiment_obj.contains_key(*k)) {
        if let Ok(cfg) = serde_json::from_value::<ExperimentConfig>(Value::Object(experiment_obj)) {
            for p in cfg.problems(None) {
                if !problems.contains(&p) {
                    problems.push(p);
                }
            }
            experiment = Some(cfg);
        }
    }

    match (data, experiment, output_dir, verbosity) {
        (Some(mut data), Some(experiment), Some(output_dir), Some(verbosity)) if problems.is_empty() => {
            if let Some(p) = data.csv.take() {
                data.csv = Some(base_dir.join(p));
            }
            Ok(RunConfig {
                data,
                experiment,
                output_dir: base_dir.join(output_dir),
                verbosity,
            })
        }
        _ => {
            if problems.is_empty() {
                problems.push("invalid configuration".into());
            }
            Err(problems)
        }
    }
}

fn field<T: for<'de> Deserialize<'de>>(v: Value, name: &str, problems: &mut Vec<String>) -> Option<T> {
    match serde_json::from_value(v) {
        Ok(t) => Some(t),
        Err(e) => {
            problems.push(format!("{name}: {e}"));
            None
        }
    }
}

/// Checks one experiment field on its own, against defaults for the rest, so
/// that several bad fields are all reported.
fn check_experiment_field(key: &str, v: &Value, problems: &mut Vec<String>) {
    let mut probe = serde_json::json!({ "policies": ["random"], "budget": 1 });
    probe[key] = v.clone();
    match serde_json::from_value::<ExperimentConfig>(probe) {
        Ok(cfg) => problems.extend(cfg.problems(None)),
        Err(e) => problems.push(format!("{key}: {e}")),
    }
}
