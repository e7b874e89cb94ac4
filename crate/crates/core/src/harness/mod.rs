//! Repeated experiments: splits, policy runs and learning-curve aggregation.
//!
//! Repeat `k` uses seed `base_seed + k` for its split and for every policy
//! run on that split, so all policies of one repeat see identical validation
//! and test data. Curves are aligned by the number of revealed samples.

mod bench;
mod split;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    self, fingerprint_of, ArmSummary, EngineConfig, EngineError, RewardBaseline, RunLedger, StopReason,
};
use crate::partition::{build_cluster_set, PartitionError, PartitionSpec};
use crate::pool::{MetaKind, PoolError, SourcePool};

pub use bench::{bandit_bench, write_bench_csv, BenchConfig, BenchRow};
pub use split::{prepare_split, split_mixed, split_target, PreparedSplit, SplitIds, SplitMode, SplitSpec};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("split: {0}")]
    EmptySplit(String),
    #[error("unknown target dataset `{0}`")]
    UnknownTarget(String),
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A selection policy. Text forms: `mabs`, `mabs[col1,col2]`, `random`,
/// `label_prior`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Policy {
    /// Thompson sampling over all configured partitions, or only the listed
    /// metadata columns.
    Mabs(Option<Vec<String>>),
    Random,
    LabelPrior,
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Mabs(None) => f.write_str("mabs"),
            Policy::Mabs(Some(cols)) => write!(f, "mabs[{}]", cols.join(",")),
            Policy::Random => f.write_str("random"),
            Policy::LabelPrior => f.write_str("label_prior"),
        }
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "mabs" => return Ok(Policy::Mabs(None)),
            "random" => return Ok(Policy::Random),
            "label_prior" => return Ok(Policy::LabelPrior),
            _ => {}
        }
        let inner = s
            .strip_prefix("mabs[")
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| format!("unknown policy `{s}`"))?;
        let cols: Vec<String> = inner.split(',').map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect();
        if cols.is_empty() {
            return Err(format!("policy `{s}` lists no columns"));
        }
        Ok(Policy::Mabs(Some(cols)))
    }
}

impl TryFrom<String> for Policy {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Policy> for String {
    fn from(p: Policy) -> Self {
        p.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub split: SplitSpec,
    /// Clusters for `mabs`. Empty means one partition per metadata column.
    #[serde(default)]
    pub partitions: Vec<PartitionSpec>,
    pub policies: Vec<Policy>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub budget: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_checkpoint")]
    pub checkpoint_interval: usize,
    #[serde(default)]
    pub reward_baseline: RewardBaseline,
    #[serde(default = "default_prior_bins")]
    pub label_prior_bins: usize,
    #[serde(default = "default_label_column")]
    pub label_column: String,
    #[serde(default = "default_dataset_column")]
    pub dataset_column: String,
}

fn default_lambda() -> f64 {
    1.0
}
fn default_repeats() -> usize {
    20
}
fn default_checkpoint() -> usize {
    1
}
fn default_prior_bins() -> usize {
    10
}
fn default_label_column() -> String {
    "age".into()
}
fn default_dataset_column() -> String {
    "dataset".into()
}

impl ExperimentConfig {
    pub fn new(policies: Vec<Policy>, budget: usize) -> Self {
        Self {
            split: SplitSpec::default(),
            partitions: Vec::new(),
            policies,
            lambda: default_lambda(),
            budget,
            repeats: default_repeats(),
            base_seed: 0,
            checkpoint_interval: default_checkpoint(),
            reward_baseline: RewardBaseline::Best,
            label_prior_bins: default_prior_bins(),
            label_column: default_label_column(),
            dataset_column: default_dataset_column(),
        }
    }

    /// Every problem with the config, optionally checked against a pool's
    /// metadata columns.
    pub fn problems(&self, pool: Option<&SourcePool>) -> Vec<String> {
        let mut out = self.split.problems();
        if self.policies.is_empty() {
            out.push("policies must not be empty".into());
        }
        if self.budget == 0 {
            out.push("budget must be at least 1".into());
        }
        if self.repeats == 0 {
            out.push("repeats must be at least 1".into());
        }
        if self.checkpoint_interval == 0 {
            out.push("checkpoint_interval must be at least 1".into());
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            out.push("lambda must be finite and >= 0".into());
        }
        if self.label_prior_bins == 0 {
            out.push("label_prior_bins must be at least 1".into());
        }
        for p in &self.partitions {
            if p.eta == Some(0) {
                out.push(format!("partition `{}`: eta must be at least 1", p.column));
            }
        }
        if let Some(pool) = pool {
            let has = |c: &str| pool.column_index(c).is_ok();
            let mut cols: Vec<&str> = self.partitions.iter().map(|p| p.column.as_str()).collect();
            for p in &self.policies {
                match p {
                    Policy::Mabs(Some(list)) => cols.extend(list.iter().map(String::as_str)),
                    Policy::LabelPrior => cols.push(&self.label_column),
                    _ => {}
                }
            }
            if self.split.mode == SplitMode::TargetDataset {
                cols.push(&self.dataset_column);
            }
            for c in cols {
                if !has(c) {
                    let msg = format!("unknown metadata column `{c}`");
                    if !out.contains(&msg) {
                        out.push(msg);
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self, pool: Option<&SourcePool>) -> Result<(), HarnessError> {
        let problems = self.problems(pool);
        if problems.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(problems))
        }
    }

    /// Partition specs with the defaults filled in for `pool`.
    pub fn resolved_partitions(&self, pool: &SourcePool) -> Vec<PartitionSpec> {
        if !self.partitions.is_empty() {
            return self.partitions.clone();
        }
        pool.schema()
            .iter()
            .map(|c| match c.kind {
                MetaKind::Categorical => PartitionSpec::new(&c.name),
                MetaKind::Numeric => PartitionSpec::with_eta(&c.name, crate::partition::DEFAULT_NUMERIC_BINS),
            })
            .collect()
    }

    /// The config with every default made explicit.
    pub fn resolved(&self, pool: &SourcePool) -> ExperimentConfig {
        let mut out = self.clone();
        out.partitions = self
            .resolved_partitions(pool)
            .into_iter()
            .map(|mut p| {
                if pool.column_index(&p.column).is_ok_and(|j| pool.schema()[j].kind == MetaKind::Numeric) {
                    p.eta.get_or_insert(crate::partition::DEFAULT_NUMERIC_BINS);
                }
                p
            })
            .collect();
        out
    }

    pub fn fingerprint(&self) -> String {
        fingerprint_of(self)
    }

    fn specs_for(&self, policy: &Policy, all: &[PartitionSpec]) -> Vec<PartitionSpec> {
        match policy {
            Policy::Mabs(Some(cols)) => cols
                .iter()
                .map(|c| all.iter().find(|p| &p.column == c).cloned().unwrap_or_else(|| PartitionSpec::new(c)))
                .collect(),
            _ => all.to_vec(),
        }
    }

    fn engine_config(&self, seed: u64) -> EngineConfig {
        EngineConfig {
            budget: self.budget,
            lambda: self.lambda,
            seed,
            reward_baseline: self.reward_baseline,
            checkpoint_interval: self.checkpoint_interval,
        }
    }
}

/// One policy run inside a bundle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    pub ledger: RunLedger,
    pub arms: Vec<ArmSummary>,
}

/// Mean and spread of the test r² across repeats at one step count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: usize,
    /// Runs contributing a test score at `t`.
    pub n: usize,
    pub mean_test: f64,
    pub sd_test: f64,
    pub mean_validation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyCurves {
    pub policy: String,
    pub runs: Vec<RunRecord>,
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveBundle {
    pub config_fingerprint: String,
    pub policies: Vec<PolicyCurves>,
}

impl CurveBundle {
    pub fn policy(&self, name: &str) -> Option<&PolicyCurves> {
        self.policies.iter().find(|p| p.policy == name)
    }

    /// Mean test r² of `policy` after `t` reveals.
    pub fn mean_test_at(&self, policy: &str, t: usize) -> Option<f64> {
        self.policy(policy)?.curve.iter().find(|c| c.t == t).map(|c| c.mean_test)
    }

    /// One row per (policy, seed, step): `policy,seed,t,val_r2,test_r2,reward`.
    pub fn write_curves_csv<W: Write>(&self, writer: W) -> Result<(), HarnessError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["policy", "seed", "t", "val_r2", "test_r2", "reward"])?;
        for p in &self.policies {
            for run in &p.runs {
                for s in &run.ledger.steps {
                    wtr.write_record([
                        p.policy.clone(),
                        run.seed.to_string(),
                        s.t.to_string(),
                        opt(s.val_r2),
                        opt(s.test_r2),
                        s.reward.value().to_string(),
                    ])?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn summary(&self, resolved_config: &ExperimentConfig) -> BundleSummary {
        let policies = self
            .policies
            .iter()
            .map(|p| {
                let finals: Vec<f64> = p.runs.iter().filter_map(|r| r.ledger.final_test()).collect();
                let (mean, sd) = mean_sd(&finals);
                PolicySummary {
                    policy: p.policy.clone(),
                    final_mean_test: (!finals.is_empty()).then_some(mean),
                    final_sd_test: (!finals.is_empty()).then_some(sd),
                    runs: p
                        .runs
                        .iter()
                        .map(|r| RunSummary {
                            seed: r.seed,
                            steps: r.ledger.len(),
                            stop: r.ledger.stop,
                            best_validation: r.ledger.best_validation.is_finite().then_some(r.ledger.best_validation),
                            final_test: r.ledger.final_test(),
                            arms: r.arms.clone(),
                            warnings: r.ledger.warnings.clone(),
                        })
                        .collect(),
                }
            })
            .collect();
        BundleSummary {
            config_fingerprint: self.config_fingerprint.clone(),
            config: resolved_config.clone(),
            seeds: (0..resolved_config.repeats as u64).map(|k| resolved_config.base_seed + k).collect(),
            policies,
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub steps: usize,
    pub stop: StopReason,
    pub best_validation: Option<f64>,
    pub final_test: Option<f64>,
    pub arms: Vec<ArmSummary>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub policy: String,
    pub final_mean_test: Option<f64>,
    pub final_sd_test: Option<f64>,
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BundleSummary {
    pub config_fingerprint: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    pub policies: Vec<PolicySummary>,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Aggregates per-step test r² across runs.
pub fn aggregate(runs: &[RunRecord]) -> Vec<CurvePoint> {
    let longest = runs.iter().map(|r| r.ledger.len()).max().unwrap_or(0);
    (1..=longest)
        .filter_map(|t| {
            let at = |f: fn(&engine::StepRecord) -> Option<f64>| -> Vec<f64> {
                runs.iter().filter_map(|r| r.ledger.steps.get(t - 1).and_then(f)).collect()
            };
            let tests = at(|s| s.test_r2);
            if tests.is_empty() {
                return None;
            }
            let vals = at(|s| s.val_r2);
            let (mean_test, sd_test) = mean_sd(&tests);
            Some(CurvePoint {
                t,
                n: tests.len(),
                mean_test,
                sd_test,
                mean_validation: (!vals.is_empty()).then(|| mean_sd(&vals).0),
            })
        })
        .collect()
}

fn run_repeat(
    pool: &SourcePool,
    cfg: &ExperimentConfig,
    all_specs: &[PartitionSpec],
    fingerprint: &str,
    seed: u64,
) -> Result<Vec<RunRecord>, HarnessError> {
    let ids = match cfg.split.mode {
        SplitMode::Mixed => split_mixed(pool, &cfg.split, seed)?,
        SplitMode::TargetDataset => split_target(
            pool,
            &cfg.dataset_column,
            cfg.split.target.as_deref().unwrap_or_default(),
            cfg.split.target_validation_fraction,
            seed,
        )?,
    };
    let prepared = prepare_split(pool, &ids)?;
    let engine_cfg = cfg.engine_config(seed);

    cfg.policies
        .iter()
        .map(|policy| {
            let mut hidden = prepared.hidden.clone();
            let outcome = match policy {
                Policy::Mabs(_) => {
                    let mut cset = build_cluster_set(&hidden, &cfg.specs_for(policy, all_specs))?;
                    engine::run_mabs_named(&policy.to_string(), &mut hidden, &mut cset, &prepared.evals, &engine_cfg)?
                }
                Policy::Random => engine::run_random(&mut hidden, &prepared.evals, &engine_cfg)?,
                Policy::LabelPrior => engine::run_label_prior(
                    &mut hidden,
                    &prepared.evals,
                    &prepared.test_labels,
                    cfg.label_prior_bins,
                    &cfg.label_column,
                    &engine_cfg,
                )?,
            };
            let mut ledger = outcome.ledger;
            ledger.config_fingerprint = fingerprint.to_string();
            let arms = engine::arm_summaries(&outcome.arms, &outcome.arm_labels);
            Ok(RunRecord { seed, ledger, arms })
        })
        .collect()
}

/// Runs every policy on `repeats` random splits of `pool`. Repeats execute in
/// parallel on the current rayon pool; results are ordered by seed.
pub fn run_experiment(pool: &SourcePool, cfg: &ExperimentConfig) -> Result<CurveBundle, HarnessError> {
    cfg.validate(Some(pool))?;
    let resolved = cfg.resolved(pool);
    let fingerprint = resolved.fingerprint();
    let specs = resolved.partitions.clone();

    let per_repeat: Vec<Vec<RunRecord>> = (0..cfg.repeats as u64)
        .into_par_iter()
        .map(|k| run_repeat(pool, &resolved, &specs, &fingerprint, cfg.base_seed + k))
        .collect::<Result<_, _>>()?;

    let policies = cfg
        .policies
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let runs: Vec<RunRecord> = per_repeat.iter().map(|r| r[i].clone()).collect();
            PolicyCurves {
                policy: p.to_string(),
                curve: aggregate(&runs),
                runs,
            }
        })
        .collect();
    Ok(CurveBundle {
        config_fingerprint: fingerprint,
        policies,
    })
}
