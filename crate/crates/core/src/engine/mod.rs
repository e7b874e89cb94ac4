//! The sequential selection loop and its baseline policies.
//!
//! Every policy shares one loop: pick a hidden sample, reveal it, append it to
//! the training set, drop it from every cluster, refit the ridge model from
//! scratch, score the validation set, and turn the score into a ±1 reward.
//! Policies differ only in how the next sample is picked:
//!
//! - [`run_mabs`]: Thompson sampling over the clusters; only the chosen arm's
//!   posterior sees the reward.
//! - [`run_random`]: uniform over the remaining samples.
//! - [`run_label_prior`]: follows the label histogram of the test set through
//!   the label-like metadata column. This baseline looks at test labels and is
//!   an oracle comparator, not a deployable policy.
//!
//! The test set, when given, is scored for reporting only and never touches
//! rewards, posteriors, or random streams.

mod audit;
mod ledger;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bandit::{self, ArmState, BanditError, Reward};
use crate::learner::{fit_ridge, score, Dataset, LearnerError, RidgeModel};
use crate::partition::{Cluster, ClusterLabel, ClusterSet, PartitionError};
use crate::pool::{PoolError, SourcePool};
use crate::rng::{stream, SeedStreams};

pub use audit::{audit_run, check_test_isolation, AuditError};
pub use ledger::{arm_summaries, ArmSummary, LedgerSummary, RunLedger, StepRecord, StopReason};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("checkpoint interval must be at least 1")]
    ZeroCheckpoint,
    #[error("ridge penalty must be finite and >= 0, got {0}")]
    InvalidLambda(f64),
    #[error("validation set: {0}")]
    Validation(String),
    #[error("label prior needs at least one test label and one bin")]
    EmptyPrior,
    #[error("cluster set holds sample {0}, which is not an unrevealed pool sample")]
    ForeignCluster(u64),
    #[error(transparent)]
    Pool(#[from] PoolError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Bandit(#[from] BanditError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardBaseline {
    /// Reward when the score beats the best score so far.
    #[default]
    Best,
    /// Reward when the score beats the previous step's score.
    Previous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub budget: usize,
    pub lambda: f64,
    pub seed: u64,
    #[serde(default)]
    pub reward_baseline: RewardBaseline,
    /// Test r² is computed every this many steps and at the final step.
    #[serde(default = "one")]
    pub checkpoint_interval: usize,
}

fn one() -> usize {
    1
}

impl EngineConfig {
    pub fn new(budget: usize, lambda: f64, seed: u64) -> Self {
        Self {
            budget,
            lambda,
            seed,
            reward_baseline: RewardBaseline::Best,
            checkpoint_interval: 1,
        }
    }

    /// Hash of every setting except the seed.
    pub fn fingerprint(&self) -> String {
        let mut tagged = self.clone();
        tagged.seed = 0;
        fingerprint_of(&tagged)
    }

    fn validate(&self) -> Result<(), EngineError> {
        if self.budget == 0 {
            return Err(EngineError::ZeroBudget);
        }
        if self.checkpoint_interval == 0 {
            return Err(EngineError::ZeroCheckpoint);
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(EngineError::InvalidLambda(self.lambda));
        }
        Ok(())
    }
}

/// Short SHA-256 digest of a value's JSON form.
pub fn fingerprint_of<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config serializes");
    hex::encode(&Sha256::digest(&json)[..8])
}

/// Validation data drives rewards; test data is reporting only.
#[derive(Debug, Clone)]
pub struct EvalSets {
    pub validation: Dataset,
    pub test: Option<Dataset>,
}

impl EvalSets {
    pub fn new(validation: Dataset, test: Option<Dataset>) -> Self {
        Self { validation, test }
    }

    fn validate(&self) -> Result<(), EngineError> {
        let y = &self.validation.y;
        if y.is_empty() {
            return Err(EngineError::Validation("empty".into()));
        }
        if y.iter().all(|v| *v == y[0]) {
            return Err(EngineError::Validation("labels are constant".into()));
        }
        Ok(())
    }
}

/// Samples revealed by one run, in reveal order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    pub rows: Vec<(Vec<f64>, f64)>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_dataset(&self, dim: usize) -> Dataset {
        let x = nalgebra::DMatrix::from_fn(self.rows.len(), dim, |i, j| self.rows[i].0[j]);
        let y = nalgebra::DVector::from_iterator(self.rows.len(), self.rows.iter().map(|r| r.1));
        Dataset::new(x, y)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub ledger: RunLedger,
    /// Final posteriors; empty for the baselines.
    pub arms: Vec<ArmState>,
    pub arm_labels: Vec<String>,
    pub training: TrainingSet,
    pub model: Option<RidgeModel>,
}

impl RunOutcome {
    pub fn summary(&self) -> LedgerSummary {
        self.ledger.summary(&self.arms, &self.arm_labels)
    }
}

/// Reward for a new validation score against a reference score. The
/// reference `-inf` stands for "no model yet". Non-finite scores never earn a
/// reward and leave the reference untouched.
pub fn compute_reward(prev_best: f64, new_score: f64) -> (Reward, f64) {
    if new_score.is_finite() && new_score > prev_best {
        (Reward::Success, new_score)
    } else {
        (Reward::Failure, prev_best)
    }
}

/// r² on the test set. Pure; selection state is not involved.
pub fn evaluate_test(model: &RidgeModel, test: &Dataset) -> Result<f64, LearnerError> {
    score(model, test)
}

struct Pick {
    id: u64,
    arm: Option<usize>,
    cluster: Option<String>,
}

enum Selector<'a> {
    Thompson {
        cset: &'a mut ClusterSet,
        arms: Vec<ArmState>,
    },
    Uniform {
        cset: ClusterSet,
    },
    LabelPrior {
        /// Partition 0: one cluster with everything. Partition 1: the prior bins.
        cset: ClusterSet,
        weights: Vec<f64>,
    },
}

impl Selector<'_> {
    fn cset(&self) -> &ClusterSet {
        match self {
            Selector::Thompson { cset, .. } => cset,
            Selector::Uniform { cset } | Selector::LabelPrior { cset, .. } => cset,
        }
    }

    fn pick<R: Rng>(&mut self, arms_rng: &mut R, draw_rng: &mut R, warnings: &mut Vec<String>, t: usize) -> Result<Option<Pick>, EngineError> {
        match self {
            Selector::Thompson { cset, arms } => {
                let j = match bandit::select_arm(arms, arms_rng) {
                    Ok(j) => j,
                    Err(BanditError::AllExhausted) => return Ok(None),
                    Err(e) => return Err(e.into()),
                };
                let c = cset.cluster(j);
                Ok(Some(Pick {
                    id: c.draw_uniform(draw_rng)?,
                    arm: Some(j),
                    cluster: Some(c.label.to_string()),
                }))
            }
            Selector::Uniform { cset } => {
                let all = cset.cluster(0);
                if all.is_exhausted() {
                    return Ok(None);
                }
                Ok(Some(Pick {
                    id: all.draw_uniform(draw_rng)?,
                    arm: None,
                    cluster: None,
                }))
            }
            Selector::LabelPrior { cset, weights } => {
                if cset.cluster(0).is_exhausted() {
                    return Ok(None);
                }
                let live: Vec<(usize, f64)> = weights
                    .iter()
                    .enumerate()
                    .filter(|&(b, &w)| w > 0.0 && !cset.cluster(b + 1).is_exhausted())
                    .map(|(b, &w)| (b + 1, w))
                    .collect();
                if live.is_empty() {
                    // Bins never refill, so this holds for the rest of the run.
                    if !warnings.iter().any(|w| w.contains("no weighted bin")) {
                        warnings.push(format!("t={t}: no weighted bin has samples left; drawing uniformly from here on"));
                    }
                    return Ok(Some(Pick {
                        id: cset.cluster(0).draw_uniform(draw_rng)?,
                        arm: None,
                        cluster: None,
                    }));
                }
                let total: f64 = live.iter().map(|(_, w)| w).sum();
                let mut u = arms_rng.random::<f64>() * total;
                let mut chosen = live[live.len() - 1].0;
                for &(pos, w) in &live {
                    if u < w {
                        chosen = pos;
                        break;
                    }
                    u -= w;
                }
                let c = cset.cluster(chosen);
                Ok(Some(Pick {
                    id: c.draw_uniform(draw_rng)?,
                    arm: None,
                    cluster: Some(c.label.to_string()),
                }))
            }
        }
    }

    fn consume(&mut self, id: u64) -> Result<(), EngineError> {
        match self {
            Selector::Thompson { cset, arms } => {
                cset.remove_sample(id)?;
                for (arm, c) in arms.iter_mut().zip(cset.clusters()) {
                    arm.exhausted = c.is_exhausted();
                }
            }
            Selector::Uniform { cset } | Selector::LabelPrior { cset, .. } => cset.remove_sample(id)?,
        }
        Ok(())
    }

    fn feedback(&mut self, arm: Option<usize>, reward: Reward) {
        if let (Selector::Thompson { arms, .. }, Some(j)) = (self, arm) {
            arms[j].update(reward);
        }
    }
}

fn check_cluster_set(pool: &SourcePool, cset: &ClusterSet) -> Result<(), EngineError> {
    for c in cset.clusters() {
        for id in c.members() {
            match pool.is_revealed(id) {
                Ok(false) => {}
                _ => return Err(EngineError::ForeignCluster(id)),
            }
        }
    }
    Ok(())
}

fn run_loop(
    policy: &str,
    pool: &mut SourcePool,
    mut selector: Selector<'_>,
    evals: &EvalSets,
    config: &EngineConfig,
) -> Result<RunOutcome, EngineError> {
    config.validate()?;
    evals.validate()?;
    let streams = SeedStreams::new(config.seed);
    let mut arms_rng = streams.stream(stream::ARMS);
    let mut draw_rng = streams.stream(stream::DRAW);

    let mut ledger = RunLedger::new(policy, config.seed, config.fingerprint());
    let mut training = TrainingSet::default();
    let mut model = None;
    let mut reference = f64::NEG_INFINITY;
    let dim = pool.feature_dim();

    for t in 1..=config.budget {
        let Some(pick) = selector.pick(&mut arms_rng, &mut draw_rng, &mut ledger.warnings, t)? else {
            ledger.stop = StopReason::Exhausted;
            break;
        };
        let (x, y) = pool.reveal(pick.id)?;
        training.rows.push((x, y));
        selector.consume(pick.id)?;

        let train = training.to_dataset(dim);
        let fitted = fit_ridge(&train.x, &train.y, config.lambda);
        let val_r2 = match &fitted {
            Ok(m) => score(m, &evals.validation).ok().filter(|v| v.is_finite()),
            Err(_) => None,
        };
        if val_r2.is_none() {
            ledger.warnings.push(format!("t={t}: degenerate validation score, reward -1"));
        }
        let new_score = val_r2.unwrap_or(f64::NAN);
        let (reward, next_ref) = compute_reward(reference, new_score);
        reference = match config.reward_baseline {
            RewardBaseline::Best => next_ref,
            RewardBaseline::Previous => val_r2.unwrap_or(f64::NEG_INFINITY),
        };
        if let Some(v) = val_r2 {
            ledger.best_validation = ledger.best_validation.max(v);
        }
        selector.feedback(pick.arm, reward);

        let last = t == config.budget || selector.cset().is_exhausted();
        let test_r2 = match (&evals.test, &fitted) {
            (Some(test), Ok(m)) if t % config.checkpoint_interval == 0 || last => {
                evaluate_test(m, test).ok().filter(|v| v.is_finite())
            }
            _ => None,
        };
        ledger.steps.push(StepRecord {
            t,
            arm: pick.arm,
            cluster: pick.cluster,
            sample_id: pick.id,
            reward,
            val_r2,
            test_r2,
        });
        model = fitted.ok();
        if last && t < config.budget {
            ledger.stop = StopReason::Exhausted;
            break;
        }
    }

    let (arms, arm_labels) = match selector {
        Selector::Thompson { cset, arms } => {
            let labels = cset.clusters().iter().map(|c| c.label.to_string()).collect();
            (arms, labels)
        }
        _ => (Vec::new(), Vec::new()),
    };
    Ok(RunOutcome {
        ledger,
        arms,
        arm_labels,
        training,
        model,
    })
}

/// Thompson-sampling selection over the clusters of `cset`, which must be
/// built over `pool`'s unrevealed samples. `cset` is consumed as samples are
/// revealed.
pub fn run_mabs(
    pool: &mut SourcePool,
    cset: &mut ClusterSet,
    evals: &EvalSets,
    config: &EngineConfig,
) -> Result<RunOutcome, EngineError> {
    run_mabs_named("mabs", pool, cset, evals, config)
}

pub fn run_mabs_named(
    policy: &str,
    pool: &mut SourcePool,
    cset: &mut ClusterSet,
    evals: &EvalSets,
    config: &EngineConfig,
) -> Result<RunOutcome, EngineError> {
    check_cluster_set(pool, cset)?;
    let arms = cset
        .clusters()
        .iter()
        .map(|c| ArmState {
            exhausted: c.is_exhausted(),
            ..ArmState::default()
        })
        .collect();
    run_loop(policy, pool, Selector::Thompson { cset, arms }, evals, config)
}

/// Uniform selection over every unrevealed sample.
pub fn run_random(pool: &mut SourcePool, evals: &EvalSets, config: &EngineConfig) -> Result<RunOutcome, EngineError> {
    let cset = ClusterSet::single(pool, "pool");
    run_loop("random", pool, Selector::Uniform { cset }, evals, config)
}

/// Selection that follows the histogram of `test_labels` (`bins` equal-width
/// bins) through the metadata column `label_column`: a bin is chosen with
/// probability proportional to its test count among bins that still hold
/// samples, then a member is drawn uniformly.
pub fn run_label_prior(
    pool: &mut SourcePool,
    evals: &EvalSets,
    test_labels: &[f64],
    bins: usize,
    label_column: &str,
    config: &EngineConfig,
) -> Result<RunOutcome, EngineError> {
    if test_labels.is_empty() || bins == 0 {
        return Err(EngineError::EmptyPrior);
    }
    let j = pool.column_index(label_column)?;
    let lo = test_labels.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = test_labels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let bin_of = |v: f64| -> Option<usize> {
        if !(lo..=hi).contains(&v) {
            return None;
        }
        if width == 0.0 {
            return Some(0);
        }
        Some((((v - lo) / width).floor() as usize).min(bins - 1))
    };

    let mut weights = vec![0.0; bins];
    for &y in test_labels {
        if let Some(b) = bin_of(y) {
            weights[b] += 1.0;
        }
    }

    let unrevealed: Vec<u64> = pool.samples().iter().filter(|s| !s.is_revealed()).map(|s| s.id()).collect();
    let mut members: Vec<Vec<u64>> = vec![Vec::new(); bins + 1];
    for &id in &unrevealed {
        let b = bin_of(pool.meta(id)?[j]).unwrap_or(bins);
        members[b].push(id);
    }
    let prior_bins: Vec<Cluster> = members
        .into_iter()
        .enumerate()
        .map(|(b, ids)| {
            let value = if b == bins {
                "outside".to_string()
            } else {
                let right = if b + 1 == bins { hi } else { lo + width * (b + 1) as f64 };
                format!("[{},{}]", lo + width * b as f64, right)
            };
            Cluster::new(
                ClusterLabel {
                    column: label_column.to_string(),
                    bin: b,
                    value,
                },
                ids,
            )
        })
        .collect();
    let everything = Cluster::new(
        ClusterLabel {
            column: "pool".into(),
            bin: 0,
            value: "all".into(),
        },
        unrevealed,
    );
    let cset = ClusterSet::from_partitions(vec![
        ("pool".to_string(), vec![everything]),
        (label_column.to_string(), prior_bins),
    ]);
    run_loop("label_prior", pool, Selector::LabelPrior { cset, weights }, evals, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{build_cluster_set, PartitionSpec};
    use crate::pool::{generate_synthetic, HiddenSample, MetaColumn, SyntheticConfig};

    fn setup(seed: u64) -> (SourcePool, EvalSets) {
        let cfg = SyntheticConfig {
            feature_dim: 6,
            ..SyntheticConfig::uniform(3, 30, [20.0, 80.0], 0.1)
        };
        let pool = generate_synthetic(&cfg, seed).unwrap();
        let ids: Vec<u64> = pool.ids().collect();
        let mut side = pool.subset(&ids[..20]).unwrap();
        let validation = side.reveal_dataset(&ids[..10]).unwrap();
        let test = side.reveal_dataset(&ids[10..20]).unwrap();
        let hidden = pool.subset(&ids[20..]).unwrap();
        (hidden, EvalSets::new(validation, Some(test)))
    }

    #[test]
    fn reward_examples() {
        assert_eq!(compute_reward(0.50, 0.62), (Reward::Success, 0.62));
        assert_eq!(compute_reward(0.50, 0.50), (Reward::Failure, 0.50));
        assert_eq!(compute_reward(f64::NEG_INFINITY, -0.3), (Reward::Success, -0.3));
        assert_eq!(compute_reward(0.2, f64::NAN), (Reward::Failure, 0.2));
    }

    #[test]
    fn full_budget_reveals_everything() {
        let (mut pool, evals) = setup(1);
        let n = pool.len();
        let mut cset = build_cluster_set(&pool, &[PartitionSpec::new("dataset")]).unwrap();
        let out = run_mabs(&mut pool, &mut cset, &evals, &EngineConfig::new(n, 1.0, 3)).unwrap();
        assert_eq!(out.ledger.len(), n);
        assert_eq!(pool.reveal_count(), n);
        assert_eq!(out.ledger.stop, StopReason::Budget);
        audit_run(&out, &pool, RewardBaseline::Best).unwrap();
    }

    #[test]
    fn oversized_budget_stops_cleanly() {
        let (mut pool, evals) = setup(2);
        let n = pool.len();
        let mut cset = build_cluster_set(&pool, &[PartitionSpec::new("sex")]).unwrap();
        let out = run_mabs(&mut pool, &mut cset, &evals, &EngineConfig::new(n + 25, 1.0, 3)).unwrap();
        assert_eq!(out.ledger.len(), n);
        assert_eq!(out.ledger.stop, StopReason::Exhausted);
        assert!(out.arms.iter().all(|a| a.exhausted));
        let (mut pool, _) = setup(2);
        let out = run_random(&mut pool, &evals, &EngineConfig::new(n + 1, 1.0, 3)).unwrap();
        assert_eq!(out.ledger.stop, StopReason::Exhausted);
        assert_eq!(out.ledger.len(), n);
    }

    #[test]
    fn single_cluster_matches_random() {
        let (pool, evals) = setup(3);
        let schema = vec![MetaColumn::categorical("site")];
        let samples: Vec<HiddenSample> = pool
            .samples()
            .iter()
            .map(|s| {
                let mut p = pool.subset(&[s.id()]).unwrap();
                let (x, y) = p.reveal(s.id()).unwrap();
                HiddenSample::new(s.id(), vec![0.0], x, y)
            })
            .collect();
        let one_site = SourcePool::new(schema, samples).unwrap();
        let config = EngineConfig::new(40, 1.0, 99);

        let mut a = one_site.clone();
        let mut cset = build_cluster_set(&a, &[PartitionSpec::new("site")]).unwrap();
        let mabs = run_mabs(&mut a, &mut cset, &evals, &config).unwrap();
        let mut b = one_site.clone();
        let random = run_random(&mut b, &evals, &config).unwrap();
        let ids = |o: &RunOutcome| o.ledger.steps.iter().map(|s| s.sample_id).collect::<Vec<_>>();
        assert_eq!(ids(&mabs), ids(&random));
    }

    #[test]
    fn random_is_deterministic_and_a_permutation() {
        let (pool, evals) = setup(4);
        let config = EngineConfig::new(1000, 1.0, 5);
        let mut a = pool.clone();
        let mut b = pool.clone();
        let ra = run_random(&mut a, &evals, &config).unwrap();
        let rb = run_random(&mut b, &evals, &config).unwrap();
        assert_eq!(ra.ledger, rb.ledger);
        let mut ids: Vec<u64> = ra.ledger.steps.iter().map(|s| s.sample_id).collect();
        ids.sort_unstable();
        assert_eq!(ids, pool.ids().collect::<Vec<_>>());
    }

    #[test]
    fn label_prior_respects_zero_weight_bins() {
        let (pool, evals) = setup(5);
        let age = pool.column_index("age").unwrap();
        let young: Vec<u64> = pool.samples().iter().filter(|s| s.meta()[age] < 50.0).map(|s| s.id()).collect();
        let test_labels: Vec<f64> = (0..20).map(|k| 20.0 + k as f64 * 1.5).collect();
        let config = EngineConfig::new(pool.len(), 1.0, 6);
        let mut p = pool.clone();
        let out = run_label_prior(&mut p, &evals, &test_labels, 4, "age", &config).unwrap();
        let eligible: Vec<u64> = pool
            .samples()
            .iter()
            .filter(|s| (20.0..=48.5).contains(&s.meta()[age]))
            .map(|s| s.id())
            .collect();
        assert!(!eligible.is_empty() && eligible.len() <= young.len());
        let head: Vec<u64> = out.ledger.steps[..eligible.len()].iter().map(|s| s.sample_id).collect();
        assert!(head.iter().all(|id| eligible.contains(id)));
        assert!(!out.ledger.warnings.is_empty());
        assert_eq!(out.ledger.len(), pool.len());

        let mut q = pool.clone();
        let again = run_label_prior(&mut q, &evals, &test_labels, 4, "age", &config).unwrap();
        assert_eq!(out.ledger, again.ledger);
    }

    #[test]
    fn evaluate_test_examples() {
        let (mut pool, evals) = setup(6);
        let ids: Vec<u64> = pool.ids().take(30).collect();
        let train = pool.reveal_dataset(&ids).unwrap();
        let model = fit_ridge(&train.x, &train.y, 0.0).unwrap();
        let test = evals.test.as_ref().unwrap();
        let exact = Dataset::new(test.x.clone(), model.predict(&test.x).unwrap());
        assert!((evaluate_test(&model, &exact).unwrap() - 1.0).abs() < 1e-12);

        let mean_model = RidgeModel {
            weights: vec![0.0; 6],
            intercept: test.y.mean(),
            lambda: 1.0,
            feature_means: vec![0.0; 6],
            feature_scales: vec![1.0; 6],
        };
        assert!(evaluate_test(&mean_model, test).unwrap().abs() < 1e-12);
    }

    #[test]
    fn test_scoring_does_not_leak() {
        let (pool, evals) = setup(7);
        let specs = [PartitionSpec::new("dataset"), PartitionSpec::new("sex")];
        let config = EngineConfig::new(50, 1.0, 8);
        let mut a = pool.clone();
        let mut ca = build_cluster_set(&a, &specs).unwrap();
        let with = run_mabs(&mut a, &mut ca, &evals, &config).unwrap();
        let mut b = pool.clone();
        let mut cb = build_cluster_set(&b, &specs).unwrap();
        let blind = EvalSets::new(evals.validation.clone(), None);
        let without = run_mabs(&mut b, &mut cb, &blind, &config).unwrap();
        check_test_isolation(&with, &without).unwrap();
        assert!(without.ledger.steps.iter().all(|s| s.test_r2.is_none()));
    }

    #[test]
    fn checkpoints_thin_test_scores() {
        let (mut pool, evals) = setup(8);
        let config = EngineConfig {
            checkpoint_interval: 7,
            ..EngineConfig::new(30, 1.0, 1)
        };
        let out = run_random(&mut pool, &evals, &config).unwrap();
        for s in &out.ledger.steps {
            assert_eq!(s.test_r2.is_some(), s.t % 7 == 0 || s.t == 30, "t={}", s.t);
        }
    }

    #[test]
    fn bad_configs_rejected() {
        let (mut pool, evals) = setup(9);
        assert!(matches!(run_random(&mut pool, &evals, &EngineConfig::new(0, 1.0, 1)), Err(EngineError::ZeroBudget)));
        assert!(run_random(&mut pool, &evals, &EngineConfig::new(3, -1.0, 1)).is_err());
        let flat = EvalSets::new(Dataset::from_rows(&[vec![0.0; 6], vec![1.0; 6]], vec![3.0, 3.0], 6), None);
        assert!(matches!(run_random(&mut pool, &flat, &EngineConfig::new(3, 1.0, 1)), Err(EngineError::Validation(_))));
        assert_eq!(pool.reveal_count(), 0);
    }

    #[test]
    fn previous_step_baseline() {
        let (mut pool, evals) = setup(10);
        let config = EngineConfig {
            reward_baseline: RewardBaseline::Previous,
            ..EngineConfig::new(40, 1.0, 2)
        };
        let out = run_random(&mut pool, &evals, &config).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for s in &out.ledger.steps {
            let v = s.val_r2.unwrap_or(f64::NAN);
            assert_eq!(s.reward == Reward::Success, v > prev);
            prev = s.val_r2.unwrap_or(f64::NEG_INFINITY);
        }
        audit_run(&out, &pool, RewardBaseline::Previous).unwrap();
    }
}
