//! Validation / test / hidden splits.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::engine::EvalSets;
use crate::pool::SourcePool;
use crate::rng::{stream, SeedStreams};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Random three-way split over the whole pool.
    #[default]
    Mixed,
    /// Validation and test come from one dataset, the hidden pool from the rest.
    TargetDataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    #[serde(default)]
    pub mode: SplitMode,
    #[serde(default = "default_validation")]
    pub validation_fraction: f64,
    #[serde(default = "default_test")]
    pub test_fraction: f64,
    #[serde(default = "default_hidden")]
    pub hidden_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// Share of the target dataset used for validation in target mode.
    #[serde(default = "default_target_validation")]
    pub target_validation_fraction: f64,
}

fn default_validation() -> f64 {
    0.02
}
fn default_test() -> f64 {
    0.48
}
fn default_hidden() -> f64 {
    0.50
}
fn default_target_validation() -> f64 {
    0.10
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            mode: SplitMode::Mixed,
            validation_fraction: default_validation(),
            test_fraction: default_test(),
            hidden_fraction: default_hidden(),
            target: None,
            target_validation_fraction: default_target_validation(),
        }
    }
}

impl SplitSpec {
    pub fn target(name: impl Into<String>) -> Self {
        Self {
            mode: SplitMode::TargetDataset,
            target: Some(name.into()),
            ..Self::default()
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self.mode {
            SplitMode::Mixed => {
                let parts = [
                    ("validation_fraction", self.validation_fraction),
                    ("test_fraction", self.test_fraction),
                    ("hidden_fraction", self.hidden_fraction),
                ];
                for (name, f) in parts {
                    if !(f.is_finite() && f > 0.0) {
                        out.push(format!("split.{name} must be positive"));
                    }
                }
                let sum: f64 = parts.iter().map(|p| p.1).sum();
                if (sum - 1.0).abs() > 1e-9 {
                    out.push(format!("split fractions sum to {sum}, expected 1"));
                }
                if self.target.is_some() {
                    out.push("split.target is only valid in target_dataset mode".into());
                }
            }
            SplitMode::TargetDataset => {
                if self.target.is_none() {
                    out.push("split.target is required in target_dataset mode".into());
                }
                let f = self.target_validation_fraction;
                if !(f > 0.0 && f < 1.0) {
                    out.push("split.target_validation_fraction must lie in (0, 1)".into());
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(problems))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIds {
    pub validation: Vec<u64>,
    pub test: Vec<u64>,
    pub hidden: Vec<u64>,
}

fn in_pool_order(pool: &SourcePool, ids: &mut [u64]) {
    let pos: HashMap<u64, usize> = pool.ids().enumerate().map(|(i, id)| (id, i)).collect();
    ids.sort_by_key(|id| pos[id]);
}

/// Uniform random three-way split. Part sizes are `round(N * fraction)` for
/// validation and test; the hidden part takes the remainder.
pub fn split_mixed(pool: &SourcePool, spec: &SplitSpec, seed: u64) -> Result<SplitIds, HarnessError> {
    if spec.mode != SplitMode::Mixed {
        return Err(HarnessError::Config(vec!["split_mixed needs mixed mode".into()]));
    }
    spec.validate()?;
    let n = pool.len();
    let n_val = (n as f64 * spec.validation_fraction).round() as usize;
    let n_test = (n as f64 * spec.test_fraction).round() as usize;
    if n_val == 0 || n_test == 0 || n_val + n_test >= n {
        return Err(HarnessError::EmptySplit(format!(
            "{n} samples cannot be split into non-empty parts ({n_val} validation, {n_test} test)"
        )));
    }
    let mut ids: Vec<u64> = pool.ids().collect();
    ids.shuffle(&mut SeedStreams::new(seed).stream(stream::SPLIT));
    let mut validation = ids[..n_val].to_vec();
    let mut test = ids[n_val..n_val + n_test].to_vec();
    let mut hidden = ids[n_val + n_test..].to_vec();
    for part in [&mut validation, &mut test, &mut hidden] {
        in_pool_order(pool, part);
    }
    Ok(SplitIds { validation, test, hidden })
}

/// Validation and test from the target dataset; hidden = every other dataset.
pub fn split_target(
    pool: &SourcePool,
    dataset_column: &str,
    target: &str,
    validation_fraction: f64,
    seed: u64,
) -> Result<SplitIds, HarnessError> {
    let j = pool.column_index(dataset_column)?;
    let column = &pool.schema()[j];
    let mut present: Vec<String> = Vec::new();
    let mut in_target = Vec::new();
    let mut hidden = Vec::new();
    for s in pool.samples() {
        let name = column.display_value(s.meta()[j]);
        if !present.contains(&name) {
            present.push(name.clone());
        }
        if name == target {
            in_target.push(s.id());
        } else {
            hidden.push(s.id());
        }
    }
    if in_target.is_empty() {
        return Err(HarnessError::UnknownTarget(target.to_string()));
    }
    if present.len() < 2 {
        return Err(HarnessError::EmptySplit("target mode needs at least two datasets".into()));
    }
    in_target.shuffle(&mut SeedStreams::new(seed).stream(stream::SPLIT));
    let n_val = ((in_target.len() as f64 * validation_fraction).round() as usize).max(1);
    if n_val >= in_target.len() {
        return Err(HarnessError::EmptySplit(format!(
            "target `{target}` has {} samples, leaving no test set",
            in_target.len()
        )));
    }
    let mut validation = in_target[..n_val].to_vec();
    let mut test = in_target[n_val..].to_vec();
    in_pool_order(pool, &mut validation);
    in_pool_order(pool, &mut test);
    Ok(SplitIds { validation, test, hidden })
}

/// Hidden pool plus revealed evaluation sets for one split.
#[derive(Debug, Clone)]
pub struct PreparedSplit {
    pub hidden: SourcePool,
    pub evals: EvalSets,
    pub test_labels: Vec<f64>,
}

/// Builds the unrevealed hidden pool and reveals the validation and test
/// samples on a side copy, so the hidden pool's reveal count starts at zero.
pub fn prepare_split(pool: &SourcePool, ids: &SplitIds) -> Result<PreparedSplit, HarnessError> {
    let mut side_ids = ids.validation.clone();
    side_ids.extend(&ids.test);
    let mut side = pool.subset(&side_ids)?;
    let validation = side.reveal_dataset(&ids.validation)?;
    let test = side.reveal_dataset(&ids.test)?;
    let test_labels = test.y.iter().copied().collect();
    Ok(PreparedSplit {
        hidden: pool.subset(&ids.hidden)?,
        evals: EvalSets::new(validation, Some(test)),
        test_labels,
    })
}
