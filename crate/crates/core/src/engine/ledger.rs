//! Per-run step records and their CSV / JSON forms.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bandit::{ArmState, Reward};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Budget,
    /// Every cluster ran dry before the budget was spent.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based iteration; equals the training-set size after this step.
    pub t: usize,
    pub arm: Option<usize>,
    pub cluster: Option<String>,
    pub sample_id: u64,
    pub reward: Reward,
    /// `None` when the fit or the score was degenerate.
    pub val_r2: Option<f64>,
    pub test_r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLedger {
    pub policy: String,
    pub seed: u64,
    pub config_fingerprint: String,
    pub steps: Vec<StepRecord>,
    /// Running maximum of the validation scores; `-inf` before any score.
    pub best_validation: f64,
    pub stop: StopReason,
    pub warnings: Vec<String>,
}

impl RunLedger {
    pub fn new(policy: impl Into<String>, seed: u64, config_fingerprint: String) -> Self {
        Self {
            policy: policy.into(),
            seed,
            config_fingerprint,
            steps: Vec::new(),
            best_validation: f64::NEG_INFINITY,
            stop: StopReason::Budget,
            warnings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_validation(&self) -> Option<f64> {
        self.steps.last().and_then(|s| s.val_r2)
    }

    pub fn final_test(&self) -> Option<f64> {
        self.steps.iter().rev().find_map(|s| s.test_r2)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["t", "policy", "cluster", "sample_id", "reward", "val_r2", "test_r2"])?;
        for s in &self.steps {
            wtr.write_record([
                s.t.to_string(),
                self.policy.clone(),
                s.cluster.clone().unwrap_or_default(),
                s.sample_id.to_string(),
                s.reward.value().to_string(),
                fmt_opt(s.val_r2),
                fmt_opt(s.test_r2),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn summary(&self, arms: &[ArmState], arm_labels: &[String]) -> LedgerSummary {
        LedgerSummary {
            policy: self.policy.clone(),
            seed: self.seed,
            config_fingerprint: self.config_fingerprint.clone(),
            steps: self.steps.len(),
            stop: self.stop,
            best_validation: self.best_validation.is_finite().then_some(self.best_validation),
            final_validation: self.final_validation(),
            final_test: self.final_test(),
            arms: arm_summaries(arms, arm_labels),
            warnings: self.warnings.clone(),
        }
    }
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub cluster: String,
    pub alpha: f64,
    pub beta: f64,
    pub posterior_mean: f64,
    pub exhausted: bool,
}

pub fn arm_summaries(arms: &[ArmState], labels: &[String]) -> Vec<ArmSummary> {
    arms.iter()
        .zip(labels)
        .map(|(a, l)| ArmSummary {
            cluster: l.clone(),
            alpha: a.alpha,
            beta: a.beta,
            posterior_mean: a.posterior_mean(),
            exhausted: a.exhausted,
        })
        .collect()
}

/// JSON-facing digest of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerSummary {
    pub policy: String,
    pub seed: u64,
    pub config_fingerprint: String,
    pub steps: usize,
    pub stop: StopReason,
    pub best_validation: Option<f64>,
    pub final_validation: Option<f64>,
    pub final_test: Option<f64>,
    pub arms: Vec<ArmSummary>,
    pub warnings: Vec<String>,
}
