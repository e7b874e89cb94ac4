//! Post-run bookkeeping checks.

use std::collections::HashSet;

use thiserror::Error;

use super::{RewardBaseline, RunOutcome};
use crate::bandit::Reward;
use crate::pool::SourcePool;

#[derive(Debug, Error, PartialEq)]
#[error("{0}")]
pub struct AuditError(pub String);

fn fail<T>(msg: String) -> Result<T, AuditError> {
    Err(AuditError(msg))
}

/// Checks a finished run against the pool it consumed:
///
/// - each arm's `alpha - 1` / `beta - 1` equal the successes / failures the
///   ledger attributes to it;
/// - no sample id is revealed twice;
/// - the pool's reveal count equals the number of ledger steps and the
///   training set size;
/// - the best validation score is the running maximum, and (for the
///   best-so-far baseline) rewards are +1 exactly where it strictly rose.
pub fn audit_run(outcome: &RunOutcome, pool: &SourcePool, baseline: RewardBaseline) -> Result<(), AuditError> {
    let steps = &outcome.ledger.steps;

    for (i, arm) in outcome.arms.iter().enumerate() {
        let (mut wins, mut losses) = (0.0, 0.0);
        for s in steps.iter().filter(|s| s.arm == Some(i)) {
            match s.reward {
                Reward::Success => wins += 1.0,
                Reward::Failure => losses += 1.0,
            }
        }
        if arm.alpha - 1.0 != wins || arm.beta - 1.0 != losses {
            return fail(format!(
                "arm {i}: posterior ({}, {}) disagrees with ledger ({wins} wins, {losses} losses)",
                arm.alpha, arm.beta
            ));
        }
    }
    if outcome.arms.is_empty() && steps.iter().any(|s| s.arm.is_some()) {
        return fail("ledger attributes rewards to arms that do not exist".into());
    }

    let mut seen = HashSet::with_capacity(steps.len());
    for s in steps {
        if !seen.insert(s.sample_id) {
            return fail(format!("sample {} revealed twice", s.sample_id));
        }
        match pool.is_revealed(s.sample_id) {
            Ok(true) => {}
            _ => return fail(format!("sample {} is in the ledger but not revealed in the pool", s.sample_id)),
        }
    }

    if pool.reveal_count() != steps.len() {
        return fail(format!("pool reveal count {} != {} ledger steps", pool.reveal_count(), steps.len()));
    }
    if outcome.training.len() != steps.len() {
        return fail(format!("training set has {} rows for {} steps", outcome.training.len(), steps.len()));
    }

    let mut best = f64::NEG_INFINITY;
    for (k, s) in steps.iter().enumerate() {
        if s.t != k + 1 {
            return fail(format!("step {k} carries t = {}", s.t));
        }
        let v = s.val_r2.unwrap_or(f64::NEG_INFINITY);
        if baseline == RewardBaseline::Best && (s.reward == Reward::Success) != (v > best) {
            return fail(format!("t={}: reward {:?} inconsistent with score {v} vs best {best}", s.t, s.reward));
        }
        best = best.max(v);
    }
    if best != outcome.ledger.best_validation {
        return fail(format!("best_validation {} != running max {best}", outcome.ledger.best_validation));
    }
    Ok(())
}

/// Compares a run that scored the test set with an otherwise identical run
/// that did not. Selections, rewards, validation scores and posteriors must
/// agree exactly.
pub fn check_test_isolation(with_test: &RunOutcome, without_test: &RunOutcome) -> Result<(), AuditError> {
    let a = &with_test.ledger;
    let b = &without_test.ledger;
    if a.steps.len() != b.steps.len() {
        return fail("runs differ in length".into());
    }
    for (x, y) in a.steps.iter().zip(&b.steps) {
        if (x.sample_id, x.arm, x.reward) != (y.sample_id, y.arm, y.reward) || x.val_r2 != y.val_r2 {
            return fail(format!("runs diverge at t={}", x.t));
        }
    }
    if a.best_validation != b.best_validation {
        return fail("best validation differs".into());
    }
    if with_test.arms != without_test.arms {
        return fail("posteriors differ".into());
    }
    Ok(())
}
