//! Bandit-only regret benchmark on Bernoulli arms.
//!
//! Isolates the Thompson sampler from the learner and compares it with
//! epsilon-greedy and UCB1 on the same reward streams.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{mean_sd, HarnessError};
use crate::bandit::{select_arm, ArmState, Reward};
use crate::rng::{stream, SeedStreams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub arms: Vec<f64>,
    pub pulls: usize,
    pub repeats: usize,
    pub seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    0.1
}

impl BenchConfig {
    pub fn new(arms: Vec<f64>, pulls: usize, repeats: usize, seed: u64) -> Self {
        Self {
            arms,
            pulls,
            repeats,
            seed,
            epsilon: default_epsilon(),
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let mut problems = Vec::new();
        if self.arms.is_empty() {
            problems.push("at least one arm is required".to_string());
        }
        for (i, p) in self.arms.iter().enumerate() {
            if !(0.0..=1.0).contains(p) {
                problems.push(format!("arm {i}: probability {p} is outside [0, 1]"));
            }
        }
        if self.pulls == 0 {
            problems.push("pulls must be at least 1".into());
        }
        if self.repeats == 0 {
            problems.push("repeats must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            problems.push("epsilon must lie in [0, 1]".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(problems))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub policy: String,
    /// Cumulative pseudo-regret `sum_t (p_best - p_chosen)`, averaged over repeats.
    pub mean_regret: f64,
    pub sd_regret: f64,
    /// Share of pulls that went to a best arm.
    pub best_arm_rate: f64,
}

trait Player {
    fn choose(&mut self, rng: &mut ChaCha8Rng) -> usize;
    fn observe(&mut self, arm: usize, success: bool);
}

struct Thompson(Vec<ArmState>);

impl Player for Thompson {
    fn choose(&mut self, rng: &mut ChaCha8Rng) -> usize {
        select_arm(&self.0, rng).expect("bench arms never exhaust")
    }
    fn observe(&mut self, arm: usize, success: bool) {
        self.0[arm].update(if success { Reward::Success } else { Reward::Failure });
    }
}

#[derive(Default)]
struct Counts {
    pulls: Vec<f64>,
    wins: Vec<f64>,
}

impl Counts {
    fn new(k: usize) -> Self {
        Self {
            pulls: vec![0.0; k],
            wins: vec![0.0; k],
        }
    }

    fn untried(&self) -> Option<usize> {
        self.pulls.iter().position(|&n| n == 0.0)
    }

    fn argmax(&self, score: impl Fn(usize) -> f64) -> usize {
        (0..self.pulls.len())
            .max_by(|&a, &b| score(a).total_cmp(&score(b)).then(b.cmp(&a)))
            .unwrap_or(0)
    }

    fn record(&mut self, arm: usize, success: bool) {
        self.pulls[arm] += 1.0;
        if success {
            self.wins[arm] += 1.0;
        }
    }
}

struct EpsilonGreedy {
    epsilon: f64,
    counts: Counts,
}

impl Player for EpsilonGreedy {
    fn choose(&mut self, rng: &mut ChaCha8Rng) -> usize {
        if let Some(a) = self.counts.untried() {
            return a;
        }
        if rng.random::<f64>() < self.epsilon {
            return rng.random_range(0..self.counts.pulls.len());
        }
        let c = &self.counts;
        c.argmax(|a| c.wins[a] / c.pulls[a])
    }
    fn observe(&mut self, arm: usize, success: bool) {
        self.counts.record(arm, success);
    }
}

struct Ucb1 {
    counts: Counts,
    t: f64,
}

impl Player for Ucb1 {
    fn choose(&mut self, _rng: &mut ChaCha8Rng) -> usize {
        self.t += 1.0;
        if let Some(a) = self.counts.untried() {
            return a;
        }
        let c = &self.counts;
        let log_t = self.t.ln();
        c.argmax(|a| c.wins[a] / c.pulls[a] + (2.0 * log_t / c.pulls[a]).sqrt())
    }
    fn observe(&mut self, arm: usize, success: bool) {
        self.counts.record(arm, success);
    }
}

/// Plays one policy for `pulls` rounds; returns (regret, best-arm pulls).
fn play(player: &mut dyn Player, probs: &[f64], pulls: usize, streams: SeedStreams) -> (f64, usize) {
    let best = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut decide = streams.stream(stream::ARMS);
    let mut env = streams.stream(stream::BENCH);
    let mut regret = 0.0;
    let mut best_pulls = 0;
    for _ in 0..pulls {
        let a = player.choose(&mut decide);
        let success = env.random::<f64>() < probs[a];
        player.observe(a, success);
        regret += best - probs[a];
        if probs[a] == best {
            best_pulls += 1;
        }
    }
    (regret, best_pulls)
}

/// Mean cumulative regret of Thompson sampling, epsilon-greedy and UCB1.
/// Within one repeat all policies face the same environment stream.
pub fn bandit_bench(config: &BenchConfig) -> Result<Vec<BenchRow>, HarnessError> {
    config.validate()?;
    let k = config.arms.len();
    let names = ["thompson".to_string(), format!("epsilon_greedy({})", config.epsilon), "ucb1".to_string()];
    let root = SeedStreams::new(config.seed);

    let mut rows = Vec::with_capacity(names.len());
    for (which, name) in names.iter().enumerate() {
        let mut regrets = Vec::with_capacity(config.repeats);
        let mut best_pulls = 0usize;
        for r in 0..config.repeats as u64 {
            let mut player: Box<dyn Player> = match which {
                0 => Box::new(Thompson(vec![ArmState::default(); k])),
                1 => Box::new(EpsilonGreedy {
                    epsilon: config.epsilon,
                    counts: Counts::new(k),
                }),
                _ => Box::new(Ucb1 {
                    counts: Counts::new(k),
                    t: 0.0,
                }),
            };
            let (regret, best) = play(player.as_mut(), &config.arms, config.pulls, root.child(r));
            regrets.push(regret);
            best_pulls += best;
        }
        let (mean_regret, sd_regret) = mean_sd(&regrets);
        rows.push(BenchRow {
            policy: name.clone(),
            mean_regret,
            sd_regret,
            best_arm_rate: best_pulls as f64 / (config.pulls * config.repeats) as f64,
        });
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], writer: W) -> Result<(), HarnessError> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["policy", "mean_regret", "sd_regret", "best_arm_rate"])?;
    for r in rows {
        wtr.write_record([
            r.policy.clone(),
            r.mean_regret.to_string(),
            r.sd_regret.to_string(),
            r.best_arm_rate.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
