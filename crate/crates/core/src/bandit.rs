//! Beta-Bernoulli Thompson sampling over cluster arms.

use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BanditError {
    #[error("Beta parameters must be positive and finite, got ({0}, {1})")]
    InvalidParameters(f64, f64),
    #[error("reward must be +1 or -1, got {0}")]
    InvalidReward(i64),
    #[error("every arm is exhausted")]
    AllExhausted,
}

/// Binary reward of one reveal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Reward {
    Success,
    Failure,
}

impl Reward {
    pub fn value(self) -> i64 {
        match self {
            Reward::Success => 1,
            Reward::Failure => -1,
        }
    }

    pub fn from_value(value: i64) -> Result<Self, BanditError> {
        match value {
            1 => Ok(Reward::Success),
            -1 => Ok(Reward::Failure),
            other => Err(BanditError::InvalidReward(other)),
        }
    }
}

/// Posterior over one arm's success probability. Starts at Beta(1, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    pub alpha: f64,
    pub beta: f64,
    pub exhausted: bool,
}

impl Default for ArmState {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            exhausted: false,
        }
    }
}

impl ArmState {
    pub fn update(&mut self, reward: Reward) {
        match reward {
            Reward::Success => self.alpha += 1.0,
            Reward::Failure => self.beta += 1.0,
        }
    }

    pub fn posterior_mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// Rewards applied so far.
    pub fn pulls(&self) -> u64 {
        (self.alpha + self.beta - 2.0).round() as u64
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // alpha, beta >= 1 by construction.
        beta_variate(self.alpha, self.beta, rng)
    }
}

/// Applies an integer reward, which must be +1 or -1.
pub fn update_arm(arm: &mut ArmState, reward: i64) -> Result<(), BanditError> {
    arm.update(Reward::from_value(reward)?);
    Ok(())
}

pub fn posterior_mean(arm: &ArmState) -> f64 {
    arm.posterior_mean()
}

/// Natural log of a Gamma(shape, 1) variate.
///
/// Marsaglia and Tsang's squeeze method for `shape >= 1`; smaller shapes are
/// boosted through `Gamma(shape + 1) * U^(1/shape)`, kept in log space so the
/// result does not underflow for tiny shapes.
pub fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        let u: f64 = Open01.sample(rng);
        return ln_gamma_variate(shape + 1.0, rng) + u.ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = StandardNormal.sample(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = Open01.sample(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return (d * v).ln();
        }
    }
}

pub fn gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    ln_gamma_variate(shape, rng).exp()
}

fn beta_variate<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    // G1 / (G1 + G2) written as a logistic of the log-ratio.
    let a = ln_gamma_variate(alpha, rng);
    let b = ln_gamma_variate(beta, rng);
    1.0 / (1.0 + (b - a).exp())
}

/// One draw from Beta(alpha, beta).
pub fn sample_beta<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> Result<f64, BanditError> {
    if !(alpha.is_finite() && beta.is_finite() && alpha > 0.0 && beta > 0.0) {
        return Err(BanditError::InvalidParameters(alpha, beta));
    }
    Ok(beta_variate(alpha, beta, rng))
}

/// Thompson selection: one posterior draw per live arm, argmax wins.
pub fn select_arm<R: Rng + ?Sized>(arms: &[ArmState], rng: &mut R) -> Result<usize, BanditError> {
    select_arm_with(arms, rng, |arm, rng| arm.sample(rng))
}

/// [`select_arm`] with a caller-supplied draw. Exact ties are broken
/// uniformly at random.
pub fn select_arm_with<R, F>(arms: &[ArmState], rng: &mut R, mut draw: F) -> Result<usize, BanditError>
where
    R: Rng + ?Sized,
    F: FnMut(&ArmState, &mut R) -> f64,
{
    let mut best = f64::NEG_INFINITY;
    let mut leaders: Vec<usize> = Vec::new();
    for (i, arm) in arms.iter().enumerate() {
        if arm.exhausted {
            continue;
        }
        let v = draw(arm, rng);
        if v > best {
            best = v;
            leaders.clear();
            leaders.push(i);
        } else if v == best {
            leaders.push(i);
        }
    }
    match leaders.len() {
        0 => Err(BanditError::AllExhausted),
        1 => Ok(leaders[0]),
        n => Ok(leaders[rng.random_range(0..n)]),
    }
}
