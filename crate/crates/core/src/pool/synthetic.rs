//! Synthetic pools with controllable cluster usefulness.
//!
//! All pseudo-datasets share one linear map from features to age. Each sample
//! draws a latent age uniformly from its dataset's `age_range` and its
//! features encode that age exactly along the map's direction. The recorded
//! age (the label, and the `age` metadata rounded to whole years) adds two
//! dataset-specific terms, both in units of `age_scale`:
//!
//! - `distortion` tilts the map along a direction orthogonal to it, fixed per
//!   dataset;
//! - `noise` adds independent Gaussian label noise.
//!
//! Low values make a dataset's samples informative for the shared map; high
//! values make them harmful.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{HiddenSample, MetaColumn, PoolError, SourcePool};
use crate::rng::{stream, SeedStreams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PseudoDataset {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub samples: usize,
    /// Ages are drawn uniformly from `[lo, hi]`.
    pub age_range: [f64; 2],
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub distortion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub datasets: Vec<PseudoDataset>,
    #[serde(default = "default_feature_dim")]
    pub feature_dim: usize,
    #[serde(default = "default_diagnosis_levels")]
    pub diagnosis_levels: usize,
    #[serde(default = "default_age_center")]
    pub age_center: f64,
    #[serde(default = "default_age_scale")]
    pub age_scale: f64,
}

fn default_feature_dim() -> usize {
    32
}
fn default_diagnosis_levels() -> usize {
    3
}
fn default_age_center() -> f64 {
    50.0
}
fn default_age_scale() -> f64 {
    15.0
}

impl SyntheticConfig {
    /// `count` identical pseudo-datasets.
    pub fn uniform(count: usize, samples: usize, age_range: [f64; 2], noise: f64) -> Self {
        Self {
            datasets: (0..count)
                .map(|_| PseudoDataset {
                    name: None,
                    samples,
                    age_range,
                    noise,
                    distortion: 0.0,
                })
                .collect(),
            feature_dim: default_feature_dim(),
            diagnosis_levels: default_diagnosis_levels(),
            age_center: default_age_center(),
            age_scale: default_age_scale(),
        }
    }

    pub fn total_samples(&self) -> usize {
        self.datasets.iter().map(|d| d.samples).sum()
    }

    pub fn validate(&self) -> Result<(), PoolError> {
        let mut problems = Vec::new();
        if self.datasets.is_empty() {
            problems.push("at least one dataset is required".to_string());
        }
        if self.feature_dim == 0 {
            problems.push("feature_dim must be positive".into());
        }
        if self.diagnosis_levels == 0 {
            problems.push("diagnosis_levels must be positive".into());
        }
        if !(self.age_scale.is_finite() && self.age_scale > 0.0) {
            problems.push("age_scale must be positive".into());
        }
        if !self.age_center.is_finite() {
            problems.push("age_center must be finite".into());
        }
        for (i, d) in self.datasets.iter().enumerate() {
            if d.samples == 0 {
                problems.push(format!("dataset {i}: samples must be positive"));
            }
            let [lo, hi] = d.age_range;
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                problems.push(format!("dataset {i}: age_range must satisfy lo <= hi"));
            }
            if !(d.noise.is_finite() && d.noise >= 0.0) {
                problems.push(format!("dataset {i}: noise must be >= 0"));
            }
            if !(d.distortion.is_finite() && d.distortion >= 0.0) {
                problems.push(format!("dataset {i}: distortion must be >= 0"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(PoolError::Config(problems.join("; ")))
        }
    }
}

fn normal_vec<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Generates a pool with metadata columns `dataset`, `sex`, `diagnosis`
/// (categorical) and `age` (numeric, whole years). Labels are real-valued ages.
/// Sex and diagnosis carry no signal.
pub fn generate_synthetic(config: &SyntheticConfig, seed: u64) -> Result<SourcePool, PoolError> {
    config.validate()?;
    let mut rng = SeedStreams::new(seed).stream(stream::GENERATOR);
    let m = config.feature_dim;

    let mut truth = normal_vec(&mut rng, m);
    normalize(&mut truth);

    let tilts: Vec<Vec<f64>> = config
        .datasets
        .iter()
        .map(|_| {
            let mut v = normal_vec(&mut rng, m);
            let along = dot(&v, &truth);
            v.iter_mut().zip(&truth).for_each(|(x, w)| *x -= along * w);
            normalize(&mut v);
            v
        })
        .collect();

    let dataset_names: Vec<String> = config
        .datasets
        .iter()
        .enumerate()
        .map(|(i, d)| d.name.clone().unwrap_or_else(|| format!("ds{i}")))
        .collect();
    let mut dataset_col = MetaColumn::categorical("dataset");
    dataset_col.categories = dataset_names;
    let mut sex_col = MetaColumn::categorical("sex");
    sex_col.categories = vec!["female".into(), "male".into()];
    let mut dx_col = MetaColumn::categorical("diagnosis");
    dx_col.categories = std::iter::once("control".to_string())
        .chain((1..config.diagnosis_levels).map(|k| format!("dx{k}")))
        .collect();
    let schema = vec![dataset_col, sex_col, dx_col, MetaColumn::numeric("age")];

    let mut samples = Vec::with_capacity(config.total_samples());
    let mut next_id = 0u64;
    for (d, (spec, tilt)) in config.datasets.iter().zip(&tilts).enumerate() {
        let [lo, hi] = spec.age_range;
        for _ in 0..spec.samples {
            let age = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            let z = normal_vec(&mut rng, m);
            let eps: f64 = StandardNormal.sample(&mut rng);
            let sex = rng.random_range(0..2usize);
            let dx = rng.random_range(0..config.diagnosis_levels);

            // Features encode the latent age exactly along the shared direction.
            let signal = (age - config.age_center) / config.age_scale;
            let along = dot(&z, &truth);
            let features: Vec<f64> = z
                .iter()
                .zip(&truth)
                .map(|(zi, wi)| zi + (signal - along) * wi)
                .collect();
            let label =
                age + config.age_scale * (spec.distortion * dot(&z, tilt) + spec.noise * eps);

            let meta = vec![d as f64, sex as f64, dx as f64, label.round()];
            samples.push(HiddenSample::new(next_id, meta, features, label));
            next_id += 1;
        }
    }
    SourcePool::new(schema, samples)
}
