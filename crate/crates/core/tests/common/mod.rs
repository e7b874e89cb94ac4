#![allow(dead_code)]

use mabsel::pool::{generate_synthetic, PseudoDataset, SourcePool, SyntheticConfig};
use mabsel::SplitSpec;

/// Explicit inverse by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))
            .unwrap();
        aug.swap(col, pivot);
        let p = aug[col][col];
        assert!(p.abs() > 1e-300, "singular matrix");
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for row in 0..n {
            if row != col {
                let f = aug[row][col];
                if f != 0.0 {
                    for k in 0..2 * n {
                        aug[row][k] -= f * aug[col][k];
                    }
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Ridge weights in standardized feature space:
/// w = (Z'Z + lambda I)^-1 Z'(y - mean(y)), Z the z-scored features
/// (population sd, scale 1 for constant columns).
pub fn oracle_ridge(rows: &[Vec<f64>], y: &[f64], lambda: f64) -> (Vec<f64>, f64) {
    let n = rows.len();
    let m = rows[0].len();
    let nf = n as f64;
    let mut z = vec![vec![0.0; m]; n];
    for j in 0..m {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / nf;
        let sd = (rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / nf).sqrt();
        let scale = if sd > 1e-12 * (1.0 + mean.abs()) { sd } else { 1.0 };
        for i in 0..n {
            z[i][j] = (rows[i][j] - mean) / scale;
        }
    }
    let y_mean = y.iter().sum::<f64>() / nf;
    let mut gram = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    for i in 0..n {
        for a in 0..m {
            rhs[a] += z[i][a] * (y[i] - y_mean);
            for b in 0..m {
                gram[a][b] += z[i][a] * z[i][b];
            }
        }
    }
    for (a, row) in gram.iter_mut().enumerate() {
        row[a] += lambda;
    }
    let inv = gauss_jordan_inverse(&gram);
    let w = (0..m).map(|a| (0..m).map(|b| inv[a][b] * rhs[b]).sum()).collect();
    (w, y_mean)
}

pub const HEADLINE_PER_DATASET: usize = 600;

/// Four pseudo-datasets of 600 samples over ages 20 to 80: `clean` with
/// almost noiseless labels and three with label noise of one age scale.
pub fn headline_synthetic() -> SyntheticConfig {
    let mut datasets = vec![PseudoDataset {
        name: Some("clean".into()),
        samples: HEADLINE_PER_DATASET,
        age_range: [20.0, 80.0],
        noise: 0.05,
        distortion: 0.0,
    }];
    for i in 1..=3 {
        datasets.push(PseudoDataset {
            name: Some(format!("noisy{i}")),
            samples: HEADLINE_PER_DATASET,
            age_range: [20.0, 80.0],
            noise: 1.0,
            distortion: 0.0,
        });
    }
    SyntheticConfig {
        datasets,
        ..SyntheticConfig::uniform(0, 0, [0.0, 0.0], 0.0)
    }
}

/// Same shape as the headline pool but every dataset is generated alike, so
/// no metadata column says anything about sample usefulness.
pub fn null_synthetic() -> SyntheticConfig {
    let mut cfg = headline_synthetic();
    for d in &mut cfg.datasets {
        d.noise = 0.5;
    }
    cfg
}

pub const POOL_SEED: u64 = 2024;

pub fn headline_pool() -> SourcePool {
    generate_synthetic(&headline_synthetic(), POOL_SEED).unwrap()
}

pub fn null_pool() -> SourcePool {
    generate_synthetic(&null_synthetic(), POOL_SEED).unwrap()
}

/// 10% validation, 40% test, 50% hidden.
pub fn wide_validation_split() -> SplitSpec {
    SplitSpec {
        validation_fraction: 0.1,
        test_fraction: 0.4,
        hidden_fraction: 0.5,
        ..SplitSpec::default()
    }
}

pub fn small_pool(per_dataset: usize, datasets: usize, feature_dim: usize, seed: u64) -> SourcePool {
    let mut cfg = SyntheticConfig::uniform(datasets, per_dataset, [20.0, 80.0], 0.3);
    cfg.feature_dim = feature_dim;
    generate_synthetic(&cfg, seed).unwrap()
}
