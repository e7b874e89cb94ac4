mod common;

use mabsel::learner::{fit_ridge, predict, score, Dataset};
use mabsel::pool::{generate_synthetic, SyntheticConfig};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_instance(seed: u64) -> (Vec<Vec<f64>>, Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=10);
    let n = rng.random_range(2..=50);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..m).map(|j| rng.random_range(-3.0..3.0) * (j + 1) as f64 + j as f64).collect())
        .collect();
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
    let lambda = [0.01, 0.1, 1.0, 10.0][rng.random_range(0..4)];
    (rows, y, lambda)
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

#[test]
fn matches_explicit_inverse_oracle_on_100_instances() {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let (rows, y, lambda) = random_instance(seed);
        let model = fit_ridge(&to_matrix(&rows), &DVector::from_vec(y.clone()), lambda).unwrap();
        let (w, b) = common::oracle_ridge(&rows, &y, lambda);
        assert!((model.intercept - b).abs() < 1e-12);
        for (a, o) in model.weights.iter().zip(&w) {
            worst = worst.max((a - o).abs());
        }
    }
    assert!(worst < 1e-8, "max weight deviation {worst:e}");
}

#[test]
fn oracle_inverse_is_an_inverse() {
    let a = vec![vec![4.0, 1.0, 2.0], vec![1.0, 3.0, 0.5], vec![2.0, 0.5, 5.0]];
    let inv = common::gauss_jordan_inverse(&a);
    for i in 0..3 {
        for j in 0..3 {
            let v: f64 = (0..3).map(|k| a[i][k] * inv[k][j]).sum();
            assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
    }
}

#[test]
fn noiseless_generator_is_recovered_from_twice_the_feature_count() {
    let mut cfg = SyntheticConfig::uniform(3, 100, [20.0, 80.0], 0.0);
    cfg.feature_dim = 16;
    let mut pool = generate_synthetic(&cfg, 77).unwrap();
    let train_ids: Vec<u64> = (0..32).map(|k| k * 9).collect();
    let train = pool.reveal_dataset(&train_ids).unwrap();
    let val_ids: Vec<u64> = (0..300).filter(|id| id % 9 != 0).take(60).collect();
    let val = pool.reveal_dataset(&val_ids).unwrap();
    // Small lambda: the fit is exact up to the shrinkage.
    let model = fit_ridge(&train.x, &train.y, 1e-6).unwrap();
    assert!(score(&model, &val).unwrap() >= 0.99);
    let model = fit_ridge(&train.x, &train.y, 1.0).unwrap();
    assert!(score(&model, &val).unwrap() >= 0.99);
}

#[test]
fn single_sample_fit_predicts_its_label() {
    let x = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]);
    let y = DVector::from_vec(vec![42.0]);
    let model = fit_ridge(&x, &y, 1.0).unwrap();
    let pred = predict(&model, &DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 9.0, 9.0, 9.0])).unwrap();
    assert_eq!(pred[0], 42.0);
    assert_eq!(pred[1], 42.0);
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weight_norm_shrinks_as_lambda_grows(seed in 0u64..10_000, l1 in 0.0f64..5.0, gap in 0.01f64..50.0) {
        let (rows, y, _) = random_instance(seed);
        let x = to_matrix(&rows);
        let y = DVector::from_vec(y);
        let a = fit_ridge(&x, &y, l1).unwrap();
        let b = fit_ridge(&x, &y, l1 + gap).unwrap();
        prop_assert!(norm(&a.weights) >= norm(&b.weights) - 1e-9);
    }

    #[test]
    fn prestandardized_data_gives_the_same_predictions(seed in 0u64..10_000) {
        let (rows, y, lambda) = random_instance(seed);
        let x = to_matrix(&rows);
        let y = DVector::from_vec(y);
        let model = fit_ridge(&x, &y, lambda).unwrap();
        let z = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            (x[(i, j)] - model.feature_means[j]) / model.feature_scales[j]
        });
        let again = fit_ridge(&z, &y, lambda).unwrap();
        let p1 = predict(&model, &x).unwrap();
        let p2 = predict(&again, &z).unwrap();
        for (a, b) in p1.iter().zip(p2.iter()) {
            prop_assert!((a - b).abs() < 1e-10, "{} vs {}", a, b);
        }
    }

    #[test]
    fn predictions_are_invariant_to_feature_rescaling(seed in 0u64..10_000, c in 0.1f64..100.0) {
        let (rows, y, lambda) = random_instance(seed);
        let x = to_matrix(&rows);
        let y = DVector::from_vec(y);
        let scaled = x.map(|v| v * c + 7.0);
        let p1 = predict(&fit_ridge(&x, &y, lambda).unwrap(), &x).unwrap();
        let p2 = predict(&fit_ridge(&scaled, &y, lambda).unwrap(), &scaled).unwrap();
        for (a, b) in p1.iter().zip(p2.iter()) {
            prop_assert!((a - b).abs() < 1e-7 * (1.0 + a.abs()));
        }
    }
}

#[test]
fn zero_lambda_underdetermined_fit_succeeds() {
    let (rows, y, _) = random_instance(3);
    let few: Vec<Vec<f64>> = rows.iter().take(1).cloned().collect();
    let data = Dataset::from_rows(&few, y[..1].to_vec(), few[0].len());
    assert!(fit_ridge(&data.x, &data.y, 0.0).is_ok());
}
