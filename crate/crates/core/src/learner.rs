//! Ridge regression on z-scored features, and the r² score.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LearnerError {
    #[error("cannot fit on zero rows")]
    Empty,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("ridge penalty must be finite and >= 0, got {0}")]
    InvalidLambda(f64),
    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("length mismatch: {0} targets vs {1} predictions")]
    Length(usize, usize),
    #[error("r² needs at least two points")]
    TooFew,
    #[error("r² is undefined for constant targets")]
    ConstantTarget,
    #[error("normal equations are not positive definite")]
    NotPositiveDefinite,
}

/// Feature matrix and targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Self {
        assert_eq!(x.nrows(), y.len(), "row count must match target count");
        Self { x, y }
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<f64>, dim: usize) -> Self {
        let x = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
        Self::new(x, DVector::from_vec(labels))
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Jitter added to the normal equations when they are singular.
const DIAGONAL_JITTER: f64 = 1e-8;

/// A fitted ridge model. `weights` live in the standardized feature space and
/// `intercept` is the training mean of the targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
}

impl RidgeModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Coefficients and intercept acting on raw, unstandardized features.
    pub fn raw_coefficients(&self) -> (Vec<f64>, f64) {
        let coef: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.feature_scales)
            .map(|(w, s)| w / s)
            .collect();
        let shift: f64 = coef.iter().zip(&self.feature_means).map(|(c, m)| c * m).sum();
        (coef, self.intercept - shift)
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DVector<f64>, LearnerError> {
        if x.ncols() != self.dim() {
            return Err(LearnerError::Dimension {
                expected: self.dim(),
                got: x.ncols(),
            });
        }
        Ok(DVector::from_fn(x.nrows(), |i, _| {
            let mut acc = self.intercept;
            for j in 0..self.dim() {
                acc += self.weights[j] * (x[(i, j)] - self.feature_means[j]) / self.feature_scales[j];
            }
            acc
        }))
    }
}

/// Per-column mean and population standard deviation. Columns whose spread
/// is negligible relative to their magnitude get scale 1.
pub fn column_stats(x: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows() as f64;
    let mut means = Vec::with_capacity(x.ncols());
    let mut scales = Vec::with_capacity(x.ncols());
    for col in x.column_iter() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        let floor = 1e-12 * (1.0 + mean.abs());
        means.push(mean);
        scales.push(if sd > floor { sd } else { 1.0 });
    }
    (means, scales)
}

pub fn fit_ridge(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<RidgeModel, LearnerError> {
    let (n, m) = x.shape();
    if n == 0 {
        return Err(LearnerError::Empty);
    }
    if y.len() != n {
        return Err(LearnerError::Length(y.len(), n));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(LearnerError::InvalidLambda(lambda));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LearnerError::NonFinite("features"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(LearnerError::NonFinite("targets"));
    }

    let (means, scales) = column_stats(x);
    let z = DMatrix::from_fn(n, m, |i, j| (x[(i, j)] - means[j]) / scales[j]);
    let y_mean = y.mean();
    let centered = y.add_scalar(-y_mean);

    let mut gram = z.tr_mul(&z);
    let mut ridge = lambda;
    if lambda == 0.0 && n < m {
        ridge = DIAGONAL_JITTER;
    }
    add_to_diagonal(&mut gram, ridge);
    let rhs = z.tr_mul(&centered);

    let chol = match gram.clone().cholesky() {
        Some(c) => c,
        None => {
            // Rank-deficient with lambda = 0, e.g. duplicated or constant columns.
            let mut jittered = gram;
            add_to_diagonal(&mut jittered, DIAGONAL_JITTER);
            jittered.cholesky().ok_or(LearnerError::NotPositiveDefinite)?
        }
    };
    let w = chol.solve(&rhs);

    Ok(RidgeModel {
        weights: w.iter().copied().collect(),
        intercept: y_mean,
        lambda,
        feature_means: means,
        feature_scales: scales,
    })
}

fn add_to_diagonal(a: &mut DMatrix<f64>, v: f64) {
    for i in 0..a.nrows().min(a.ncols()) {
        a[(i, i)] += v;
    }
}

pub fn predict(model: &RidgeModel, x: &DMatrix<f64>) -> Result<DVector<f64>, LearnerError> {
    model.predict(x)
}

pub fn r2_score(y_true: &DVector<f64>, y_pred: &DVector<f64>) -> Result<f64, LearnerError> {
    if y_true.len() != y_pred.len() {
        return Err(LearnerError::Length(y_true.len(), y_pred.len()));
    }
    if y_true.len() < 2 {
        return Err(LearnerError::TooFew);
    }
    let mean = y_true.mean();
    let ss_tot: f64 = y_true.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(LearnerError::ConstantTarget);
    }
    let ss_res: f64 = y_true.iter().zip(y_pred.iter()).map(|(t, p)| (t - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// r² of `model` on `eval`.
pub fn score(model: &RidgeModel, eval: &Dataset) -> Result<f64, LearnerError> {
    r2_score(&eval.y, &model.predict(&eval.x)?)
}
