//! Gaussian-kernel regularized least squares, one class against the rest.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Anything that maps feature vectors to class labels.
pub trait Classifier {
    fn predict(&self, features: &[Vec<f64>]) -> Result<Vec<usize>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub sigma: f64,
    pub lambda: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { sigma: 1.0, lambda: 1e-3 }
    }
}

/// Scores are `prior_c + sum_i dual[c][i] k(x, x_i)`, with
/// `k(u, v) = exp(-|u - v|^2 / (2 sigma^2))`. Targets are the class
/// indicators minus the class prior, so a vanishing kernel part falls back
/// to the most frequent class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelClassifier {
    pub config: KernelConfig,
    pub priors: Vec<f64>,
    pub dual: Vec<Vec<f64>>,
    pub train: Vec<Vec<f64>>,
}

fn to_matrix(rows: &[Vec<f64>], width: usize) -> Result<DMatrix<f64>> {
    if let Some(r) = rows.iter().find(|r| r.len() != width) {
        return Err(Error::DimensionMismatch { expected: width, found: r.len() });
    }
    Ok(DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j]))
}

/// `exp(-|a_i - b_j|^2 / (2 sigma^2))` for all pairs of rows.
fn gaussian_kernel(a: &DMatrix<f64>, b: &DMatrix<f64>, sigma: f64) -> DMatrix<f64> {
    let na: Vec<f64> = a.row_iter().map(|r| r.norm_squared()).collect();
    let nb: Vec<f64> = b.row_iter().map(|r| r.norm_squared()).collect();
    let mut k = a * b.transpose();
    let gamma = 1.0 / (2.0 * sigma * sigma);
    for j in 0..k.ncols() {
        for i in 0..k.nrows() {
            let d2 = (na[i] + nb[j] - 2.0 * k[(i, j)]).max(0.0);
            k[(i, j)] = (-gamma * d2).exp();
        }
    }
    k
}

impl KernelClassifier {
    /// Solves `(K + lambda I) a_c = y_c - p_c` for every class `c < classes`.
    pub fn fit(config: KernelConfig, features: &[Vec<f64>], labels: &[usize], classes: usize) -> Result<Self> {
        if !(config.sigma > 0.0) || !(config.lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma = {} and lambda = {} must be positive and nonnegative",
                config.sigma, config.lambda
            )));
        }
        if labels.len() != features.len() {
            return Err(Error::DimensionMismatch { expected: features.len(), found: labels.len() });
        }
        let n = features.len();
        if n == 0 {
            return Err(Error::EmptyBatch);
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::IndexOutOfRange(format!("label {l} with {classes} classes")));
        }
        let x = to_matrix(features, features[0].len())?;
        let mut gram = gaussian_kernel(&x, &x, config.sigma);
        for i in 0..n {
            gram[(i, i)] += config.lambda;
        }
        let chol = gram.cholesky().ok_or(Error::SingularSystem)?;
        let priors: Vec<f64> = (0..classes)
            .map(|c| labels.iter().filter(|&&l| l == c).count() as f64 / n as f64)
            .collect();
        let targets = DMatrix::from_fn(n, classes, |i, c| f64::from(u8::from(labels[i] == c)) - priors[c]);
        let sol = chol.solve(&targets);
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem);
        }
        Ok(KernelClassifier {
            config,
            priors,
            dual: (0..classes).map(|c| sol.column(c).iter().copied().collect()).collect(),
            train: features.to_vec(),
        })
    }

    pub fn classes(&self) -> usize {
        self.priors.len()
    }

    /// Per-class scores of every input row.
    pub fn scores(&self, features: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let width = self.train.first().map_or(0, Vec::len);
        let x = to_matrix(features, width)?;
        let t = to_matrix(&self.train, width)?;
        let k = gaussian_kernel(&x, &t, self.config.sigma);
        let dual = DMatrix::from_fn(self.train.len(), self.classes(), |i, c| self.dual[c][i]);
        let s = k * dual;
        Ok((0..features.len())
            .map(|i| (0..self.classes()).map(|c| self.priors[c] + s[(i, c)]).collect())
            .collect())
    }
}

/// Index of the largest score; ties go to the smallest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (c, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = c;
        }
    }
    best
}

impl Classifier for KernelClassifier {
    fn predict(&self, features: &[Vec<f64>]) -> Result<Vec<usize>> {
        Ok(self.scores(features)?.iter().map(|s| argmax(s)).collect())
    }
}

/// Fraction of mismatched labels.
pub fn error_rate(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(truth).filter(|(a, b)| a != b).count() as f64 / truth.len() as f64
}
