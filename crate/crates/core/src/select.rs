//! Per-class orthogonal least squares forward selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Candidates whose orthogonalized norm falls below this are dropped.
const NORM_FLOOR: f64 = 1e-10;

/// Selection for one class. Orthonormal feature `l` is
/// `u_l = sum_{m <= l} weights[l][m] phi~_{indices[m]}` where `phi~` is the
/// standardized raw feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSelection {
    pub indices: Vec<usize>,
    pub alpha: Vec<f64>,
    /// Residual energy after each step.
    pub residuals: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionState {
    /// Training mean of every feature (`0` for the constant).
    pub means: Vec<f64>,
    /// Inverse training norm of every centered feature, `0` if it vanishes.
    pub scales: Vec<f64>,
    pub classes: Vec<ClassSelection>,
}

impl SelectionState {
    pub fn per_class(&self) -> usize {
        self.classes.first().map_or(0, |c| c.indices.len())
    }

    /// `M = K C`.
    pub fn output_dim(&self) -> usize {
        self.classes.iter().map(|c| c.indices.len()).sum()
    }

    /// Orthogonalized features of every row of `f`, classes concatenated.
    pub fn project(&self, f: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        if f.cols() != self.means.len() {
            return Err(Error::DimensionMismatch { expected: self.means.len(), found: f.cols() });
        }
        Ok((0..f.rows())
            .into_par_iter()
            .map(|i| {
                let row = f.row(i);
                let mut out = Vec::with_capacity(self.output_dim());
                for c in &self.classes {
                    let std: Vec<f64> = c
                        .indices
                        .iter()
                        .map(|&p| (row[p] - self.means[p]) * self.scales[p])
                        .collect();
                    out.extend(c.weights.iter().map(|w| w.iter().zip(&std).map(|(a, b)| a * b).sum::<f64>()));
                }
                out
            })
            .collect())
    }
}

/// Centers every column except the constant and scales all to unit norm.
/// Returns the feature-major standardized dictionary.
fn standardize(f: &FeatureMatrix) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let n = f.rows();
    let bias = f.bias_column();
    let columns: Vec<(f64, f64, Vec<f64>)> = (0..f.cols())
        .into_par_iter()
        .map(|p| {
            let mut col = f.column(p);
            let mean = if p == bias { 0.0 } else { col.iter().sum::<f64>() / n as f64 };
            col.iter_mut().for_each(|v| *v -= mean);
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = if norm > NORM_FLOOR * (1.0 + mean.abs() * (n as f64).sqrt()) { 1.0 / norm } else { 0.0 };
            col.iter_mut().for_each(|v| *v *= scale);
            (mean, scale, col)
        })
        .collect();
    let mut means = Vec::with_capacity(columns.len());
    let mut scales = Vec::with_capacity(columns.len());
    let mut dict = Vec::with_capacity(columns.len());
    for (m, s, c) in columns {
        means.push(m);
        scales.push(s);
        dict.push(c);
    }
    (means, scales, dict)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn select_class(dict: &[Vec<f64>], scales: &[f64], target: &[f64], k: usize) -> Result<ClassSelection> {
    let p_count = dict.len();
    let mut g: Vec<Vec<f64>> = dict.to_vec();
    let mut alive: Vec<bool> = scales.iter().map(|&s| s > 0.0).collect();
    let mut norm2: Vec<f64> = g.iter().map(|c| dot(c, c)).collect();
    let mut corr: Vec<f64> = g.iter().map(|c| dot(c, target)).collect();
    // proj[m][p]: coefficient of u_m removed from candidate p at step m.
    let mut proj: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut energy = dot(target, target);
    let mut out = ClassSelection {
        indices: Vec::with_capacity(k),
        alpha: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k),
        weights: Vec::with_capacity(k),
    };
    for step in 0..k {
        let best = (0..p_count)
            .filter(|&p| alive[p])
            .map(|p| (p, corr[p] * corr[p] / norm2[p]))
            .fold(None::<(usize, f64)>, |acc, (p, s)| match acc {
                Some((_, bs)) if bs >= s => acc,
                _ => Some((p, s)),
            });
        let Some((p, _)) = best else {
            return Err(Error::DegenerateDictionary);
        };
        let norm = dot(&g[p], &g[p]).sqrt();
        let u: Vec<f64> = g[p].iter().map(|v| v / norm).collect();
        alive[p] = false;

        let mut w = vec![0.0; step + 1];
        w[step] = 1.0;
        for (m, wm) in out.weights.iter().enumerate() {
            let r = proj[m][p];
            w.iter_mut().zip(wm).for_each(|(a, b)| *a -= r * b);
        }
        w.iter_mut().for_each(|a| *a /= norm);

        let alpha = dot(&u, target);
        energy -= alpha * alpha;
        out.indices.push(p);
        out.alpha.push(alpha);
        out.residuals.push(energy.max(0.0));
        out.weights.push(w);

        let updates: Vec<(f64, f64)> = g
            .par_iter_mut()
            .enumerate()
            .map(|(q, col)| {
                if !alive[q] {
                    return (0.0, 0.0);
                }
                let r = dot(col, &u);
                col.iter_mut().zip(&u).for_each(|(c, v)| *c -= r * v);
                (r, dot(col, col))
            })
            .collect();
        let mut r_step = vec![0.0; p_count];
        for (q, &(r, n2)) in updates.iter().enumerate() {
            if alive[q] {
                r_step[q] = r;
                corr[q] -= r * alpha;
                norm2[q] = n2;
                if n2 < NORM_FLOOR * NORM_FLOOR {
                    alive[q] = false;
                }
            }
        }
        proj.push(r_step);
    }
    Ok(out)
}

/// Selects `k` features per class against the class indicators
/// `f_c(x_i) = [labels[i] == c]`, with `C = max label + 1`.
pub fn ols_select(f: &FeatureMatrix, labels: &[usize], k: usize) -> Result<SelectionState> {
    if labels.len() != f.rows() {
        return Err(Error::DimensionMismatch { expected: f.rows(), found: labels.len() });
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    if k == 0 || classes < 2 || f.rows() <= k {
        return Err(Error::InvalidArgument(format!(
            "need k >= 1, at least 2 classes and more than k samples (k = {k}, {classes} classes, {} samples)",
            f.rows()
        )));
    }
    let (means, scales, dict) = standardize(f);
    let classes = (0..classes)
        .map(|c| {
            let target: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l == c))).collect();
            select_class(&dict, &scales, &target, k)
        })
        .collect::<Result<_>>()?;
    Ok(SelectionState { means, scales, classes })
}

/// `K` per class so that `K C` is at most `target`, clipped to what the
/// dictionary and training set allow.
pub fn default_per_class(target: usize, classes: usize, features: usize, samples: usize) -> usize {
    (target / classes.max(1)).min(features).min(samples.saturating_sub(1)).max(1)
}
