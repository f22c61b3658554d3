//! Bagged scattering feature vectors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::BaggedModel;
use crate::scatter::{HaarNetwork, InputCheck, Mode};

/// Origin of a scattering column: coefficient `q` of row `row` in the
/// output of transform `transform`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureKey {
    pub transform: usize,
    pub row: usize,
    pub q: usize,
}

/// Row-major `N x P` matrix. The last column is the constant feature `1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    keys: Vec<FeatureKey>,
}

impl FeatureMatrix {
    /// Builds a matrix from raw rows; a constant column is appended.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().ok_or(Error::EmptyBatch)?.len();
        let keys = (0..width).map(|q| FeatureKey { transform: 0, row: 0, q }).collect();
        let mut values = Vec::with_capacity(rows.len() * (width + 1));
        for r in rows {
            if r.len() != width {
                return Err(Error::DimensionMismatch { expected: width, found: r.len() });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("non-finite feature".into()));
            }
            values.extend_from_slice(r);
            values.push(1.0);
        }
        Ok(FeatureMatrix { rows: rows.len(), cols: width + 1, values, keys })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column of the constant feature.
    pub fn bias_column(&self) -> usize {
        self.cols - 1
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, p: usize) -> f64 {
        self.values[i * self.cols + p]
    }

    pub fn column(&self, p: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, p)).collect()
    }

    /// Where a scattering column comes from; `None` for the constant.
    pub fn key(&self, p: usize) -> Option<FeatureKey> {
        self.keys.get(p).copied()
    }

    /// Multiplies every non-constant entry by `c`.
    pub fn scaled(&self, c: f64) -> FeatureMatrix {
        let mut out = self.clone();
        let bias = self.bias_column();
        out.values.chunks_mut(self.cols).for_each(|r| r[..bias].iter_mut().for_each(|v| *v *= c));
        out
    }
}

/// Coefficients `q` of a depth-`depth` structured row kept under an order cap.
pub fn kept_coefficients(depth: usize, max_order: Option<usize>) -> Vec<usize> {
    (0..1usize << depth)
        .filter(|q| max_order.is_none_or(|m| q.count_ones() as usize <= m))
        .collect()
}

/// Concatenates `S_J x` of every network, keeping only coefficients of
/// order at most `max_order`, and appends the constant feature.
pub fn build_features_from(
    networks: &[HaarNetwork],
    batch: &[Vec<f64>],
    max_order: Option<usize>,
) -> Result<FeatureMatrix> {
    let first = networks.first().ok_or_else(|| Error::InvalidArgument("no transforms".into()))?;
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut keys = Vec::new();
    let mut kept = Vec::with_capacity(networks.len());
    for (t, net) in networks.iter().enumerate() {
        if net.dim() != first.dim() {
            return Err(Error::DimensionMismatch { expected: first.dim(), found: net.dim() });
        }
        let (rows, row_len) = match net.mode() {
            Mode::Structured => (net.dim() >> net.depth(), 1 << net.depth()),
            Mode::Free => (1, net.dim()),
        };
        let qs = match (net.mode(), max_order) {
            (Mode::Structured, _) => kept_coefficients(net.depth(), max_order),
            (Mode::Free, None) => (0..row_len).collect(),
            (Mode::Free, Some(_)) => return Err(Error::WrongMode),
        };
        for row in 0..rows {
            keys.extend(qs.iter().map(|&q| FeatureKey { transform: t, row, q }));
        }
        kept.push((row_len, qs));
    }
    let cols = keys.len() + 1;
    let rows: Vec<Vec<f64>> = batch
        .par_iter()
        .map(|x| {
            let mut out = Vec::with_capacity(cols);
            for (net, (row_len, qs)) in networks.iter().zip(&kept) {
                let s = net.transform(x, InputCheck::Strict)?;
                for row in s.values().chunks(*row_len) {
                    out.extend(qs.iter().map(|&q| row[q]));
                }
            }
            out.push(1.0);
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(FeatureMatrix {
        rows: batch.len(),
        cols,
        values: rows.concat(),
        keys,
    })
}

pub fn build_features(model: &BaggedModel, batch: &[Vec<f64>], max_order: Option<usize>) -> Result<FeatureMatrix> {
    build_features_from(&model.transforms, batch, max_order)
}

/// Scales `v` to unit Euclidean norm. A zero vector stays zero and the
/// flag is set.
pub fn normalize(v: &[f64]) -> (Vec<f64>, bool) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return (v.to_vec(), true);
    }
    (v.iter().map(|x| x / norm).collect(), false)
}
