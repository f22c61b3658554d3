use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scatter::{Layer, Mode, Pairing};

/// Symmetric pairwise costs between the units of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    size: usize,
    costs: Vec<f64>,
}

impl CostMatrix {
    /// `costs` is row-major `size x size`. The diagonal is ignored.
    pub fn new(size: usize, costs: Vec<f64>) -> Result<Self> {
        if costs.len() != size * size {
            return Err(Error::DimensionMismatch {
                expected: size * size,
                found: costs.len(),
            });
        }
        for a in 0..size {
            for b in a + 1..size {
                let (x, y) = (costs[a * size + b], costs[b * size + a]);
                if !(x >= 0.0 && x.is_finite()) || x != y {
                    return Err(Error::InvalidArgument(format!(
                        "cost ({a},{b}) = {x} / {y} is not symmetric, finite and non-negative"
                    )));
                }
            }
        }
        Ok(CostMatrix { size, costs })
    }

    /// Builds the matrix from its upper triangle.
    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut costs = vec![0.0; size * size];
        for a in 0..size {
            for b in a + 1..size {
                let c = f(a, b);
                costs[a * size + b] = c;
                costs[b * size + a] = c;
            }
        }
        CostMatrix::new(size, costs)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.costs[a * self.size + b]
    }

    pub fn total(&self, p: &Pairing) -> f64 {
        p.pairs().iter().map(|&(a, b)| self.get(a, b)).sum()
    }
}

/// Pairing objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    /// Summed absolute variation within each pair.
    #[default]
    L1,
    /// Squared l1 norms of both outputs of each pair, summed.
    Mixed,
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "l1",
            Norm::Mixed => "mixed",
        })
    }
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Norm::L1),
            "mixed" => Ok(Norm::Mixed),
            other => Err(Error::InvalidArgument(format!("unknown norm {other:?}"))),
        }
    }
}

// Unit-major copy of a batch: units[a][q][i] for unit a, coefficient q, sample i.
struct Units {
    count: usize,
    width: usize,
    samples: usize,
    data: Vec<f64>,
}

impl Units {
    fn gather(layers: &[Layer], mode: Mode) -> Result<Self> {
        let first = layers.first().ok_or(Error::EmptyBatch)?;
        if layers
            .iter()
            .any(|l| l.len() != first.len() || l.row_len() != first.row_len())
        {
            return Err(Error::ShapeMismatch);
        }
        let width = match mode {
            Mode::Free => 1,
            Mode::Structured => first.row_len(),
        };
        let count = first.len() / width;
        let samples = layers.len();
        let mut data = vec![0.0; first.len() * samples];
        for (i, l) in layers.iter().enumerate() {
            for (k, &v) in l.values().iter().enumerate() {
                data[k * samples + i] = v;
            }
        }
        Ok(Units {
            count,
            width,
            samples,
            data,
        })
    }

    fn unit(&self, a: usize) -> &[f64] {
        let n = self.width * self.samples;
        &self.data[a * n..(a + 1) * n]
    }

    fn matrix(&self, f: impl Fn(&[f64], &[f64]) -> f64 + Sync) -> Result<CostMatrix> {
        let u = self.count;
        let rows: Vec<Vec<f64>> = (0..u)
            .into_par_iter()
            .map(|a| {
                let ua = self.unit(a);
                (a + 1..u).map(|b| f(ua, self.unit(b))).collect()
            })
            .collect();
        let mut costs = vec![0.0; u * u];
        for (a, row) in rows.into_iter().enumerate() {
            for (k, c) in row.into_iter().enumerate() {
                let b = a + 1 + k;
                costs[a * u + b] = c;
                costs[b * u + a] = c;
            }
        }
        Ok(CostMatrix { size: u, costs })
    }
}

/// `cost(a, b) = sum_i sum_q |s_i(a, q) - s_i(b, q)|` over units of the
/// batch. Units are single coefficients in free mode and rows in
/// structured mode.
pub fn cost_l1(layers: &[Layer], mode: Mode) -> Result<CostMatrix> {
    let units = Units::gather(layers, mode)?;
    units.matrix(|a, b| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}

/// `cost(a, b) = sum_q (sum_i |s_i(a,q) + s_i(b,q)|)^2 + (sum_i |s_i(a,q) - s_i(b,q)|)^2`.
pub fn cost_mixed(layers: &[Layer], mode: Mode) -> Result<CostMatrix> {
    let units = Units::gather(layers, mode)?;
    let n = units.samples;
    units.matrix(|a, b| {
        a.chunks_exact(n)
            .zip(b.chunks_exact(n))
            .map(|(ca, cb)| {
                let (mut s, mut d) = (0.0, 0.0);
                for (x, y) in ca.iter().zip(cb) {
                    s += (x + y).abs();
                    d += (x - y).abs();
                }
                s * s + d * d
            })
            .sum()
    })
}

pub fn cost_matrix(layers: &[Layer], mode: Mode, norm: Norm) -> Result<CostMatrix> {
    match norm {
        Norm::L1 => cost_l1(layers, mode),
        Norm::Mixed => cost_mixed(layers, mode),
    }
}
