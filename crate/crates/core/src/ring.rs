//! Circular stationary Gaussian processes and the recovery of ring
//! neighbourhoods by total-variation pairing.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::{cost_l1, match_exact};
use crate::scatter::{Layer, Mode, Pairing};

/// Gaussian concentration constant `c0 = 2 / pi^2` of the Pisier form.
pub const PISIER_CONSTANT: f64 = 2.0 / (PI * PI);
/// Constant of the Maurey form of the same inequality.
pub const MAUREY_CONSTANT: f64 = 0.25;

/// Zero-mean Gaussian process on `Z / dZ` with covariance
/// `Sigma(n, m) = rho((n - m) mod d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingModel {
    rho: Vec<f64>,
}

fn spectrum(rho: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex64> = rho.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

impl RingModel {
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        let d = rho.len();
        if d < 2 {
            return Err(Error::InvalidModel(format!("dimension {d} is too small")));
        }
        if !(rho[0] > 0.0) || rho.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidModel("rho(0) must be positive and all values finite".into()));
        }
        let tol = 1e-9 * rho[0];
        for u in 1..d {
            if (rho[u] - rho[d - u]).abs() > tol {
                return Err(Error::InvalidModel(format!("rho({u}) != rho({})", d - u)));
            }
        }
        let tol = 1e-9 * rho[0] * d as f64;
        if let Some((k, v)) = spectrum(&rho).into_iter().enumerate().find(|(_, v)| *v < -tol) {
            return Err(Error::InvalidModel(format!(
                "covariance is not positive semidefinite (spectrum {v} at frequency {k})"
            )));
        }
        Ok(RingModel { rho })
    }

    /// `rho(0) = 1`, `rho(+-1) = neighbour` and `far` elsewhere. A spectrum
    /// with negative entries is clipped at zero and rescaled so that
    /// `rho(0) = 1`.
    pub fn from_ratios(d: usize, neighbour: f64, far: f64) -> Result<Self> {
        if d < 4 {
            return Err(Error::InvalidModel(format!("dimension {d} is too small")));
        }
        let mut rho = vec![far; d];
        rho[0] = 1.0;
        rho[1] = neighbour;
        rho[d - 1] = neighbour;
        let spec = spectrum(&rho);
        if spec.iter().any(|&v| v < 0.0) {
            let mut buf: Vec<Complex64> = spec.iter().map(|&v| Complex64::new(v.max(0.0), 0.0)).collect();
            FftPlanner::new().plan_fft_inverse(d).process(&mut buf);
            let scale = buf[0].re;
            if !(scale > 0.0) {
                return Err(Error::InvalidModel("projected covariance vanishes".into()));
            }
            rho = buf.iter().map(|c| c.re / scale).collect();
            // Restore exact symmetry lost to rounding.
            for u in 1..d {
                let avg = 0.5 * (rho[u] + rho[d - u]);
                rho[u] = avg;
                rho[d - u] = avg;
            }
        }
        RingModel::new(rho)
    }

    /// The family used for the connectivity experiments:
    /// `rho(1) / rho(0) = 0.44` and `rho(n) / rho(0) = 0.06` for `n >= 2`.
    pub fn default_family(d: usize) -> Result<Self> {
        RingModel::from_ratios(d, 0.44, 0.06)
    }

    pub fn dim(&self) -> usize {
        self.rho.len()
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Eigenvalues of the circulant covariance, `rho_hat(k)`.
    pub fn spectrum(&self) -> Vec<f64> {
        spectrum(&self.rho)
    }

    /// `|Sigma|_op = max_k rho_hat(k)`.
    pub fn operator_norm(&self) -> f64 {
        self.spectrum().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `n` independent draws, generated as `x = F^-1(sqrt(rho_hat) F z)` with
/// `z` white.
pub fn sample(model: &RingModel, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = model.dim();
    let gain: Vec<f64> = model.spectrum().into_iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(d);
    let inv = planner.plan_fft_inverse(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / d as f64;
    (0..n)
        .map(|_| {
            let mut buf: Vec<Complex64> = (0..d)
                .map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0))
                .collect();
            fwd.process(&mut buf);
            buf.iter_mut().zip(&gain).for_each(|(c, g)| *c *= g);
            inv.process(&mut buf);
            buf.into_iter().map(|c| c.re * scale).collect()
        })
        .collect()
}

fn far_max(model: &RingModel) -> Result<f64> {
    let d = model.dim();
    if d < 4 {
        return Err(Error::InvalidModel(format!("dimension {d} is too small")));
    }
    Ok((2..=d / 2).map(|n| model.rho[n]).fold(f64::NEG_INFINITY, f64::max))
}

/// `Delta = (sqrt(1 - max_{n>=2} rho(n)/rho(0)) - sqrt(1 - rho(1)/rho(0)))^2`.
pub fn correlation_gap(model: &RingModel) -> Result<f64> {
    let far = far_max(model)?;
    let r0 = model.rho[0];
    if model.rho[1] > r0 {
        return Err(Error::InvalidModel("rho(1) exceeds rho(0)".into()));
    }
    let a = (1.0 - far / r0).max(0.0).sqrt();
    let b = (1.0 - model.rho[1] / r0).max(0.0).sqrt();
    Ok((a - b).powi(2))
}

/// Training size above which the total-variation pairing is connected
/// with probability at least `1 - epsilon`:
/// `pi^3 |Sigma|_op / (2 Delta) * d (3 ln d - ln epsilon)`.
pub fn sample_size_bound(model: &RingModel, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} is not in (0, 1)")));
    }
    let delta = correlation_gap(model)?;
    // The gap is only meaningful when neighbours are the most correlated.
    if delta <= 0.0 || model.rho[1] <= far_max(model)? {
        return Err(Error::ZeroGap);
    }
    let d = model.dim() as f64;
    Ok(PI.powi(3) * model.operator_norm() / (2.0 * delta) * d * (3.0 * d.ln() - epsilon.ln()))
}

/// Whether every pair joins ring neighbours `n, n + 1 mod d`.
pub fn is_ring_connected(p: &Pairing) -> bool {
    let d = p.size();
    p.pairs().iter().all(|&(a, b)| b - a == 1 || (a == 0 && b == d - 1))
}

/// Draws `n` signals, pairs coordinates by minimum total variation and
/// reports whether the pairing follows the ring.
pub fn tv_recovery_trial(model: &RingModel, n: usize, seed: u64) -> Result<(Pairing, bool)> {
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let batch: Vec<Layer> = sample(model, n, seed).into_iter().map(Layer::flat).collect();
    let p = match_exact(&cost_l1(&batch, Mode::Free)?)?;
    let connected = is_ring_connected(&p);
    Ok((p, connected))
}

/// SplitMix64 finalizer, used to give every trial its own stream.
pub(crate) fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(seed: u64, d: usize, n: usize, trial: usize) -> u64 {
    [d as u64, n as u64, trial as u64].into_iter().fold(mix(seed), |acc, v| mix(acc ^ v))
}

/// Monte-Carlo success rates over a `(d, N)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryGrid {
    pub dims: Vec<usize>,
    pub sample_sizes: Vec<usize>,
    pub trials: usize,
    /// `estimates[i][k]` for `dims[i]`, `sample_sizes[k]`.
    pub estimates: Vec<Vec<f64>>,
}

impl RecoveryGrid {
    /// `d,N,trials,success_rate`, one line per cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("d,N,trials,success_rate\n");
        for (i, d) in self.dims.iter().enumerate() {
            for (k, n) in self.sample_sizes.iter().enumerate() {
                writeln!(out, "{d},{n},{},{}", self.trials, self.estimates[i][k]).expect("string write");
            }
        }
        out
    }

    /// Smallest tested `N` whose success rate reaches `level`, per dimension.
    pub fn frontier(&self, level: f64) -> Vec<Option<usize>> {
        self.estimates
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.sample_sizes)
                    .find(|(p, _)| **p >= level)
                    .map(|(_, &n)| n)
            })
            .collect()
    }
}

pub fn recovery_grid(
    family: impl Fn(usize) -> Result<RingModel> + Sync,
    dims: &[usize],
    sample_sizes: &[usize],
    trials: usize,
    seed: u64,
) -> Result<RecoveryGrid> {
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let mut estimates = Vec::with_capacity(dims.len());
    for &d in dims {
        let model = family(d)?;
        let row = sample_sizes
            .iter()
            .map(|&n| {
                let hits = (0..trials)
                    .into_par_iter()
                    .map(|t| tv_recovery_trial(&model, n, trial_seed(seed, d, n, t)).map(|r| r.1 as usize))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .sum::<usize>();
                Ok(hits as f64 / trials as f64)
            })
            .collect::<Result<Vec<_>>>()?;
        estimates.push(row);
    }
    Ok(RecoveryGrid {
        dims: dims.to_vec(),
        sample_sizes: sample_sizes.to_vec(),
        trials,
        estimates,
    })
}

/// Small text description of a ring experiment, one `key = value` per line:
/// `d`, then either `rho` (comma separated) or `neighbour` and `far`, and an
/// optional `seed`. `#` starts a comment.
#[derive(Debug, Clone, PartialEq)]
pub struct RingSpec {
    pub model: RingModel,
    pub seed: u64,
}

impl std::str::FromStr for RingSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = |m: String| Error::InvalidArgument(m);
        let (mut d, mut rho, mut neighbour, mut far, mut seed) = (None, None, None, None, 0u64);
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| bad(format!("expected key = value: {line:?}")))?;
            let value = value.trim();
            let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad(format!("bad number {v:?}")));
            match key.trim() {
                "d" => d = Some(value.parse::<usize>().map_err(|_| bad(format!("bad dimension {value:?}")))?),
                "rho" => rho = Some(value.split(',').map(num).collect::<Result<Vec<_>>>()?),
                "neighbour" | "neighbor" => neighbour = Some(num(value)?),
                "far" => far = Some(num(value)?),
                "seed" => seed = value.parse().map_err(|_| bad(format!("bad seed {value:?}")))?,
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        let model = match (rho, d) {
            (Some(rho), d) => {
                if d.is_some_and(|d| d != rho.len()) {
                    return Err(Error::DimensionMismatch { expected: d.unwrap_or(0), found: rho.len() });
                }
                RingModel::new(rho)?
            }
            (None, Some(d)) => RingModel::from_ratios(d, neighbour.unwrap_or(0.44), far.unwrap_or(0.06))?,
            (None, None) => return Err(bad("missing d".into())),
        };
        Ok(RingSpec { model, seed })
    }
}
