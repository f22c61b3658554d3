use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cost::{cost_matrix, Norm};
use super::matching::{solve, Matcher};
use crate::error::{Error, Result};
use crate::scatter::{forward_free_layer, forward_structured_layer, is_power_of_two, log2, HaarNetwork, Layer, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub depth: usize,
    pub mode: Mode,
    pub norm: Norm,
    pub matcher: Matcher,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(depth: usize, mode: Mode) -> Self {
        TrainConfig {
            depth,
            mode,
            norm: Norm::default(),
            matcher: Matcher::default(),
            seed: 0,
        }
    }
}

/// `T` networks trained on disjoint subsets of one training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedModel {
    pub transforms: Vec<HaarNetwork>,
    /// Subset index of every training sample.
    pub subset_assignment: Vec<usize>,
    pub config: TrainConfig,
}

impl BaggedModel {
    pub fn subset(&self, t: usize) -> Vec<usize> {
        (0..self.subset_assignment.len())
            .filter(|&i| self.subset_assignment[i] == t)
            .collect()
    }
}

fn check_batch(batch: &[Vec<f64>]) -> Result<usize> {
    let d = batch.first().ok_or(Error::EmptyBatch)?.len();
    if let Some(x) = batch.iter().find(|x| x.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.len(),
        });
    }
    if !is_power_of_two(d) {
        return Err(Error::NotPowerOfTwo(d));
    }
    Ok(d)
}

/// Learns pairings one layer at a time. Layer `j` is chosen by matching on
/// the costs of the batch's layer-`j` outputs under the pairings already
/// fixed; earlier layers are never revisited.
pub fn train_layerwise(batch: &[Vec<f64>], cfg: &TrainConfig) -> Result<HaarNetwork> {
    let d = check_batch(batch)?;
    if cfg.depth > log2(d) {
        return Err(Error::InvalidNetwork(format!(
            "depth {} exceeds log2({d})",
            cfg.depth
        )));
    }
    let mut layers: Vec<Layer> = batch.iter().map(|x| Layer::flat(x.clone())).collect();
    let mut pairings = Vec::with_capacity(cfg.depth);
    for _ in 0..cfg.depth {
        let costs = cost_matrix(&layers, cfg.mode, cfg.norm)?;
        let p = solve(&costs, cfg.matcher)?;
        layers = layers
            .par_iter()
            .map(|s| match cfg.mode {
                Mode::Free => forward_free_layer(s, &p),
                Mode::Structured => forward_structured_layer(s, &p),
            })
            .collect::<Result<_>>()?;
        pairings.push(p);
    }
    HaarNetwork::new(cfg.mode, d, pairings)
}

/// Shuffles sample indices with `seed` and cuts them into `t` contiguous
/// chunks of `n / t`; the `n % t` leftovers go round-robin to subsets
/// `0, 1, ...`.
pub fn split_subsets(n: usize, t: usize, seed: u64) -> Result<Vec<usize>> {
    if t == 0 || n < t {
        return Err(Error::TooFewSamples { samples: n, subsets: t });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let chunk = n / t;
    let mut assignment = vec![0; n];
    for (k, &i) in order.iter().enumerate() {
        assignment[i] = if k < chunk * t { k / chunk } else { k - chunk * t };
    }
    Ok(assignment)
}

/// Trains one network per subset. Within a subset samples keep their
/// original order, so `t = 1` reproduces [`train_layerwise`] exactly.
pub fn train_bagged(training: &[Vec<f64>], t: usize, cfg: &TrainConfig) -> Result<BaggedModel> {
    let subset_assignment = split_subsets(training.len(), t, cfg.seed)?;
    check_batch(training)?;
    let transforms = (0..t)
        .into_par_iter()
        .map(|s| {
            let batch: Vec<Vec<f64>> = training
                .iter()
                .zip(&subset_assignment)
                .filter(|(_, &a)| a == s)
                .map(|(x, _)| x.clone())
                .collect();
            train_layerwise(&batch, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BaggedModel {
        transforms,
        subset_assignment,
        config: *cfg,
    })
}

/// `sum_i |s_i|^2 - |sum_i s_i|^2` over a batch of equally shaped layers.
pub fn empirical_variance(layers: &[Layer]) -> Result<f64> {
    let first = layers.first().ok_or(Error::EmptyBatch)?;
    if layers.iter().any(|l| l.len() != first.len()) {
        return Err(Error::ShapeMismatch);
    }
    let mut total = vec![0.0; first.len()];
    let mut energy = 0.0;
    for l in layers {
        for (t, &v) in total.iter_mut().zip(l.values()) {
            *t += v;
            energy += v * v;
        }
    }
    Ok(energy - total.iter().map(|t| t * t).sum::<f64>())
}
