//! Labelled signal collections and the pixel scrambling of the unknown
//! geometry experiments.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::idx::{read_images, read_labels, IdxImages};
use crate::error::{Error, Result};
use crate::graph::ReferenceGraph;
use crate::scatter::is_power_of_two;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    None,
    /// Row-major `height x width` image.
    Grid { height: usize, width: usize },
    Graph { edges: Vec<(usize, usize)> },
}

impl Geometry {
    pub fn reference_graph(&self, dim: usize) -> Result<Option<ReferenceGraph>> {
        Ok(match self {
            Geometry::None => None,
            Geometry::Grid { height, width } => Some(ReferenceGraph::grid8(*height, *width)),
            Geometry::Graph { edges } => Some(ReferenceGraph::from_edges(dim, edges.iter().copied())?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub geometry: Geometry,
}

impl DatasetFile {
    pub fn new(images: Vec<Vec<f64>>, labels: Vec<usize>, geometry: Geometry) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: images.len(), found: labels.len() });
        }
        let d = images.first().map_or(0, Vec::len);
        if let Some(x) = images.iter().find(|x| x.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: x.len() });
        }
        if !images.is_empty() && !is_power_of_two(d) {
            return Err(Error::NotPowerOfTwo(d));
        }
        Ok(DatasetFile { images, labels, geometry })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.images.first().map_or(0, Vec::len)
    }

    pub fn classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    /// The first `n` samples.
    pub fn truncate(mut self, n: usize) -> Self {
        self.images.truncate(n);
        self.labels.truncate(n);
        self
    }

    /// Vertices that are nonzero in at least one signal.
    pub fn active_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.dim()];
        for x in &self.images {
            mask.iter_mut().zip(x).for_each(|(m, &v)| *m |= v != 0.0);
        }
        mask
    }
}

fn padded_side(n: usize) -> usize {
    n.next_power_of_two()
}

/// Scales bytes to `[0, 1]` and zero-pads each image, centered, to the next
/// power of two on both sides (28 x 28 becomes 32 x 32).
pub fn from_idx(images: &IdxImages, labels: &[u8]) -> Result<DatasetFile> {
    if labels.len() != images.count {
        return Err(Error::DimensionMismatch { expected: images.count, found: labels.len() });
    }
    let (h, w) = (padded_side(images.height), padded_side(images.width));
    let (top, left) = ((h - images.height) / 2, (w - images.width) / 2);
    let signals = (0..images.count)
        .map(|i| {
            let mut x = vec![0.0; h * w];
            for (r, row) in images.image(i).chunks(images.width).enumerate() {
                for (c, &p) in row.iter().enumerate() {
                    x[(r + top) * w + c + left] = f64::from(p) / 255.0;
                }
            }
            x
        })
        .collect();
    DatasetFile::new(
        signals,
        labels.iter().map(|&l| usize::from(l)).collect(),
        Geometry::Grid { height: h, width: w },
    )
}

pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<DatasetFile> {
    from_idx(&read_images(images)?, &read_labels(labels)?)
}

/// One sample per line: the label, then the signal values. A first line
/// that does not parse as numbers is taken as a header. Signals are
/// zero-padded at the end to the next power of two.
pub fn load_csv(path: impl AsRef<Path>) -> Result<DatasetFile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::CorruptFile(e.to_string()))?;
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::CorruptFile(e.to_string()))?;
        let mut fields = record.iter();
        let Some(Ok(label)) = fields.next().map(str::parse::<usize>) else {
            if line == 0 {
                continue;
            }
            return Err(Error::CorruptFile(format!("line {}: bad label", line + 1)));
        };
        let values = fields
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::CorruptFile(format!("line {}: {e}", line + 1)))?;
        labels.push(label);
        images.push(values);
    }
    let d = images.iter().map(Vec::len).max().unwrap_or(0).next_power_of_two();
    images.iter_mut().for_each(|x| x.resize(d, 0.0));
    DatasetFile::new(images, labels, Geometry::None)
}

/// A uniformly random permutation drawn from `seed`.
pub fn random_permutation(d: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    perm
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    perm.iter().enumerate().for_each(|(i, &p)| inv[p] = i);
    inv
}

/// Moves value `v` of `x` to position `perm[v]`.
pub fn permute(x: &[f64], perm: &[usize]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    perm.iter().zip(x).for_each(|(&p, &v)| y[p] = v);
    y
}

/// Applies one seeded permutation to every signal and forgets the
/// geometry. Returns the permutation as well.
pub fn scramble(ds: &DatasetFile, seed: u64) -> (DatasetFile, Vec<usize>) {
    let perm = random_permutation(ds.dim(), seed);
    let scrambled = DatasetFile {
        images: ds.images.iter().map(|x| permute(x, &perm)).collect(),
        labels: ds.labels.clone(),
        geometry: Geometry::None,
    };
    (scrambled, perm)
}
