//! Forward orthogonal Haar scattering.
//!
//! A layer is stored as one flat buffer of `d` values. Structured layers
//! at depth `j` are viewed as a `2^-j d x 2^j` array in row-major order,
//! so coefficient `(n, q)` lives at `n * 2^j + q`. Free layers are the
//! same buffer viewed as `d` rows of length one, which makes a free layer
//! a structured layer whose output is flattened back to single-value rows.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sum and absolute difference of a pair. Symmetric in its arguments.
#[inline]
pub fn haar_pair(a: f64, b: f64) -> (f64, f64) {
    (a + b, (a - b).abs())
}

/// Recovers the unordered pair `{max, min}` from `(sum, |difference|)`.
#[inline]
pub fn unpair(sum: f64, absdiff: f64) -> (f64, f64) {
    (0.5 * (sum + absdiff), 0.5 * (sum - absdiff))
}

pub(crate) fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

pub(crate) fn log2(n: usize) -> usize {
    n.trailing_zeros() as usize
}

/// A perfect matching of `{0..size-1}` into unordered pairs.
///
/// The pair list is kept canonical: the smaller index comes first and pairs
/// are sorted by their first element. The position of a pair in this list
/// is the row it is stored at in the next layer.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<[usize; 2]>", into = "Vec<[usize; 2]>")]
pub struct Pairing {
    pairs: Vec<(usize, usize)>,
}

impl Pairing {
    pub fn new(size: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut pairs: Vec<(usize, usize)> = pairs
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        if size % 2 != 0 {
            return Err(Error::OddSize(size));
        }
        if pairs.len() * 2 != size {
            return Err(Error::InvalidPairing(format!(
                "{} pairs cannot cover {} indices",
                pairs.len(),
                size
            )));
        }
        let mut seen = vec![false; size];
        for &(a, b) in &pairs {
            if a == b {
                return Err(Error::InvalidPairing(format!("index {a} paired with itself")));
            }
            for i in [a, b] {
                if i >= size {
                    return Err(Error::InvalidPairing(format!("index {i} out of range 0..{size}")));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidPairing(format!("index {i} appears twice")));
                }
            }
        }
        pairs.sort_unstable();
        Ok(Pairing { pairs })
    }

    /// Builds a pairing from a mate table (`mates[i]` is the partner of `i`).
    pub fn from_mates(mates: &[usize]) -> Result<Self> {
        let mut pairs = Vec::with_capacity(mates.len() / 2);
        for (i, &m) in mates.iter().enumerate() {
            if m >= mates.len() || mates[m] != i {
                return Err(Error::InvalidPairing(format!("mate table is not an involution at {i}")));
            }
            if i < m {
                pairs.push((i, m));
            }
        }
        Pairing::new(mates.len(), pairs)
    }

    /// `{(0,1), (2,3), ...}`.
    pub fn neighbors(size: usize) -> Result<Self> {
        Pairing::new(size, (0..size / 2).map(|n| (2 * n, 2 * n + 1)))
    }

    /// A uniformly random pairing.
    pub fn random<R: Rng + ?Sized>(size: usize, rng: &mut R) -> Result<Self> {
        if size % 2 != 0 {
            return Err(Error::OddSize(size));
        }
        let mut idx: Vec<usize> = (0..size).collect();
        idx.shuffle(rng);
        Pairing::new(size, idx.chunks_exact(2).map(|c| (c[0], c[1])))
    }

    /// Number of paired units.
    pub fn size(&self) -> usize {
        2 * self.pairs.len()
    }

    /// Number of pairs.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn mates(&self) -> Vec<usize> {
        let mut mates = vec![0; self.size()];
        for &(a, b) in &self.pairs {
            mates[a] = b;
            mates[b] = a;
        }
        mates
    }

    /// The same pairing after renaming every unit `i` to `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.size() {
            return Err(Error::DimensionMismatch { expected: self.size(), found: perm.len() });
        }
        Pairing::new(self.size(), self.pairs.iter().map(|&(a, b)| (perm[a], perm[b])))
    }
}

impl fmt::Debug for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs.iter()).finish()
    }
}

impl TryFrom<Vec<[usize; 2]>> for Pairing {
    type Error = Error;

    fn try_from(pairs: Vec<[usize; 2]>) -> Result<Self> {
        let size = 2 * pairs.len();
        Pairing::new(size, pairs.into_iter().map(|[a, b]| (a, b)))
    }
}

impl From<Pairing> for Vec<[usize; 2]> {
    fn from(p: Pairing) -> Self {
        p.pairs.into_iter().map(|(a, b)| [a, b]).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Any coefficient may be paired with any other at every layer.
    Free,
    /// Layer `j` pairs the `2^-j d` rows of the previous layer.
    Structured,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Free => "free",
            Mode::Structured => "structured",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(Mode::Free),
            "structured" => Ok(Mode::Structured),
            _ => Err(Error::InvalidArgument(format!("unknown mode '{s}'"))),
        }
    }
}

/// One network layer `S_j x`, a flat buffer viewed as rows of `row_len` values.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    values: Vec<f64>,
    row_len: usize,
}

impl Layer {
    pub fn new(values: Vec<f64>, row_len: usize) -> Result<Self> {
        if row_len == 0 || values.len() % row_len != 0 {
            return Err(Error::ShapeMismatch);
        }
        Ok(Layer { values, row_len })
    }

    /// A layer of single-value rows, the shape of `S_0 x` and of free layers.
    pub fn flat(values: Vec<f64>) -> Self {
        Layer { values, row_len: 1 }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row_len(&self) -> usize {
        self.row_len
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.row_len
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.values[n * self.row_len..(n + 1) * self.row_len]
    }

    /// Coefficient `(n, q)`.
    pub fn get(&self, n: usize, q: usize) -> f64 {
        self.values[n * self.row_len + q]
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn flattened(mut self) -> Self {
        self.row_len = 1;
        self
    }
}

fn check_rows(s: &Layer, p: &Pairing) -> Result<()> {
    if p.size() != s.rows() {
        return Err(Error::DimensionMismatch { expected: s.rows(), found: p.size() });
    }
    Ok(())
}

/// Pairs the rows of `s`: row `n` of the output interleaves the sums and
/// absolute differences of rows `p[n].0` and `p[n].1`.
pub fn forward_structured_layer(s: &Layer, p: &Pairing) -> Result<Layer> {
    check_rows(s, p)?;
    let w = s.row_len;
    let mut out = Vec::with_capacity(s.len());
    for &(a, b) in p.pairs() {
        for (&u, &v) in s.row(a).iter().zip(s.row(b)) {
            let (sum, diff) = haar_pair(u, v);
            out.push(sum);
            out.push(diff);
        }
    }
    Ok(Layer { values: out, row_len: 2 * w })
}

/// Pairs individual coefficients: output `2n` is the sum and `2n+1` the
/// absolute difference of the `n`-th pair.
pub fn forward_free_layer(s: &Layer, p: &Pairing) -> Result<Layer> {
    let flat = Layer { values: s.values.clone(), row_len: 1 };
    forward_structured_layer(&flat, p).map(Layer::flattened)
}

/// Whether input signals must be entrywise nonnegative.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InputCheck {
    #[default]
    Strict,
    /// Signed inputs are accepted; the transform is still defined but the
    /// outputs are no longer guaranteed to be nonnegative.
    Permissive,
}

/// A depth-`J` stack of pairings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HaarNetwork {
    mode: Mode,
    dim: usize,
    layers: Vec<Pairing>,
}

impl HaarNetwork {
    pub fn new(mode: Mode, dim: usize, layers: Vec<Pairing>) -> Result<Self> {
        if dim < 2 || !is_power_of_two(dim) {
            return Err(Error::NotPowerOfTwo(dim));
        }
        if layers.len() > log2(dim) {
            return Err(Error::InvalidNetwork(format!(
                "depth {} exceeds log2({dim})",
                layers.len()
            )));
        }
        for (j, p) in layers.iter().enumerate() {
            let expected = match mode {
                Mode::Free => dim,
                Mode::Structured => dim >> j,
            };
            if p.size() != expected {
                return Err(Error::InvalidNetwork(format!(
                    "layer {j} pairs {} units, expected {expected}",
                    p.size()
                )));
            }
        }
        Ok(HaarNetwork { mode, dim, layers })
    }

    /// A network with uniformly random pairings at every layer.
    pub fn random<R: Rng + ?Sized>(mode: Mode, dim: usize, depth: usize, rng: &mut R) -> Result<Self> {
        let layers = (0..depth)
            .map(|j| {
                let units = if mode == Mode::Free { dim } else { dim >> j.min(log2(dim)) };
                Pairing::random(units, rng)
            })
            .collect::<Result<Vec<_>>>()?;
        HaarNetwork::new(mode, dim, layers)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Pairing] {
        &self.layers
    }

    fn check_input(&self, x: &[f64], check: InputCheck) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        if check == InputCheck::Strict {
            if let Some((index, &value)) =
                x.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite()))
            {
                return Err(Error::NegativeInput { index, value });
            }
        }
        Ok(())
    }

    fn step(&self, j: usize, s: &Layer) -> Result<Layer> {
        match self.mode {
            Mode::Free => forward_free_layer(s, &self.layers[j]),
            Mode::Structured => forward_structured_layer(s, &self.layers[j]),
        }
    }

    /// All layers `S_0 x ..= S_J x` of a nonnegative signal.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<Layer>> {
        self.forward_with(x, InputCheck::Strict)
    }

    pub fn forward_with(&self, x: &[f64], check: InputCheck) -> Result<Vec<Layer>> {
        self.check_input(x, check)?;
        let mut out = Vec::with_capacity(self.depth() + 1);
        out.push(Layer::flat(x.to_vec()));
        for j in 0..self.depth() {
            let next = self.step(j, &out[j])?;
            debug_assert!(check == InputCheck::Permissive || next.values.iter().all(|&v| v >= 0.0));
            out.push(next);
        }
        Ok(out)
    }

    /// Only the output layer `S_J x`; intermediate layers are dropped as
    /// soon as the next one is computed.
    pub fn transform(&self, x: &[f64], check: InputCheck) -> Result<Layer> {
        self.check_input(x, check)?;
        let mut s = Layer::flat(x.to_vec());
        for j in 0..self.depth() {
            s = self.step(j, &s)?;
        }
        Ok(s)
    }

    /// Per layer `j = 0..J-1`, the signs `E_{j+1}` such that replaying the
    /// cascade linearly with those signs reproduces `S_{j+1} x`. Sum
    /// coefficients always get `+1`; a zero difference gets `+1`.
    pub fn sign_decomposition(&self, x: &[f64]) -> Result<Vec<Vec<i8>>> {
        let layers = self.forward_with(x, InputCheck::Permissive)?;
        let mut signs = Vec::with_capacity(self.depth());
        for (j, p) in self.layers.iter().enumerate() {
            let s = &layers[j];
            let s = match self.mode {
                Mode::Free => Layer { values: s.values.clone(), row_len: 1 },
                Mode::Structured => s.clone(),
            };
            let mut e = Vec::with_capacity(self.dim);
            for &(a, b) in p.pairs() {
                for (&u, &v) in s.row(a).iter().zip(s.row(b)) {
                    e.push(1);
                    e.push(if u - v < 0.0 { -1 } else { 1 });
                }
            }
            signs.push(e);
        }
        Ok(signs)
    }

    /// Runs the cascade without absolute values, multiplying each output
    /// coefficient by the given sign instead.
    pub fn replay_linear(&self, x: &[f64], signs: &[Vec<i8>]) -> Result<Vec<Layer>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        if signs.len() != self.depth() {
            return Err(Error::DimensionMismatch { expected: self.depth(), found: signs.len() });
        }
        let mut out = vec![Layer::flat(x.to_vec())];
        for (j, p) in self.layers.iter().enumerate() {
            let prev = &out[j];
            let w = if self.mode == Mode::Free { 1 } else { prev.row_len };
            let view = Layer { values: prev.values.clone(), row_len: w };
            check_rows(&view, p)?;
            let e = &signs[j];
            if e.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, found: e.len() });
            }
            let mut next = Vec::with_capacity(self.dim);
            for &(a, b) in p.pairs() {
                for (&u, &v) in view.row(a).iter().zip(view.row(b)) {
                    let k = next.len();
                    next.push(f64::from(e[k]) * (u + v));
                    next.push(f64::from(e[k + 1]) * (u - v));
                }
            }
            let row_len = if self.mode == Mode::Free { 1 } else { 2 * w };
            out.push(Layer { values: next, row_len });
        }
        Ok(out)
    }

    /// The `d x d` matrix `M` (row-major) with `S_J x = M x`, obtained by
    /// replaying the sign pattern of `x` on the canonical basis.
    /// `2^{-J/2} M` is orthogonal.
    pub fn transform_matrix(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let signs = self.sign_decomposition(x)?;
        let d = self.dim;
        let mut m = vec![vec![0.0; d]; d];
        let mut e = vec![0.0; d];
        for k in 0..d {
            e[k] = 1.0;
            let col = self.replay_linear(&e, &signs)?.pop().expect("at least one layer");
            for (i, v) in col.values.iter().enumerate() {
                m[i][k] = *v;
            }
            e[k] = 0.0;
        }
        Ok(m)
    }
}

/// Number of absolute values cascaded to compute coefficient `q` of a
/// structured layer at depth `j`: the popcount of `q`.
pub fn order_of(j: usize, q: usize) -> Result<u32> {
    if j >= usize::BITS as usize || q >> j != 0 {
        return Err(Error::IndexOutOfRange(format!("q = {q} is not below 2^{j}")));
    }
    Ok(q.count_ones())
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of order-`m` coefficients in a depth-`j` structured layer of
/// dimension `d`: `C(j, m) 2^-j d`.
pub fn count_of_order(j: usize, m: usize, d: usize) -> Result<usize> {
    if !is_power_of_two(d) {
        return Err(Error::NotPowerOfTwo(d));
    }
    if m > j || j > log2(d) {
        return Err(Error::IndexOutOfRange(format!("order {m} at depth {j} with d = {d}")));
    }
    Ok(binomial(j, m) * (d >> j))
}

/// The set of depths `j_1 < ... < j_m` at which the absolute differences
/// contributing to coefficient `q` of depth `j` were taken (`q = sum 2^{j - j_k}`).
pub fn difference_depths(j: usize, q: usize) -> Result<BTreeSet<usize>> {
    order_of(j, q)?;
    Ok((0..j).filter(|b| q >> b & 1 == 1).map(|b| j - b).collect())
}
