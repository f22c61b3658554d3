//! Dyadic partitions induced by structured pairings, and the graph Haar
//! wavelets that live on them.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scatter::{HaarNetwork, InputCheck, Mode};

/// Vertex sets `V_{j,n}` for `j = 0..=J`.
///
/// Each set lists its vertices depth first: `V_{j+1,n}` is `V_{j,a}`
/// followed by `V_{j,b}` where `(a, b)` is pair `n` of layer `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicPartition {
    levels: Vec<Vec<Vec<usize>>>,
}

impl DyadicPartition {
    pub fn levels(&self) -> &[Vec<Vec<usize>>] {
        &self.levels
    }

    pub fn level(&self, j: usize) -> Option<&[Vec<usize>]> {
        self.levels.get(j).map(Vec::as_slice)
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.levels[0].len()
    }

    /// Index of the level-`j` set holding each vertex.
    pub fn membership(&self, j: usize) -> Vec<usize> {
        let mut owner = vec![0; self.dim()];
        for (n, set) in self.levels[j].iter().enumerate() {
            for &v in set {
                owner[v] = n;
            }
        }
        owner
    }
}

pub fn build_partition(net: &HaarNetwork) -> Result<DyadicPartition> {
    if net.mode() != Mode::Structured {
        return Err(Error::WrongMode);
    }
    let mut levels = vec![(0..net.dim()).map(|v| vec![v]).collect::<Vec<_>>()];
    for p in net.layers() {
        let prev = levels.last().expect("level 0 exists");
        let next = p
            .pairs()
            .iter()
            .map(|&(a, b)| prev[a].iter().chain(&prev[b]).copied().collect())
            .collect();
        levels.push(next);
    }
    Ok(DyadicPartition { levels })
}

/// `psi = 1_pos - 1_neg`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HaarWavelet {
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

impl HaarWavelet {
    pub fn to_dense(&self, d: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        self.pos.iter().for_each(|&i| v[i] = 1.0);
        self.neg.iter().for_each(|&i| v[i] = -1.0);
        v
    }

    /// `<x, psi>`.
    pub fn coefficient(&self, x: &[f64]) -> f64 {
        self.pos.iter().map(|&i| x[i]).sum::<f64>() - self.neg.iter().map(|&i| x[i]).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HaarWaveletBasis {
    dim: usize,
    /// Indicators of the top-level sets `V_{J,n}`.
    pub scaling: Vec<Vec<usize>>,
    /// `wavelets[j - 1][n]` is `psi_{j,n}` for `j = 1..=J`.
    pub wavelets: Vec<Vec<HaarWavelet>>,
}

impl HaarWaveletBasis {
    pub fn wavelet(&self, j: usize, n: usize) -> &HaarWavelet {
        &self.wavelets[j - 1][n]
    }

    /// All `d` basis vectors, wavelets by increasing scale, then scaling
    /// indicators.
    pub fn dense_vectors(&self) -> Vec<Vec<f64>> {
        let d = self.dim;
        let mut out: Vec<Vec<f64>> = self.wavelets.iter().flatten().map(|w| w.to_dense(d)).collect();
        for set in &self.scaling {
            let mut v = vec![0.0; d];
            set.iter().for_each(|&i| v[i] = 1.0);
            out.push(v);
        }
        out
    }
}

/// `psi_{j+1,n} = 1_{V_{j,a}} - 1_{V_{j,b}}` for pair `n = (a, b)` of layer `j`.
pub fn wavelet_basis(p: &DyadicPartition, net: &HaarNetwork) -> Result<HaarWaveletBasis> {
    if build_partition(net)? != *p {
        return Err(Error::InconsistentPartition);
    }
    let wavelets = net
        .layers()
        .iter()
        .enumerate()
        .map(|(j, pairing)| {
            pairing
                .pairs()
                .iter()
                .map(|&(a, b)| HaarWavelet {
                    pos: p.levels[j][a].clone(),
                    neg: p.levels[j][b].clone(),
                })
                .collect()
        })
        .collect();
    Ok(HaarWaveletBasis {
        dim: p.dim(),
        scaling: p.levels[net.depth()].clone(),
        wavelets,
    })
}

/// Depth `j_m` of the last absolute difference behind coefficient `q` of
/// layer `j` (`0` for `q = 0`).
pub fn last_difference_depth(j: usize, q: usize) -> usize {
    if q == 0 {
        0
    } else {
        j - q.trailing_zeros() as usize
    }
}

/// Checks that coefficient `q + 2^{j - j_next}` of `S_j x` equals the summed
/// absolute Haar wavelet coefficients, at scale `j_next`, of the order-`m`
/// layer `S_{j_m} x(., q 2^{j_m - j})` spread over its vertex sets (each
/// vertex of `V_{j_m,n}` carries `2^{-j_m}` of the row value). Returns
/// the largest discrepancy over the rows of `S_j x`.
pub fn verify_wavelet_identity(net: &HaarNetwork, x: &[f64], j: usize, q: usize, j_next: usize) -> Result<f64> {
    let partition = build_partition(net)?;
    if j > net.depth() || q >> j != 0 {
        return Err(Error::InadmissibleIndex(format!("q = {q} at depth {j} of a depth-{} network", net.depth())));
    }
    let jm = last_difference_depth(j, q);
    if !(jm < j_next && j_next <= j) {
        return Err(Error::InadmissibleIndex(format!(
            "scale {j_next} must lie in ({jm}, {j}] for q = {q} at depth {j}"
        )));
    }
    let layers = net.forward_with(x, InputCheck::Strict)?;
    let basis = wavelet_basis(&partition, net)?;

    // S_{j_m} x(., q_m) spread evenly over each vertex set, so that summing
    // over V_{j_m,n} gives back the row value.
    let qm = q >> (j - jm);
    let owner_m = partition.membership(jm);
    let share = 1.0 / (1u64 << jm) as f64;
    let spread: Vec<f64> = (0..net.dim()).map(|v| share * layers[jm].get(owner_m[v], qm)).collect();

    let owner_next = partition.membership(j_next);
    let coefficients: Vec<f64> = (0..net.dim() >> j_next)
        .map(|p| basis.wavelet(j_next, p).coefficient(&spread).abs())
        .collect();
    let target = q + (1 << (j - j_next));
    let mut worst = 0.0f64;
    for (n, set) in partition.levels[j].iter().enumerate() {
        let mut subsets: Vec<usize> = set.iter().map(|&v| owner_next[v]).collect();
        subsets.dedup();
        let rhs: f64 = subsets.iter().map(|&p| coefficients[p]).sum();
        worst = worst.max((layers[j].get(n, target) - rhs).abs());
    }
    Ok(worst)
}

/// Every admissible `(j, q, j_next)` of a network, for sweeping
/// [`verify_wavelet_identity`].
pub fn admissible_indices(depth: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for j in 1..=depth {
        for q in 0..1usize << j {
            for j_next in last_difference_depth(j, q) + 1..=j {
                out.push((j, q, j_next));
            }
        }
    }
    out
}

/// The `2^J x 2^J` matrix of +-1 with `S_J x(n, .) = M x|_{V_{J,n}}`, the
/// vertices of `V_{J,n}` taken in partition order. `M M^T = 2^J I`.
pub fn hadamard_of_output(net: &HaarNetwork, x: &[f64], n: usize) -> Result<Vec<Vec<f64>>> {
    if net.mode() != Mode::Structured {
        return Err(Error::WrongMode);
    }
    let rows = net.dim() >> net.depth();
    if n >= rows {
        return Err(Error::IndexOutOfRange(format!("row {n} of {rows}")));
    }
    let signs = net.sign_decomposition(x)?;

    fn build(net: &HaarNetwork, signs: &[Vec<i8>], j: usize, n: usize) -> Vec<Vec<f64>> {
        if j == 0 {
            return vec![vec![1.0]];
        }
        let (a, b) = net.layers()[j - 1].pairs()[n];
        let ma = build(net, signs, j - 1, a);
        let mb = build(net, signs, j - 1, b);
        let half = ma.len();
        let mut out = Vec::with_capacity(2 * half);
        for q in 0..half {
            let e = f64::from(signs[j - 1][n * 2 * half + 2 * q + 1]);
            out.push(ma[q].iter().chain(&mb[q]).copied().collect());
            out.push(ma[q].iter().copied().chain(mb[q].iter().map(|v| -v)).map(|v| e * v).collect());
        }
        out
    }
    Ok(build(net, &signs, net.depth(), n))
}

/// Undirected graph on `0..d` without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceGraph {
    adjacency: Vec<Vec<usize>>,
}

impl ReferenceGraph {
    pub fn from_edges(dim: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); dim];
        for (u, v) in edges {
            if u >= dim || v >= dim {
                return Err(Error::IndexOutOfRange(format!("edge ({u}, {v}) in a graph of {dim} vertices")));
            }
            if u == v {
                return Err(Error::InvalidArgument(format!("self-loop at {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(ReferenceGraph { adjacency })
    }

    /// `n ~ n +- 1 mod d`.
    pub fn ring(dim: usize) -> Self {
        let edges = (0..dim).map(|n| (n, (n + 1) % dim)).filter(|(a, b)| a != b);
        ReferenceGraph::from_edges(dim, edges).expect("ring edges are valid")
    }

    /// Row-major `height x width` grid where each pixel touches its 8 neighbours.
    pub fn grid8(height: usize, width: usize) -> Self {
        let mut edges = Vec::new();
        for r in 0..height {
            for c in 0..width {
                let u = r * width + c;
                if c + 1 < width {
                    edges.push((u, u + 1));
                }
                if r + 1 < height {
                    edges.push((u, u + width));
                    if c + 1 < width {
                        edges.push((u, u + width + 1));
                    }
                    if c > 0 {
                        edges.push((u, u + width - 1));
                    }
                }
            }
        }
        ReferenceGraph::from_edges(height * width, edges).expect("grid edges are valid")
    }

    /// One `u v` pair per line, 0-indexed; blank lines and `#` comments are
    /// skipped. Without `dim` the graph has `max index + 1` vertices.
    pub fn parse_edge_list(text: &str, dim: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("line {}: bad vertex {s:?}", lineno + 1)))
            };
            match fields.as_slice() {
                [u, v] => edges.push((parse(u)?, parse(v)?)),
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "line {}: expected two vertices",
                        lineno + 1
                    )))
                }
            }
        }
        let dim = dim.unwrap_or_else(|| edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0));
        ReferenceGraph::from_edges(dim, edges)
    }

    pub fn dim(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Whether `set` induces a connected subgraph (BFS). The empty set is
    /// treated as connected.
    pub fn is_connected(&self, set: &[usize]) -> bool {
        let Some(&start) = set.first() else {
            return true;
        };
        let mut inside = std::collections::HashSet::with_capacity(set.len());
        inside.extend(set.iter().copied());
        let mut seen = std::collections::HashSet::with_capacity(set.len());
        seen.insert(start);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if inside.contains(&v) && seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        seen.len() == inside.len()
    }
}

/// How a vertex set is judged connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    /// The set induces a connected subgraph.
    #[default]
    Induced,
    /// Both halves it was merged from are connected and some edge joins
    /// them. A half with no active vertex imposes no constraint.
    Mergewise,
}

/// Fraction of level-`j` sets that are connected in `g`. With a mask, sets
/// are first restricted to active vertices and sets left empty are not
/// counted. Returns `1.0` when no set is counted.
pub fn connectivity_fraction(
    p: &DyadicPartition,
    g: &ReferenceGraph,
    j: usize,
    mask: Option<&[bool]>,
    mode: Connectivity,
) -> Result<f64> {
    if g.dim() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: g.dim() });
    }
    if let Some(m) = mask {
        if m.len() != p.dim() {
            return Err(Error::DimensionMismatch { expected: p.dim(), found: m.len() });
        }
    }
    if j > p.depth() {
        return Err(Error::IndexOutOfRange(format!("level {j} of a depth-{} partition", p.depth())));
    }
    let active = |v: usize| mask.is_none_or(|m| m[v]);
    let restrict = |set: &[usize]| -> Vec<usize> { set.iter().copied().filter(|&v| active(v)).collect() };

    let flags: Vec<Option<bool>> = match mode {
        Connectivity::Induced => p.levels[j]
            .iter()
            .map(|set| {
                let s = restrict(set);
                (!s.is_empty()).then(|| g.is_connected(&s))
            })
            .collect(),
        Connectivity::Mergewise => {
            let mut flags: Vec<Option<bool>> = p.levels[0].iter().map(|s| active(s[0]).then_some(true)).collect();
            for level in 1..=j {
                let owner = p.membership(level - 1);
                flags = p.levels[level]
                    .iter()
                    .map(|set| {
                        // Depth-first order: the two merged halves are the two halves of the list.
                        let (left, right) = set.split_at(set.len() / 2);
                        match (flags[owner[left[0]]], flags[owner[right[0]]]) {
                            (None, None) => None,
                            (Some(a), None) | (None, Some(a)) => Some(a),
                            (Some(a), Some(b)) => {
                                let (l, r) = (restrict(left), restrict(right));
                                Some(a && b && l.iter().any(|&u| r.iter().any(|&v| g.contains(u, v))))
                            }
                        }
                    })
                    .collect();
            }
            flags
        }
    };
    let counted: Vec<bool> = flags.into_iter().flatten().collect();
    if counted.is_empty() {
        return Ok(1.0);
    }
    Ok(counted.iter().filter(|&&c| c).count() as f64 / counted.len() as f64)
}
