//! Recovering a signal from free Haar scattering outputs computed with
//! interlaced pairings.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scatter::{forward_free_layer, unpair, Layer, Pairing};

/// Two pairings of the same units such that no strict non-empty subset is
/// closed under both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterlacedPairingSet {
    p0: Pairing,
    p1: Pairing,
}

impl InterlacedPairingSet {
    pub fn new(p0: Pairing, p1: Pairing) -> Result<Self> {
        if !check_interlaced(&p0, &p1)? {
            return Err(Error::InvalidPairing("pairings are not interlaced".into()));
        }
        Ok(InterlacedPairingSet { p0, p1 })
    }

    pub fn p0(&self) -> &Pairing {
        &self.p0
    }

    pub fn p1(&self) -> &Pairing {
        &self.p1
    }

    pub fn get(&self, which: bool) -> &Pairing {
        if which {
            &self.p1
        } else {
            &self.p0
        }
    }

    pub fn size(&self) -> usize {
        self.p0.size()
    }

    /// Renaming units preserves interlacing.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        Ok(InterlacedPairingSet {
            p0: self.p0.relabel(perm)?,
            p1: self.p1.relabel(perm)?,
        })
    }
}

/// `p0 = {(2n, 2n+1)}`, `p1 = {(2n+1, 2n+2 mod d)}`.
pub fn make_interlaced(d: usize) -> Result<InterlacedPairingSet> {
    if d % 2 != 0 {
        return Err(Error::OddSize(d));
    }
    if d < 4 {
        return Err(Error::TooSmall(d));
    }
    let p0 = Pairing::neighbors(d)?;
    let p1 = Pairing::new(d, (0..d / 2).map(|n| (2 * n + 1, (2 * n + 2) % d)))?;
    InterlacedPairingSet::new(p0, p1)
}

/// The shift construction under a uniformly random relabeling.
pub fn random_interlaced<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<InterlacedPairingSet> {
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(rng);
    make_interlaced(d)?.relabel(&perm)
}

/// True iff the union of both pair sets connects all units.
pub fn check_interlaced(p0: &Pairing, p1: &Pairing) -> Result<bool> {
    if p0.size() != p1.size() {
        return Err(Error::DimensionMismatch { expected: p0.size(), found: p1.size() });
    }
    let d = p0.size();
    if d == 0 {
        return Ok(true);
    }
    let (m0, m1) = (p0.mates(), p1.mates());
    let mut seen = vec![false; d];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for u in [m0[v], m1[v]] {
            if !std::mem::replace(&mut seen[u], true) {
                count += 1;
                stack.push(u);
            }
        }
    }
    Ok(count == d)
}

// Unordered value pair of each unit's pair, indexed by unit.
fn value_pairs(s: &[f64], p: &Pairing) -> Result<Vec<(f64, f64)>> {
    if s.len() != p.size() {
        return Err(Error::DimensionMismatch { expected: p.size(), found: s.len() });
    }
    let mut out = vec![(0.0, 0.0); p.size()];
    for (n, &(a, b)) in p.pairs().iter().enumerate() {
        let v = unpair(s[2 * n], s[2 * n + 1]);
        out[a] = v;
        out[b] = v;
    }
    Ok(out)
}

/// Recovers the layer input from its two outputs `s0` (through `p0`) and
/// `s1` (through `p1`).
///
/// Each connected piece of the union graph is a cycle alternating `p0` and
/// `p1` pairs. Fixing the value of one unit determines the whole cycle, so
/// both candidate values of a start unit are propagated and checked.
pub fn invert_layer(s0: &[f64], s1: &[f64], pairings: &InterlacedPairingSet) -> Result<Vec<f64>> {
    let d = pairings.size();
    let v0 = value_pairs(s0, &pairings.p0)?;
    let v1 = value_pairs(s1, &pairings.p1)?;
    let scale = v0.iter().chain(&v1).fold(1.0f64, |m, &(hi, lo)| m.max(hi.abs()).max(lo.abs()));
    let tol = 1e-9 * scale;
    let close = |a: f64, b: f64| (a - b).abs() <= tol;
    // The other member of an unordered pair, if `y` belongs to it.
    let other = |(hi, lo): (f64, f64), y: f64| {
        if close(y, hi) {
            Some(lo)
        } else if close(y, lo) {
            Some(hi)
        } else {
            None
        }
    };
    let (m0, m1) = (pairings.p0.mates(), pairings.p1.mates());

    let mut x = vec![f64::NAN; d];
    let mut done = vec![false; d];
    for start in 0..d {
        if done[start] {
            continue;
        }
        let (hi, lo) = v0[start];
        let candidates: &[f64] = if close(hi, lo) { &[hi] } else { &[hi, lo] };
        let mut solutions: Vec<Vec<(usize, f64)>> = Vec::new();
        for &first in candidates {
            let mut walk = vec![(start, first)];
            let (mut v, mut val) = (start, first);
            let ok = loop {
                // Across the p0 pair, then across the p1 pair.
                let Some(next) = other(v0[v], val) else { break false };
                let u = m0[v];
                if u == start {
                    break close(next, first);
                }
                walk.push((u, next));
                let Some(next) = other(v1[u], next) else { break false };
                let w = m1[u];
                if w == start {
                    break close(next, first);
                }
                walk.push((w, next));
                v = w;
                val = next;
            };
            if ok {
                solutions.push(walk);
            }
        }
        let walk = match solutions.as_slice() {
            [] => return Err(Error::InconsistentInputs),
            [only] => only,
            [a, b] => {
                if a.iter().zip(b).any(|(p, q)| !close(p.1, q.1)) {
                    return Err(Error::AmbiguousReconstruction);
                }
                a
            }
            _ => unreachable!("at most two starting values"),
        };
        for &(u, val) in walk {
            x[u] = val;
            done[u] = true;
        }
    }
    Ok(x)
}

/// Outputs `S_J x` of the `2^J` free cascades obtained by choosing, at
/// each layer `k`, pairing `p1` when bit `k` of the index is set.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformBag {
    depth: usize,
    outputs: Vec<Vec<f64>>,
}

impl TransformBag {
    pub fn new(depth: usize, outputs: Vec<Vec<f64>>) -> Result<Self> {
        if outputs.len() != 1 << depth {
            return Err(Error::DimensionMismatch { expected: 1 << depth, found: outputs.len() });
        }
        if let Some(first) = outputs.first() {
            if outputs.iter().any(|o| o.len() != first.len()) {
                return Err(Error::ShapeMismatch);
            }
        }
        Ok(TransformBag { depth, outputs })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn outputs(&self) -> &[Vec<f64>] {
        &self.outputs
    }

    pub fn get(&self, eps: usize) -> &[f64] {
        &self.outputs[eps]
    }
}

/// Works for any even dimension, not only powers of two.
pub fn forward_bag(x: &[f64], layers: &[InterlacedPairingSet]) -> Result<TransformBag> {
    let outputs = (0..1usize << layers.len())
        .into_par_iter()
        .map(|eps| {
            let mut s = Layer::flat(x.to_vec());
            for (k, set) in layers.iter().enumerate() {
                s = forward_free_layer(&s, set.get(eps >> k & 1 == 1))?;
            }
            Ok(s.into_values())
        })
        .collect::<Result<Vec<_>>>()?;
    TransformBag::new(layers.len(), outputs)
}

/// Inverts the bag one layer at a time, from the top: the outputs at
/// indices `e` and `e | 2^k` share their first `k` layers and differ only
/// in the pairing of layer `k`.
pub fn reconstruct(bag: &TransformBag, layers: &[InterlacedPairingSet]) -> Result<Vec<f64>> {
    if layers.len() != bag.depth {
        return Err(Error::DimensionMismatch { expected: bag.depth, found: layers.len() });
    }
    let mut current = bag.outputs.clone();
    for k in (0..bag.depth).rev() {
        let half = 1 << k;
        current = (0..half)
            .map(|eps| invert_layer(&current[eps], &current[eps | half], &layers[k]))
            .collect::<Result<_>>()?;
    }
    Ok(current.pop().unwrap_or_default())
}
