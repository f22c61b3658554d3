//! Hand-built structured pairings for images on a known grid.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scatter::{is_power_of_two, HaarNetwork, Mode, Pairing};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Horizontal neighbours first, then vertical, alternating.
    Axis,
    /// Coordinates are sheared (`c - r`) so that the first merge joins
    /// diagonal neighbours; blocks are parallelograms.
    Diagonal,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Axis => "axis",
            Orientation::Diagonal => "diagonal",
        })
    }
}

impl FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "axis" => Ok(Orientation::Axis),
            "diagonal" => Ok(Orientation::Diagonal),
            _ => Err(Error::InvalidArgument(format!("unknown orientation {s:?}"))),
        }
    }
}

/// Pairs neighbouring blocks of a row-major `height x width` image, one
/// axis per level, alternating. Blocks live on a torus shifted by
/// `shift = (rows, cols)`, so a nonzero shift moves block borders and
/// wraps the last row or column around. Once one axis is fully merged the
/// other one is used.
pub fn grid_pairings(
    height: usize,
    width: usize,
    shift: (usize, usize),
    orientation: Orientation,
    depth: usize,
) -> Result<HaarNetwork> {
    for n in [height, width] {
        if !is_power_of_two(n) {
            return Err(Error::NotPowerOfTwo(n));
        }
    }
    if depth > (height * width).trailing_zeros() as usize {
        return Err(Error::InvalidNetwork(format!("depth {depth} exceeds log2({})", height * width)));
    }
    let (h, w) = (height as i64, width as i64);
    let diag = i64::from(orientation == Orientation::Diagonal);
    let mut coords: Vec<(usize, usize)> = (0..height * width)
        .map(|p| {
            let (r, c) = ((p / width) as i64, (p % width) as i64);
            let u = (r - shift.0 as i64).rem_euclid(h) as usize;
            let v = (c - diag * r - shift.1 as i64).rem_euclid(w) as usize;
            (u, v)
        })
        .collect();
    let (mut bh, mut bw) = (height, width);
    let mut merge_rows = orientation == Orientation::Diagonal;
    let mut layers = Vec::with_capacity(depth);
    for _ in 0..depth {
        let rows_now = if bh == 1 {
            false
        } else if bw == 1 {
            true
        } else {
            merge_rows
        };
        let mut index = vec![0; bh * bw];
        coords.iter().enumerate().for_each(|(n, &(u, v))| index[u * bw + v] = n);
        let mut pairs = Vec::with_capacity(coords.len() / 2);
        if rows_now {
            for u in (0..bh).step_by(2) {
                for v in 0..bw {
                    pairs.push((index[u * bw + v], index[(u + 1) * bw + v]));
                }
            }
            bh /= 2;
        } else {
            for u in 0..bh {
                for v in (0..bw).step_by(2) {
                    pairs.push((index[u * bw + v], index[u * bw + v + 1]));
                }
            }
            bw /= 2;
        }
        let p = Pairing::new(coords.len(), pairs)?;
        coords = p
            .pairs()
            .iter()
            .map(|&(a, _)| {
                let (u, v) = coords[a];
                if rows_now {
                    (u / 2, v)
                } else {
                    (u, v / 2)
                }
            })
            .collect();
        layers.push(p);
        merge_rows = !rows_now;
    }
    HaarNetwork::new(Mode::Structured, height * width, layers)
}

fn bit_reverse2(v: usize) -> usize {
    ((v & 1) << 1) | ((v >> 1) & 1)
}

/// Shift and orientation of known-geometry variant `t`: orientations
/// alternate, and shifts walk `{0..3}^2` in bit-reversed order so that the
/// first variants are spread out.
pub fn grid_variant(t: usize) -> ((usize, usize), Orientation) {
    let orientation = if t % 2 == 0 { Orientation::Axis } else { Orientation::Diagonal };
    let s = t / 2;
    let shift = (bit_reverse2(s % 4), bit_reverse2((s % 4 + s / 4) % 4));
    (shift, orientation)
}

/// The first `t` variants.
pub fn grid_networks(height: usize, width: usize, depth: usize, t: usize) -> Result<Vec<HaarNetwork>> {
    (0..t)
        .map(|k| {
            let (shift, orientation) = grid_variant(k);
            grid_pairings(height, width, shift, orientation, depth)
        })
        .collect()
}
