use std::fmt;

use serde::{Deserialize, Serialize};

use super::blossom::max_weight_matching;
use super::cost::CostMatrix;
use crate::error::{Error, Result};
use crate::scatter::Pairing;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Matcher {
    /// Minimum-cost perfect matching (blossom algorithm).
    #[default]
    Exact,
    /// Ascending-cost edge scan.
    Greedy,
}

impl fmt::Display for Matcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Matcher::Exact => "exact",
            Matcher::Greedy => "greedy",
        })
    }
}

impl std::str::FromStr for Matcher {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Matcher::Exact),
            "greedy" => Ok(Matcher::Greedy),
            other => Err(Error::InvalidArgument(format!("unknown matcher {other:?}"))),
        }
    }
}

/// Perfect matching of minimum total cost.
///
/// Solved as a maximum-weight maximum-cardinality matching on the complete
/// graph with weights `max_cost - cost`. Among optimal matchings the result
/// is whatever the solver reaches first, which is deterministic.
pub fn match_exact(c: &CostMatrix) -> Result<Pairing> {
    let u = c.size();
    if u % 2 != 0 {
        return Err(Error::OddSize(u));
    }
    let mut top = 0.0f64;
    for a in 0..u {
        for b in a + 1..u {
            top = top.max(c.get(a, b));
        }
    }
    let mut edges = Vec::with_capacity(u * u.saturating_sub(1) / 2);
    for a in 0..u {
        for b in a + 1..u {
            edges.push((a, b, top - c.get(a, b)));
        }
    }
    let mates = max_weight_matching(u, &edges, true);
    let mates = mates
        .into_iter()
        .map(|m| m.ok_or_else(|| Error::InvalidPairing("matching is not perfect".into())))
        .collect::<Result<Vec<_>>>()?;
    Pairing::from_mates(&mates)
}

/// Scans pairs by ascending `(cost, a, b)` and keeps each pair whose ends
/// are both still free.
pub fn match_greedy(c: &CostMatrix) -> Result<Pairing> {
    let u = c.size();
    if u % 2 != 0 {
        return Err(Error::OddSize(u));
    }
    let mut edges = Vec::with_capacity(u * u.saturating_sub(1) / 2);
    for a in 0..u {
        for b in a + 1..u {
            edges.push((c.get(a, b), a, b));
        }
    }
    edges.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut used = vec![false; u];
    let mut pairs = Vec::with_capacity(u / 2);
    for (_, a, b) in edges {
        if !used[a] && !used[b] {
            used[a] = true;
            used[b] = true;
            pairs.push((a, b));
            if pairs.len() == u / 2 {
                break;
            }
        }
    }
    Pairing::new(u, pairs)
}

pub fn solve(c: &CostMatrix, matcher: Matcher) -> Result<Pairing> {
    match matcher {
        Matcher::Exact => match_exact(c),
        Matcher::Greedy => match_greedy(c),
    }
}
