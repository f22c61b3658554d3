// Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use haarscat::learn::CostMatrix;

/// Every perfect matching of `0..n`, each listed as pairs with the smaller
/// free vertex first.
pub fn all_pairings(n: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(free: &[usize], acc: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if free.is_empty() {
            out.push(acc.clone());
            return;
        }
        for k in 1..free.len() {
            acc.push((free[0], free[k]));
            let rest: Vec<usize> = free[1..].iter().copied().filter(|&v| v != free[k]).collect();
            rec(&rest, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    rec(&(0..n).collect::<Vec<_>>(), &mut Vec::new(), &mut out);
    out
}

/// Minimum total cost over all perfect matchings, by exhaustive search.
pub fn brute_force_min(c: &CostMatrix) -> f64 {
    fn rec(c: &CostMatrix, free: &mut Vec<usize>) -> f64 {
        if free.is_empty() {
            return 0.0;
        }
        let a = free.remove(0);
        let mut best = f64::INFINITY;
        for k in 0..free.len() {
            let b = free.remove(k);
            best = best.min(c.get(a, b) + rec(c, free));
            free.insert(k, b);
        }
        free.insert(0, a);
        best
    }
    rec(c, &mut (0..c.size()).collect())
}

/// Sylvester-ordered Hadamard entry `(-1)^popcount(r & c)`.
pub fn sylvester(r: usize, c: usize) -> f64 {
    if (r & c).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn bit_reverse(v: usize, bits: usize) -> usize {
    (0..bits).fold(0, |acc, b| acc | (((v >> b) & 1) << (bits - 1 - b)))
}

pub fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// A random selection problem: `n` samples of `p` features, a few of them
/// noisy copies of the class indicators, and `classes` labels.
pub fn ols_problem(seed: u64, n: usize, p: usize, classes: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|i| if i < classes { i } else { rng.random_range(0..classes) }).collect();
    let rows = labels
        .iter()
        .map(|&l| {
            (0..p)
                .map(|k| {
                    let signal = if k % 3 == 0 && k / 3 % classes == l { 1.0 } else { 0.0 };
                    signal + rng.random_range(0.0..1.0)
                })
                .collect()
        })
        .collect();
    (rows, labels)
}

/// Best single feature for class `c` under per-feature centering (except
/// the trailing constant column) and unit normalization, by direct search.
pub fn best_single_feature(rows: &[Vec<f64>], labels: &[usize], c: usize) -> usize {
    let n = rows.len() as f64;
    let p = rows[0].len() + 1;
    let f: Vec<f64> = labels.iter().map(|&l| if l == c { 1.0 } else { 0.0 }).collect();
    let mut best = (0, f64::NEG_INFINITY);
    for k in 0..p {
        let col: Vec<f64> = rows.iter().map(|r| if k + 1 == p { 1.0 } else { r[k] }).collect();
        let mean = if k + 1 == p { 0.0 } else { col.iter().sum::<f64>() / n };
        let centered: Vec<f64> = col.iter().map(|v| v - mean).collect();
        let norm2: f64 = centered.iter().map(|v| v * v).sum();
        if norm2 < 1e-20 {
            continue;
        }
        let corr: f64 = centered.iter().zip(&f).map(|(a, b)| a * b).sum();
        let score = corr * corr / norm2;
        if score > best.1 + 1e-12 {
            best = (k, score);
        }
    }
    best.0
}

/// Labels of a hinge-loss kernel SVM without bias, solved exactly in the
/// dual by coordinate ascent (`0 <= a_i <= cap`).
pub fn svm_reference(train: &[Vec<f64>], labels: &[usize], test: &[Vec<f64>], sigma: f64, cap: f64) -> Vec<usize> {
    let k = |a: &[f64], b: &[f64]| {
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        (-d2 / (2.0 * sigma * sigma)).exp()
    };
    let n = train.len();
    let y: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let gram: Vec<Vec<f64>> = train.iter().map(|a| train.iter().map(|b| k(a, b)).collect()).collect();
    let mut alpha = vec![0.0; n];
    for _ in 0..20_000 {
        let mut change = 0.0f64;
        for i in 0..n {
            let f: f64 = (0..n).map(|j| alpha[j] * y[j] * gram[i][j]).sum();
            let next = (alpha[i] + (1.0 - y[i] * f) / gram[i][i]).clamp(0.0, cap);
            change = change.max((next - alpha[i]).abs());
            alpha[i] = next;
        }
        if change < 1e-12 {
            break;
        }
    }
    test.iter()
        .map(|x| {
            let f: f64 = (0..n).map(|j| alpha[j] * y[j] * k(x, &train[j])).sum();
            usize::from(f > 0.0)
        })
        .collect()
}
