mod common;

use common::{bit_reverse, sylvester};
use haarscat::graph::{
    admissible_indices, build_partition, connectivity_fraction, hadamard_of_output, verify_wavelet_identity,
    wavelet_basis, Connectivity, ReferenceGraph,
};
use haarscat::{HaarNetwork, Mode};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_instance(rng: &mut ChaCha8Rng, max_log_d: usize) -> (HaarNetwork, Vec<f64>) {
    let log_d = rng.random_range(1..=max_log_d);
    let d = 1 << log_d;
    let depth = rng.random_range(0..=log_d);
    let net = HaarNetwork::random(Mode::Structured, d, depth, rng).unwrap();
    let x = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
    (net, x)
}

#[test]
fn partitions_are_valid_at_every_level() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let (net, _) = random_instance(&mut rng, 7);
        let p = build_partition(&net).unwrap();
        for (j, level) in p.levels().iter().enumerate() {
            let mut seen = vec![false; net.dim()];
            for set in level {
                assert_eq!(set.len(), 1 << j);
                for &v in set {
                    assert!(!std::mem::replace(&mut seen[v], true));
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }
}

#[test]
fn wavelets_form_an_orthogonal_basis() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..30 {
        let (net, x) = random_instance(&mut rng, 6);
        let d = net.dim();
        let p = build_partition(&net).unwrap();
        let vecs = wavelet_basis(&p, &net).unwrap().dense_vectors();
        assert_eq!(vecs.len(), d);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        for (i, a) in vecs.iter().enumerate() {
            for (k, b) in vecs.iter().enumerate() {
                let g = dot(a, b);
                if i == k {
                    assert_eq!(g, a.iter().filter(|v| **v != 0.0).count() as f64);
                } else {
                    assert_eq!(g, 0.0);
                }
            }
        }
        // Expansion in the basis reconstructs x.
        let mut y = vec![0.0; d];
        for v in &vecs {
            let c = dot(&x, v) / dot(v, v);
            y.iter_mut().zip(v).for_each(|(yi, vi)| *yi += c * vi);
        }
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn wavelet_identity_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..60 {
        let (net, x) = random_instance(&mut rng, 6);
        for (j, q, jn) in admissible_indices(net.depth()) {
            let err = verify_wavelet_identity(&net, &x, j, q, jn).unwrap();
            assert!(err <= 1e-10, "j={j} q={q} j_next={jn}: {err}");
        }
    }
}

#[test]
fn constant_signal_has_vanishing_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let net = HaarNetwork::random(Mode::Structured, 32, 4, &mut rng).unwrap();
    let x = vec![2.5; 32];
    let layers = net.forward(&x).unwrap();
    for (j, q, jn) in admissible_indices(4) {
        assert_eq!(verify_wavelet_identity(&net, &x, j, q, jn).unwrap(), 0.0);
        let target = q + (1 << (j - jn));
        assert!(layers[j].values().chunks(1 << j).all(|row| row[target] == 0.0));
    }
}

#[test]
fn hadamard_rows_replay_the_transform() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let (net, x) = random_instance(&mut rng, 6);
        let p = build_partition(&net).unwrap();
        let out = net.transform(&x, Default::default()).unwrap();
        let size = 1 << net.depth();
        for n in 0..out.rows() {
            let m = hadamard_of_output(&net, &x, n).unwrap();
            let xv: Vec<f64> = p.levels()[net.depth()][n].iter().map(|&v| x[v]).collect();
            for q in 0..size {
                assert!(m[q].iter().all(|v| v.abs() == 1.0));
                let mx: f64 = m[q].iter().zip(&xv).map(|(a, b)| a * b).sum();
                assert!((mx - out.get(n, q)).abs() < 1e-12);
                for r in 0..size {
                    let g: f64 = m[q].iter().zip(&m[r]).map(|(a, b)| a * b).sum();
                    assert_eq!(g, if q == r { size as f64 } else { 0.0 });
                }
            }
        }
    }
}

#[test]
fn linear_cascade_is_a_walsh_transform() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let (net, x) = random_instance(&mut rng, 6);
        let j = net.depth();
        let signs: Vec<Vec<i8>> = vec![vec![1; net.dim()]; j];
        let out = net.replay_linear(&x, &signs).unwrap().pop().unwrap();
        let p = build_partition(&net).unwrap();
        for (n, set) in p.levels()[j].iter().enumerate() {
            for q in 0..1 << j {
                let r = bit_reverse(q, j);
                let want: f64 = set.iter().enumerate().map(|(c, &v)| sylvester(r, c) * x[v]).sum();
                assert!((out.get(n, q) - want).abs() < 1e-12);
            }
        }
    }
}

fn bfs_connected(g: &ReferenceGraph, set: &[usize]) -> bool {
    let d = g.dim();
    let mut adj = vec![vec![false; d]; d];
    for u in 0..d {
        for v in 0..d {
            adj[u][v] = g.contains(u, v);
        }
    }
    let mut reached = vec![set[0]];
    let mut k = 0;
    while k < reached.len() {
        let u = reached[k];
        for &v in set {
            if adj[u][v] && !reached.contains(&v) {
                reached.push(v);
            }
        }
        k += 1;
    }
    reached.len() == set.len()
}

#[test]
fn induced_connectivity_matches_bfs_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = ReferenceGraph::grid8(4, 8);
    for _ in 0..20 {
        let net = HaarNetwork::random(Mode::Structured, 32, 5, &mut rng).unwrap();
        let p = build_partition(&net).unwrap();
        for j in 0..=5 {
            let sets = &p.levels()[j];
            let want = sets.iter().filter(|s| bfs_connected(&g, s)).count() as f64 / sets.len() as f64;
            let got = connectivity_fraction(&p, &g, j, None, Connectivity::Induced).unwrap();
            assert_eq!(got, want);
            // A set connected merge by merge is connected as a whole.
            let merged = connectivity_fraction(&p, &g, j, None, Connectivity::Mergewise).unwrap();
            assert!(merged <= got);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn identity_holds_for_any_seed(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (net, x) = random_instance(&mut rng, 5);
        for (j, q, jn) in admissible_indices(net.depth()) {
            prop_assert!(verify_wavelet_identity(&net, &x, j, q, jn).unwrap() <= 1e-10);
        }
    }
}
