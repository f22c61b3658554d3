mod common;

use haarscat::classify::{error_rate, Classifier, KernelClassifier, KernelConfig};
use haarscat::features::{build_features, build_features_from, normalize, FeatureMatrix};
use haarscat::io::ModelFile;
use haarscat::learn::{train_bagged, TrainConfig};
use haarscat::pipeline::{Pipeline, PipelineConfig};
use haarscat::select::ols_select;
use haarscat::{HaarNetwork, Mode};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn feature_columns_match_forward_outputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let batch: Vec<Vec<f64>> = (0..24).map(|_| (0..64).map(|_| rng.random::<f64>()).collect()).collect();
    let model = train_bagged(&batch, 3, &TrainConfig::new(4, Mode::Structured)).unwrap();
    let f = build_features(&model, &batch, Some(2)).unwrap();
    // 4 rows, 1 + 4 + 6 coefficients of order <= 2, 3 transforms, constant.
    assert_eq!(f.cols(), 3 * 4 * 11 + 1);
    for p in (0..f.cols() - 1).step_by(7) {
        let key = f.key(p).unwrap();
        assert!(key.q.count_ones() <= 2);
        for i in [0, 5, 23] {
            let layers = model.transforms[key.transform].forward(&batch[i]).unwrap();
            assert_eq!(f.get(i, p), layers[4].get(key.row, key.q));
        }
    }
    assert!(f.key(f.bias_column()).is_none());
    assert!((0..24).all(|i| f.get(i, f.bias_column()) == 1.0));
    assert!(build_features(&model, &[vec![1.0; 32]], None).is_err());
}

#[test]
fn free_networks_reject_order_caps() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let net = HaarNetwork::random(Mode::Free, 8, 2, &mut rng).unwrap();
    assert!(build_features_from(std::slice::from_ref(&net), &[vec![1.0; 8]], Some(1)).is_err());
    assert_eq!(build_features_from(&[net], &[vec![1.0; 8]], None).unwrap().cols(), 9);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn ols_residuals_and_decorrelation() {
    for seed in 0..100 {
        let (rows, labels) = common::ols_problem(seed, 40, 12, 3);
        let f = FeatureMatrix::from_rows(&rows).unwrap();
        let s = ols_select(&f, &labels, 6).unwrap();
        let u = s.project(&f).unwrap();
        for (c, sel) in s.classes.iter().enumerate() {
            let target: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l == c))).collect();
            let energy = dot(&target, &target);
            let mut distinct = sel.indices.clone();
            distinct.sort_unstable();
            distinct.dedup();
            assert_eq!(distinct.len(), sel.indices.len());
            assert_eq!(sel.indices[0], common::best_single_feature(&rows, &labels, c), "seed {seed}");
            let cols: Vec<Vec<f64>> = (0..6).map(|l| u.iter().map(|r| r[c * 6 + l]).collect()).collect();
            for l in 0..6 {
                // Residual of the least squares fit on the first l + 1 features.
                let fit: Vec<f64> = (0..40)
                    .map(|i| (0..=l).map(|m| dot(&target, &cols[m]) * cols[m][i]).sum())
                    .collect();
                let direct: f64 = target.iter().zip(&fit).map(|(a, b)| (a - b).powi(2)).sum();
                let identity = energy - sel.alpha[..=l].iter().map(|a| a * a).sum::<f64>();
                assert!((direct - identity).abs() < 1e-8, "seed {seed}");
                assert!((sel.residuals[l] - identity).abs() < 1e-8);
                if l > 0 {
                    assert!(sel.residuals[l] <= sel.residuals[l - 1] + 1e-12);
                }
                for m in 0..=l {
                    let want = if m == l { 1.0 } else { 0.0 };
                    assert!((dot(&cols[l], &cols[m]) - want).abs() < 1e-8);
                }
            }
        }
    }
}

#[test]
fn ols_is_deterministic() {
    let (rows, labels) = common::ols_problem(7, 60, 20, 4);
    let f = FeatureMatrix::from_rows(&rows).unwrap();
    assert_eq!(ols_select(&f, &labels, 8).unwrap(), ols_select(&f, &labels, 8).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn selection_ignores_feature_scale(seed in 0u64..1000, c in 0.001f64..1000.0) {
        let (rows, labels) = common::ols_problem(seed, 30, 9, 2);
        let f = FeatureMatrix::from_rows(&rows).unwrap();
        let a = ols_select(&f, &labels, 5).unwrap();
        let b = ols_select(&f.scaled(c), &labels, 5).unwrap();
        for (x, y) in a.classes.iter().zip(&b.classes) {
            prop_assert_eq!(&x.indices, &y.indices);
        }
    }

    #[test]
    fn normalized_vectors_have_unit_norm(v in proptest::collection::vec(-100.0f64..100.0, 1..50)) {
        let (u, zero) = normalize(&v);
        if !zero {
            prop_assert!((dot(&u, &u).sqrt() - 1.0).abs() < 1e-12);
        }
    }
}

fn clouds(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let points = labels
        .iter()
        .map(|&l| {
            let cx = if l == 0 { -1.0 } else { 1.0 };
            vec![cx + rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8)]
        })
        .collect();
    (points, labels)
}

#[test]
fn kernel_classifier_agrees_with_svm_reference() {
    let (train, labels) = clouds(1, 20);
    let (test, _) = clouds(2, 400);
    let clf = KernelClassifier::fit(KernelConfig::default(), &train, &labels, 2).unwrap();
    let ours = clf.predict(&test).unwrap();
    let reference = common::svm_reference(&train, &labels, &test, 1.0, 10.0);
    let agreement = 1.0 - error_rate(&ours, &reference);
    assert!(agreement >= 0.95, "agreement {agreement}");
    let on_train = common::svm_reference(&train, &labels, &train, 1.0, 10.0);
    assert_eq!(clf.predict(&train).unwrap(), on_train);
}

#[test]
fn separable_clouds_are_learned() {
    let (train, labels) = clouds(4, 40);
    let far: Vec<Vec<f64>> = train.iter().map(|p| vec![p[0] * 3.0, p[1]]).collect();
    let clf = KernelClassifier::fit(KernelConfig::default(), &far, &labels, 2).unwrap();
    assert_eq!(clf.predict(&far).unwrap(), labels);
}

#[test]
fn pipeline_on_synthetic_signals() {
    // Two classes of 16-pixel signals: a bump on the left or on the right.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let make = |l: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..16)
            .map(|k| {
                let bump = if (k < 8) == (l == 0) { 1.0 } else { 0.0 };
                bump + rng.random_range(0.0..0.5)
            })
            .collect()
    };
    let labels: Vec<usize> = (0..60).map(|i| i % 2).collect();
    let images: Vec<Vec<f64>> = labels.iter().map(|&l| make(l, &mut rng)).collect();
    let model = train_bagged(&images, 2, &TrainConfig::new(3, Mode::Structured)).unwrap();
    let cfg = PipelineConfig { target_dim: 10, ..PipelineConfig::default() };
    let p = Pipeline::fit(model.transforms.clone(), &images, &labels, &cfg).unwrap();
    let test_labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
    let test: Vec<Vec<f64>> = test_labels.iter().map(|&l| make(l, &mut rng)).collect();
    assert!(error_rate(&p.predict(&test).unwrap(), &test_labels) <= 0.05);
    assert!(p.embed(&test).unwrap().iter().all(|u| (dot(u, u) - 1.0).abs() < 1e-12));

    let file = ModelFile::from_bagged(&model).unwrap().with_pipeline(&p).unwrap();
    let text = file.to_json().unwrap();
    let loaded = ModelFile::from_json(&text).unwrap();
    assert_eq!(loaded.to_json().unwrap(), text);
    let restored = loaded.pipeline().unwrap().unwrap();
    assert_eq!(restored.predict(&test).unwrap(), p.predict(&test).unwrap());
    assert!(ModelFile::from_bagged(&model).unwrap().pipeline().unwrap().is_none());
}
