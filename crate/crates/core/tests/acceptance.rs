//! End-to-end acceptance run. Prints one PASS or FAIL line per criterion
//! and exits with status 1 if any criterion fails.

mod common;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use haarscat::experiment::{
    mnist_runs, run_mnist_pipeline, run_reconstruct, run_ring_recovery, run_variance_table, ExperimentReport,
    GeometryChoice, MnistConfig, ReconstructConfig, RingRecoveryConfig, VarianceConfig,
};
use haarscat::features::FeatureMatrix;
use haarscat::graph::{admissible_indices, hadamard_of_output, verify_wavelet_identity};
use haarscat::inverse::{forward_bag, make_interlaced, random_interlaced, reconstruct};
use haarscat::io::ModelFile;
use haarscat::learn::{match_exact, train_bagged, CostMatrix, Matcher, Norm, TrainConfig};
use haarscat::pipeline::{Pipeline, PipelineConfig};
use haarscat::select::ols_select;
use haarscat::{Error, HaarNetwork, InputCheck, Layer, Mode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn desk() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("testdata/mnist-desk")
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn random_mode(rng: &mut ChaCha8Rng) -> Mode {
    if rng.random_bool(0.5) {
        Mode::Free
    } else {
        Mode::Structured
    }
}

fn random_network(rng: &mut ChaCha8Rng, min_log: usize, max_log: usize) -> HaarNetwork {
    let log_d = rng.random_range(min_log..=max_log);
    let depth = rng.random_range(0..=log_d);
    let mode = random_mode(rng);
    HaarNetwork::random(mode, 1 << log_d, depth, rng).unwrap()
}

fn signal(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(0.0..1.0)).collect()
}

fn within(limit: Duration, elapsed: Duration) -> Result<(), String> {
    if elapsed > limit {
        return Err(format!("took {:.1} s, limit {:.0} s", elapsed.as_secs_f64(), limit.as_secs_f64()));
    }
    Ok(())
}

fn norm_preservation() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let net = random_network(&mut rng, 2, 8);
        let x = signal(&mut rng, net.dim());
        let s = net.transform(&x, InputCheck::Strict).map_err(|e| e.to_string())?;
        let want = 2f64.powf(net.depth() as f64 / 2.0) * norm(&x);
        worst = worst.max((s.norm() - want).abs() / want);
    }
    within(Duration::from_secs(10), start.elapsed())?;
    if worst > 1e-10 {
        return Err(format!("relative error {worst:.2e}"));
    }
    Ok(format!("max relative error {worst:.1e}"))
}

fn contraction() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut slack = f64::INFINITY;
    for _ in 0..1000 {
        let net = random_network(&mut rng, 2, 8);
        let x = signal(&mut rng, net.dim());
        let y = signal(&mut rng, net.dim());
        let sx = net.transform(&x, InputCheck::Strict).map_err(|e| e.to_string())?;
        let sy = net.transform(&y, InputCheck::Strict).map_err(|e| e.to_string())?;
        let diff: Vec<f64> = sx.values().iter().zip(sy.values()).map(|(a, b)| a - b).collect();
        let dx: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let bound = 2f64.powf(net.depth() as f64 / 2.0) * norm(&dx) + 1e-12;
        slack = slack.min(bound - norm(&diff));
    }
    within(Duration::from_secs(10), start.elapsed())?;
    if slack < 0.0 {
        return Err(format!("bound exceeded by {:.2e}", -slack));
    }
    Ok("1000 pairs within bound".into())
}

fn matching_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst = 0.0f64;
    for k in 0..500 {
        let size = 4 + 2 * (k % 4);
        let mut w = vec![0.0; size * size];
        for a in 0..size {
            for b in a + 1..size {
                let v = if k % 3 == 0 { f64::from(rng.random_range(0..4u8)) } else { rng.random_range(0.0..10.0) };
                w[a * size + b] = v;
                w[b * size + a] = v;
            }
        }
        let c = CostMatrix::new(size, w).map_err(|e| e.to_string())?;
        let p = match_exact(&c).map_err(|e| e.to_string())?;
        worst = worst.max((c.total(&p) - common::brute_force_min(&c)).abs());
    }
    within(Duration::from_secs(30), start.elapsed())?;
    if worst > 1e-9 {
        return Err(format!("cost gap {worst:.2e}"));
    }
    Ok("500 matrices, sizes 4-10".into())
}

fn wavelet_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst = 0.0f64;
    let mut checks = 0;
    for _ in 0..200 {
        let log_d = rng.random_range(1..=6);
        let depth = rng.random_range(1..=log_d);
        let net = HaarNetwork::random(Mode::Structured, 1 << log_d, depth, &mut rng).unwrap();
        let x = signal(&mut rng, net.dim());
        for (j, q, jn) in admissible_indices(depth) {
            worst = worst.max(verify_wavelet_identity(&net, &x, j, q, jn).map_err(|e| e.to_string())?);
            checks += 1;
        }
    }
    within(Duration::from_secs(60), start.elapsed())?;
    if worst > 1e-10 {
        return Err(format!("discrepancy {worst:.2e}"));
    }
    Ok(format!("{checks} index triples, max discrepancy {worst:.1e}"))
}

fn hadamard() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let log_d = rng.random_range(1..=6);
        let depth = rng.random_range(0..=log_d);
        let net = HaarNetwork::random(Mode::Structured, 1 << log_d, depth, &mut rng).unwrap();
        let x = signal(&mut rng, net.dim());
        let n = rng.random_range(0..net.dim() >> depth);
        let m = hadamard_of_output(&net, &x, n).map_err(|e| e.to_string())?;
        let size = 1usize << depth;
        if m.len() != size || m.iter().any(|r| r.len() != size || r.iter().any(|v| v.abs() != 1.0)) {
            return Err("entries are not +-1".into());
        }
        for q in 0..size {
            for r in 0..size {
                let g: f64 = m[q].iter().zip(&m[r]).map(|(a, b)| a * b).sum();
                let want = if q == r { size as f64 } else { 0.0 };
                worst = worst.max((g - want).abs());
            }
        }
    }
    if worst > 1e-8 {
        return Err(format!("M M^T off by {worst:.2e}"));
    }
    Ok("200 instances".into())
}

fn reconstruction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let d = 1 << rng.random_range(2..=5);
        let depth = rng.random_range(1..=3);
        let layers = (0..depth)
            .map(|_| random_interlaced(d, &mut rng))
            .collect::<haarscat::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.01..1.0)).collect();
        let bag = forward_bag(&x, &layers).map_err(|e| e.to_string())?;
        let y = reconstruct(&bag, &layers).map_err(|e| e.to_string())?;
        worst = worst.max(x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    if worst > 1e-10 {
        return Err(format!("recovery error {worst:.2e}"));
    }
    let alternating: Vec<f64> = (0..16).map(|n| if n % 2 == 0 { 1.0 } else { 2.0 }).collect();
    let layers = vec![make_interlaced(16).map_err(|e| e.to_string())?];
    let bag = forward_bag(&alternating, &layers).map_err(|e| e.to_string())?;
    match reconstruct(&bag, &layers) {
        Err(Error::AmbiguousReconstruction) => Ok(format!("max error {worst:.1e}; alternating signal ambiguous")),
        other => Err(format!("alternating signal gave {other:?}")),
    }
}

/// Mean squared distance of a batch of layers to their mean, after
/// scaling every layer by `scale`.
fn batch_variance(layers: &[&Layer], scale: f64) -> f64 {
    let n = layers.len() as f64;
    let len = layers[0].len();
    let mut mean = vec![0.0; len];
    for l in layers {
        mean.iter_mut().zip(l.values()).for_each(|(m, v)| *m += scale * v / n);
    }
    layers
        .iter()
        .map(|l| l.values().iter().zip(&mean).map(|(v, m)| (scale * v - m).powi(2)).sum::<f64>())
        .sum::<f64>()
        / n
}

fn variance_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..200 {
        let net = random_network(&mut rng, 1, 7);
        let n = rng.random_range(2..=40);
        let outputs = (0..n)
            .map(|_| net.forward(&signal(&mut rng, net.dim())))
            .collect::<haarscat::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        let mut previous = f64::INFINITY;
        for j in 0..=net.depth() {
            let layers: Vec<&Layer> = outputs.iter().map(|o| &o[j]).collect();
            let v = batch_variance(&layers, 2f64.powf(-(j as f64) / 2.0));
            worst = worst.max(v - previous);
            previous = v;
        }
    }
    if worst > 1e-9 {
        return Err(format!("variance grew by {worst:.2e}"));
    }
    Ok("200 batches".into())
}

fn csv_rows(report: &ExperimentReport, table: &str) -> Vec<Vec<String>> {
    report
        .table(table)
        .unwrap_or_default()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn table_one() -> Outcome {
    let start = Instant::now();
    let report = run_variance_table(&VarianceConfig { depth: 5, dim: 1024, samples: 10_000, seed: 0 })
        .map_err(|e| e.to_string())?;
    let paper = [1.8, 1.4, 5.8e-1, 1.2e-1, 1.2e-2];
    let printed_model = [1.8, 1.3, 4.8e-1, 8.7e-2, 6.3e-3];
    let rows = csv_rows(&report, "variance");
    if rows.len() != 5 {
        return Err(format!("{} rows", rows.len()));
    }
    let mut measured = Vec::new();
    for (m, row) in rows.iter().enumerate() {
        let sigma: f64 = row[1].parse().map_err(|_| "bad sigma2")?;
        let model: f64 = row[2].parse().map_err(|_| "bad model value")?;
        let want = (1.0 - 2.0 / std::f64::consts::PI).powi(m as i32 + 1) * common::binomial(5, m as u64 + 1) as f64;
        if (model - want).abs() > 1e-12 * want {
            return Err(format!("model value {model} for m = {}, expected {want}", m + 1));
        }
        // Two significant digits, as printed.
        if (model - printed_model[m]).abs() > 0.05 * printed_model[m] {
            return Err(format!("model value {model} does not round to {}", printed_model[m]));
        }
        if (sigma - paper[m]).abs() > 0.25 * paper[m] {
            return Err(format!("sigma2 {sigma} for m = {}, table has {}", m + 1, paper[m]));
        }
        measured.push(format!("{sigma:.3}"));
    }
    within(Duration::from_secs(120), start.elapsed())?;
    Ok(format!("sigma2 = {}", measured.join(", ")))
}

fn ring_recovery() -> Outcome {
    let start = Instant::now();
    // Half-octave steps from 4 to 4096.
    let sizes: Vec<usize> = (0..=20).map(|k| (4.0 * 2f64.powf(k as f64 / 2.0)).round() as usize).collect();
    let cfg = RingRecoveryConfig { dims: vec![8, 16, 32, 64], sample_sizes: sizes, trials: 100, ..Default::default() };
    let report = run_ring_recovery(&cfg).map_err(|e| e.to_string())?;
    let tol = 2.0 / (cfg.trials as f64).sqrt();
    let rec = csv_rows(&report, "recovery");
    for &d in &cfg.dims {
        let rates: Vec<f64> = rec.iter().filter(|r| r[0] == d.to_string()).map(|r| r[3].parse().unwrap()).collect();
        let mut best = 0.0f64;
        for &r in &rates {
            if r < best - tol {
                return Err(format!("d = {d}: success drops from {best} to {r}"));
            }
            best = best.max(r);
        }
        if best < cfg.level {
            return Err(format!("d = {d}: success never reaches {}", cfg.level));
        }
    }
    let mut points = Vec::new();
    let mut shown = Vec::new();
    for row in csv_rows(&report, "frontier") {
        let d: f64 = row[0].parse().unwrap();
        let n_star: f64 = row[1].parse().map_err(|_| format!("d = {d}: no 0.8 crossing"))?;
        let bound: f64 = row[3].parse().map_err(|_| format!("d = {d}: no bound"))?;
        if n_star > bound {
            return Err(format!("d = {d}: N* = {n_star} above bound {bound:.0}"));
        }
        points.push((d.ln(), n_star.ln()));
        shown.push(format!("{d}:{n_star}"));
    }
    let k = points.len() as f64;
    let (mx, my) = (points.iter().map(|p| p.0).sum::<f64>() / k, points.iter().map(|p| p.1).sum::<f64>() / k);
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    if slope >= 2.0 {
        return Err(format!("log-log slope {slope:.2}"));
    }
    within(Duration::from_secs(600), start.elapsed())?;
    Ok(format!("N* = {}, log-log slope {slope:.2}", shown.join(" ")))
}

fn mnist() -> Outcome {
    let start = Instant::now();
    let known = mnist_runs(&MnistConfig::desk(desk(), GeometryChoice::Known)).map_err(|e| e.to_string())?;
    let test_error = known[0].test_error;
    let scrambled = mnist_runs(&MnistConfig::desk(desk(), GeometryChoice::Scrambled)).map_err(|e| e.to_string())?;
    let conn = &scrambled[0].connectivity;
    // Pooled over the transforms, which all have the same number of sets.
    let levels: Vec<f64> = (1..=3)
        .map(|j| conn.iter().map(|t| t[j].0).sum::<f64>() / conn.len() as f64)
        .collect();
    let summary = format!(
        "known test error {test_error:.3}; scrambled test error {:.3}, connectivity at levels 1-3 {:.3} {:.3} {:.3}",
        scrambled[0].test_error, levels[0], levels[1], levels[2]
    );
    within(Duration::from_secs(600), start.elapsed())?;
    if test_error > 0.10 {
        return Err(format!("{summary}; error above 0.10"));
    }
    if let Some(j) = levels.iter().position(|&c| c < 0.9) {
        return Err(format!("{summary}; level {} below 0.9", j + 1));
    }
    Ok(summary)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn ols() -> Outcome {
    let mut worst_identity = 0.0f64;
    for seed in 0..100 {
        let (n, p, classes, k) = (30 + seed as usize % 20, 8 + seed as usize % 9, 2 + seed as usize % 3, 6);
        let (rows, labels) = common::ols_problem(1000 + seed, n, p, classes);
        let f = FeatureMatrix::from_rows(&rows).map_err(|e| e.to_string())?;
        let s = ols_select(&f, &labels, k).map_err(|e| format!("seed {seed}: {e}"))?;
        let u = s.project(&f).map_err(|e| e.to_string())?;
        for (c, sel) in s.classes.iter().enumerate() {
            if sel.indices[0] != common::best_single_feature(&rows, &labels, c) {
                return Err(format!("seed {seed}, class {c}: first pick differs from brute force"));
            }
            if sel.residuals.windows(2).any(|w| w[1] > w[0] + 1e-12) {
                return Err(format!("seed {seed}, class {c}: residual increases"));
            }
            let target: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l == c))).collect();
            let energy = dot(&target, &target);
            for l in 0..k {
                let identity = energy - sel.alpha[..=l].iter().map(|a| a * a).sum::<f64>();
                let fit: Vec<f64> = (0..n)
                    .map(|i| (0..=l).map(|m| u[i][c * k + m] * dot(&target, &u.iter().map(|r| r[c * k + m]).collect::<Vec<_>>())).sum())
                    .collect();
                let direct: f64 = target.iter().zip(&fit).map(|(a, b)| (a - b).powi(2)).sum();
                worst_identity = worst_identity.max((sel.residuals[l] - identity).abs()).max((direct - identity).abs());
            }
        }
    }
    if worst_identity > 1e-8 {
        return Err(format!("residual identity off by {worst_identity:.2e}"));
    }
    Ok(format!("100 problems, identity error {worst_identity:.1e}"))
}

fn report_bytes(report: &ExperimentReport) -> Result<Vec<Vec<u8>>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let paths = report.write(dir.path()).map_err(|e| e.to_string())?;
    paths.iter().map(|p| std::fs::read(p).map_err(|e| e.to_string())).collect()
}

fn determinism() -> Outcome {
    let e = |e: Error| e.to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let batch: Vec<Vec<f64>> = (0..64).map(|_| signal(&mut rng, 32)).collect();
    let labels: Vec<usize> = (0..64).map(|i| i % 3).collect();
    for (mode, norm, matcher) in [
        (Mode::Structured, Norm::L1, Matcher::Exact),
        (Mode::Free, Norm::Mixed, Matcher::Greedy),
    ] {
        let model = || -> Result<String, Error> {
            let mut cfg = TrainConfig::new(4, mode);
            cfg.norm = norm;
            cfg.matcher = matcher;
            cfg.seed = 9;
            let bag = train_bagged(&batch, 2, &cfg)?;
            let pcfg = PipelineConfig {
                max_order: (mode == Mode::Structured).then_some(4),
                target_dim: 12,
                ..PipelineConfig::default()
            };
            let pipeline = Pipeline::fit(bag.transforms.clone(), &batch, &labels, &pcfg)?;
            ModelFile::from_bagged(&bag)?.with_pipeline(&pipeline)?.to_json()
        };
        if model().map_err(e)? != model().map_err(e)? {
            return Err(format!("{mode} model files differ"));
        }
    }
    let mut mcfg = MnistConfig::desk(desk(), GeometryChoice::Scrambled);
    mcfg.depth = 3;
    mcfg.transforms = vec![2];
    mcfg.train_limit = Some(60);
    mcfg.test_limit = Some(30);
    mcfg.pipeline.target_dim = 30;
    let runs: [&dyn Fn() -> haarscat::Result<ExperimentReport>; 4] = [
        &|| run_variance_table(&VarianceConfig { depth: 3, dim: 64, samples: 500, seed: 4 }),
        &|| {
            run_ring_recovery(&RingRecoveryConfig {
                dims: vec![8, 16],
                sample_sizes: vec![8, 64],
                trials: 10,
                ..Default::default()
            })
        },
        &|| run_reconstruct(&ReconstructConfig { dim: 16, depth: 2, signals: 10, seed: 5 }),
        &|| run_mnist_pipeline(&mcfg),
    ];
    for run in runs {
        let a = run().map_err(e)?;
        if report_bytes(&a)? != report_bytes(&run().map_err(e)?)? {
            return Err(format!("{} report differs between runs", a.name));
        }
    }
    Ok("model files and reports byte-identical".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("norm preservation", norm_preservation),
        ("contraction", contraction),
        ("matching oracle equivalence", matching_oracle),
        ("wavelet identity", wavelet_identity),
        ("hadamard decomposition", hadamard),
        ("reconstruction round trip", reconstruction),
        ("variance monotonicity", variance_monotonicity),
        ("variance table", table_one),
        ("ring connectivity recovery", ring_recovery),
        ("mnist desk scale", mnist),
        ("ols correctness", ols),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} ({secs:.1} s)"),
            Err(reason) => {
                failed += 1;
                println!("FAIL {name}: {reason} ({secs:.1} s)");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
