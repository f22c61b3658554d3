//! Drivers for the variance table, ring recovery, MNIST and reconstruction
//! experiments. Every driver is a pure function of its configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::error_rate;
use crate::error::{Error, Result};
use crate::graph::{build_partition, connectivity_fraction, Connectivity, ReferenceGraph};
use crate::inverse::{forward_bag, make_interlaced, random_interlaced, reconstruct};
use crate::io::{grid_networks, load_idx, scramble, DatasetFile, Geometry};
use crate::learn::{train_bagged, Matcher, Norm, TrainConfig};
use crate::pipeline::{Pipeline, PipelineConfig};
use crate::ring::{correlation_gap, recovery_grid, sample_size_bound, RingModel};
use crate::scatter::{binomial, HaarNetwork, InputCheck, Mode};

/// CSV tables plus the configuration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub config: serde_json::Value,
    /// `(table name, CSV text)`.
    pub tables: Vec<(String, String)>,
}

impl ExperimentReport {
    pub fn table(&self, name: &str) -> Option<&str> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t.as_str())
    }

    /// Writes `<name>.json` and one `<name>_<table>.csv` per table; returns
    /// the paths written.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.tables.len() + 1);
        let path = dir.join(format!("{}.json", self.name));
        let mut text = serde_json::to_string_pretty(&self.config).map_err(|e| Error::CorruptFile(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text)?;
        written.push(path);
        for (table, csv) in &self.tables {
            let path = dir.join(format!("{}_{table}.csv", self.name));
            fs::write(&path, csv)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn to_value<T: Serialize>(config: &T) -> serde_json::Value {
    serde_json::to_value(config).expect("configurations serialize")
}

/// Normalized variance `sigma^2_{m,J}` of the order-`m` coefficients of a
/// structured network with random pairings, averaged over output rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceConfig {
    pub depth: usize,
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
}

/// `(1 - 2/pi)^m C(J, m)`.
pub fn variance_model(depth: usize, m: usize) -> f64 {
    (1.0 - 2.0 / std::f64::consts::PI).powi(m as i32) * binomial(depth, m) as f64
}

/// Per-order empirical values `sigma^2_{m,J}`, `m = 0..=J`.
pub fn order_variances(cfg: &VarianceConfig) -> Result<Vec<f64>> {
    if cfg.samples < 2 {
        return Err(Error::TooFewSamples { samples: cfg.samples, subsets: 2 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let net = HaarNetwork::random(Mode::Structured, cfg.dim, cfg.depth, &mut rng)?;
    let signal_seed: u64 = rng.random();
    let coefficients = cfg.dim;
    let chunk = 256;
    let chunks = cfg.samples.div_ceil(chunk);
    // Sums and sums of squares of every output coefficient, per chunk.
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(signal_seed);
            rng.set_stream(c as u64);
            let mut sum = vec![0.0; coefficients];
            let mut sq = vec![0.0; coefficients];
            for _ in c * chunk..((c + 1) * chunk).min(cfg.samples) {
                let x: Vec<f64> = (0..cfg.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let s = net.transform(&x, InputCheck::Permissive)?;
                for (k, &v) in s.values().iter().enumerate() {
                    sum[k] += v;
                    sq[k] += v * v;
                }
            }
            Ok((sum, sq))
        })
        .collect::<Result<_>>()?;
    let mut sum = vec![0.0; coefficients];
    let mut sq = vec![0.0; coefficients];
    for (s, q) in &partial {
        sum.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        sq.iter_mut().zip(q).for_each(|(a, b)| *a += b);
    }
    let n = cfg.samples as f64;
    let row_len = 1usize << cfg.depth;
    let rows = cfg.dim / row_len;
    let mut by_order = vec![0.0; cfg.depth + 1];
    for k in 0..coefficients {
        let var = sq[k] / n - (sum[k] / n).powi(2);
        by_order[(k % row_len).count_ones() as usize] += var;
    }
    Ok(by_order.into_iter().map(|v| v / (rows * row_len) as f64).collect())
}

/// Table `m,sigma2,model_value` for `m = 1..=J`; the order-0 value is
/// kept in the configuration.
pub fn run_variance_table(cfg: &VarianceConfig) -> Result<ExperimentReport> {
    if cfg.depth == 0 || (1usize << cfg.depth) > cfg.dim {
        return Err(Error::InvalidArgument(format!("need 1 <= 2^J <= d (J = {}, d = {})", cfg.depth, cfg.dim)));
    }
    let sigma = order_variances(cfg)?;
    let mut csv = String::from("m,sigma2,model_value\n");
    for (m, s) in sigma.iter().enumerate().skip(1) {
        writeln!(csv, "{m},{s},{}", variance_model(cfg.depth, m)).expect("string write");
    }
    let mut config = to_value(cfg);
    config["order0_sigma2"] = sigma[0].into();
    Ok(ExperimentReport { name: "variance_table".into(), config, tables: vec![("variance".into(), csv)] })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingRecoveryConfig {
    pub dims: Vec<usize>,
    pub sample_sizes: Vec<usize>,
    pub trials: usize,
    /// `rho(1) / rho(0)`.
    pub neighbour: f64,
    /// `rho(n) / rho(0)` for `n >= 2`.
    pub far: f64,
    /// Success level defining the frontier `N*(d)`.
    pub level: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for RingRecoveryConfig {
    fn default() -> Self {
        RingRecoveryConfig {
            dims: vec![8, 16, 32],
            sample_sizes: vec![4, 8, 16, 32, 64, 128, 256, 512, 1024],
            trials: 100,
            neighbour: 0.44,
            far: 0.06,
            level: 0.8,
            epsilon: 0.2,
            seed: 0,
        }
    }
}

/// Tables `recovery` (`d,N,trials,success_rate`) and `frontier`
/// (`d,n_star,gap,bound`), where `n_star` is empty if never reached.
pub fn run_ring_recovery(cfg: &RingRecoveryConfig) -> Result<ExperimentReport> {
    let family = |d: usize| RingModel::from_ratios(d, cfg.neighbour, cfg.far);
    let grid = recovery_grid(family, &cfg.dims, &cfg.sample_sizes, cfg.trials, cfg.seed)?;
    let mut frontier = String::from("d,n_star,gap,bound\n");
    for (&d, n_star) in cfg.dims.iter().zip(grid.frontier(cfg.level)) {
        let model = family(d)?;
        let gap = correlation_gap(&model)?;
        let bound = match sample_size_bound(&model, cfg.epsilon) {
            Ok(b) => b.to_string(),
            Err(Error::ZeroGap) => String::new(),
            Err(e) => return Err(e),
        };
        let n_star = n_star.map_or(String::new(), |n| n.to_string());
        writeln!(frontier, "{d},{n_star},{gap},{bound}").expect("string write");
    }
    Ok(ExperimentReport {
        name: "ring_recovery".into(),
        config: to_value(cfg),
        tables: vec![("recovery".into(), grid.to_csv()), ("frontier".into(), frontier)],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryChoice {
    /// Grid pairings built from the pixel layout.
    Known,
    /// Pixels scrambled by a fixed permutation; pairings are learned.
    Scrambled,
}

impl std::str::FromStr for GeometryChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "known" => Ok(GeometryChoice::Known),
            "scrambled" => Ok(GeometryChoice::Scrambled),
            _ => Err(Error::InvalidArgument(format!("unknown geometry {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnistConfig {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    pub geometry: GeometryChoice,
    pub depth: usize,
    /// One run per entry; connectivity is reported for the last one.
    pub transforms: Vec<usize>,
    pub norm: Norm,
    pub matcher: Matcher,
    pub pipeline: PipelineConfig,
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
    pub seed: u64,
}

impl MnistConfig {
    /// Desk-scale defaults for the four files in `dir`.
    pub fn desk(dir: impl AsRef<Path>, geometry: GeometryChoice) -> Self {
        let dir = dir.as_ref();
        MnistConfig {
            train_images: dir.join("train-images-idx3-ubyte"),
            train_labels: dir.join("train-labels-idx1-ubyte"),
            test_images: dir.join("t10k-images-idx3-ubyte"),
            test_labels: dir.join("t10k-labels-idx1-ubyte"),
            geometry,
            depth: 6,
            transforms: vec![4],
            norm: Norm::L1,
            matcher: Matcher::Exact,
            pipeline: PipelineConfig::default(),
            train_limit: None,
            test_limit: None,
            seed: 0,
        }
    }
}

/// Outcome of one MNIST run.
#[derive(Debug, Clone, PartialEq)]
pub struct MnistRun {
    pub transforms: usize,
    pub features: usize,
    pub per_class: usize,
    pub train_error: f64,
    pub test_error: f64,
    /// `connectivity[t][j]` for levels `j = 0..=J`, induced and mergewise.
    pub connectivity: Vec<Vec<(f64, f64)>>,
}

fn mnist_networks(cfg: &MnistConfig, t: usize, train: &DatasetFile) -> Result<Vec<HaarNetwork>> {
    match cfg.geometry {
        GeometryChoice::Known => {
            let Geometry::Grid { height, width } = train.geometry else {
                return Err(Error::InvalidArgument("known geometry needs grid images".into()));
            };
            grid_networks(height, width, cfg.depth, t)
        }
        GeometryChoice::Scrambled => {
            let mut tc = TrainConfig::new(cfg.depth, Mode::Structured);
            tc.norm = cfg.norm;
            tc.matcher = cfg.matcher;
            tc.seed = cfg.seed;
            Ok(train_bagged(&train.images, t, &tc)?.transforms)
        }
    }
}

/// Runs the full pipeline once per entry of `cfg.transforms`.
pub fn mnist_runs(cfg: &MnistConfig) -> Result<Vec<MnistRun>> {
    let mut train = load_idx(&cfg.train_images, &cfg.train_labels)?;
    let mut test = load_idx(&cfg.test_images, &cfg.test_labels)?;
    if let Some(n) = cfg.train_limit {
        train = train.truncate(n);
    }
    if let Some(n) = cfg.test_limit {
        test = test.truncate(n);
    }
    let grid = train.geometry.reference_graph(train.dim())?;
    let (graph, mask) = match cfg.geometry {
        GeometryChoice::Known => (grid, train.active_mask()),
        GeometryChoice::Scrambled => {
            let (s_train, perm) = scramble(&train, cfg.seed);
            let (s_test, perm_test) = scramble(&test, cfg.seed);
            debug_assert_eq!(perm, perm_test);
            train = s_train;
            test = s_test;
            // The true neighbourhoods, renamed to scrambled positions.
            let graph = grid
                .map(|g| {
                    let edges = (0..g.dim()).flat_map(|u| g.neighbors(u).iter().map(move |&v| (u, v)));
                    ReferenceGraph::from_edges(g.dim(), edges.filter(|(u, v)| u < v).map(|(u, v)| (perm[u], perm[v])).collect::<Vec<_>>())
                })
                .transpose()?;
            (graph, train.active_mask())
        }
    };
    let mut runs = Vec::with_capacity(cfg.transforms.len());
    for &t in &cfg.transforms {
        let networks = mnist_networks(cfg, t, &train)?;
        let connectivity = match &graph {
            Some(g) => networks
                .iter()
                .map(|net| {
                    let p = build_partition(net)?;
                    (0..=net.depth())
                        .map(|j| {
                            Ok((
                                connectivity_fraction(&p, g, j, Some(&mask), Connectivity::Induced)?,
                                connectivity_fraction(&p, g, j, Some(&mask), Connectivity::Mergewise)?,
                            ))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        let pipeline = Pipeline::fit(networks, &train.images, &train.labels, &cfg.pipeline)?;
        let train_error = error_rate(&pipeline.predict(&train.images)?, &train.labels);
        let test_error = error_rate(&pipeline.predict(&test.images)?, &test.labels);
        runs.push(MnistRun {
            transforms: t,
            features: pipeline.selection.means.len(),
            per_class: pipeline.selection.per_class(),
            train_error,
            test_error,
            connectivity,
        });
    }
    Ok(runs)
}

/// Tables `error` (`transforms,features,per_class,train_error,test_error`)
/// and `connectivity` (`transform,level,induced,mergewise`, for the last run).
pub fn run_mnist_pipeline(cfg: &MnistConfig) -> Result<ExperimentReport> {
    let runs = mnist_runs(cfg)?;
    let mut error = String::from("transforms,features,per_class,train_error,test_error\n");
    for r in &runs {
        writeln!(error, "{},{},{},{},{}", r.transforms, r.features, r.per_class, r.train_error, r.test_error)
            .expect("string write");
    }
    let mut conn = String::from("transform,level,induced,mergewise\n");
    if let Some(last) = runs.last() {
        for (t, levels) in last.connectivity.iter().enumerate() {
            for (j, (a, b)) in levels.iter().enumerate() {
                writeln!(conn, "{t},{j},{a},{b}").expect("string write");
            }
        }
    }
    Ok(ExperimentReport {
        name: "mnist".into(),
        config: to_value(cfg),
        tables: vec![("error".into(), error), ("connectivity".into(), conn)],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructConfig {
    pub dim: usize,
    pub depth: usize,
    pub signals: usize,
    pub seed: u64,
}

/// Table `signal,max_abs_error,status`: random positive signals are pushed
/// through `2^J` free networks built from random interlaced pairings and
/// recovered. A final row runs the two-valued alternating signal, which
/// has no unique preimage.
pub fn run_reconstruct(cfg: &ReconstructConfig) -> Result<ExperimentReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut csv = String::from("signal,max_abs_error,status\n");
    for i in 0..cfg.signals {
        let layers = (0..cfg.depth)
            .map(|_| random_interlaced(cfg.dim, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let x: Vec<f64> = (0..cfg.dim).map(|_| rng.random_range(0.01..1.0)).collect();
        let bag = forward_bag(&x, &layers)?;
        match reconstruct(&bag, &layers) {
            Ok(y) => {
                let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                writeln!(csv, "{i},{err},ok").expect("string write");
            }
            Err(e) => writeln!(csv, "{i},,{e}").expect("string write"),
        }
    }
    let alternating: Vec<f64> = (0..cfg.dim).map(|n| if n % 2 == 0 { 1.0 } else { 2.0 }).collect();
    let layers = vec![make_interlaced(cfg.dim)?];
    let status = match reconstruct(&forward_bag(&alternating, &layers)?, &layers) {
        Ok(_) => "ok".to_string(),
        Err(Error::AmbiguousReconstruction) => "ambiguous".to_string(),
        Err(e) => e.to_string(),
    };
    writeln!(csv, "alternating,,{status}").expect("string write");
    Ok(ExperimentReport {
        name: "reconstruct".into(),
        config: to_value(cfg),
        tables: vec![("reconstruction".into(), csv)],
    })
}
