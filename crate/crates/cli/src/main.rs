use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use haarscat::classify::error_rate;
use haarscat::experiment::{
    run_mnist_pipeline, run_reconstruct, run_ring_recovery, run_variance_table, ExperimentReport, GeometryChoice,
    MnistConfig, ReconstructConfig, RingRecoveryConfig, VarianceConfig,
};
use haarscat::features::build_features_from;
use haarscat::graph::{build_partition, connectivity_fraction, Connectivity, ReferenceGraph};
use haarscat::io::{grid_networks, load_csv, load_idx, scramble, DatasetFile, Geometry, ModelFile, TrainingInfo};
use haarscat::learn::{train_bagged, Matcher, Norm, TrainConfig};
use haarscat::pipeline::{Pipeline, PipelineConfig};
use haarscat::Mode;

#[derive(Parser)]
#[command(name = "haarscat", version, about = "Orthogonal Haar scattering networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn (or lay out on the image grid) pairings, optionally fit the classifier.
    Train(TrainArgs),
    /// Write the scattering features of a dataset as CSV.
    Transform(TransformArgs),
    /// Predict labels with a fitted model.
    Classify(ClassifyArgs),
    /// Apply one seeded pixel permutation to every signal.
    Scramble(ScrambleArgs),
    /// Reproduce one of the experiments and write its report.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Args)]
struct DataArgs {
    /// IDX image file.
    #[arg(long, requires = "labels", conflicts_with = "csv")]
    images: Option<PathBuf>,
    /// IDX label file.
    #[arg(long, requires = "images")]
    labels: Option<PathBuf>,
    /// CSV dataset, one sample per line with the label first.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Use only the first N samples.
    #[arg(long)]
    limit: Option<usize>,
}

impl DataArgs {
    fn load(&self) -> Result<DatasetFile> {
        let ds = match (&self.images, &self.labels, &self.csv) {
            (Some(i), Some(l), None) => load_idx(i, l).with_context(|| format!("reading {}", i.display()))?,
            (None, None, Some(c)) => load_csv(c).with_context(|| format!("reading {}", c.display()))?,
            _ => bail!("give either --images and --labels, or --csv"),
        };
        Ok(match self.limit {
            Some(n) => ds.truncate(n),
            None => ds,
        })
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    depth: usize,
    /// Number of transforms T.
    #[arg(long, default_value_t = 1)]
    transforms: usize,
    #[arg(long, default_value = "l1")]
    norm: Norm,
    #[arg(long, default_value = "exact")]
    matcher: Matcher,
    #[arg(long, default_value = "structured")]
    mode: Mode,
    /// Lay pairings out on the image grid instead of learning them.
    #[arg(long)]
    grid: bool,
    /// Also fit feature selection and the kernel classifier.
    #[arg(long)]
    fit: bool,
    /// Highest scattering order kept as a feature; 0 keeps all.
    #[arg(long, default_value_t = 4)]
    max_order: usize,
    /// Size of the selected dictionary over all classes.
    #[arg(long, default_value_t = 1000)]
    target_dim: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1e-3)]
    lambda: f64,
    /// Edge list ("u v" per line) to score the learned partitions against.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// CSV file for the connectivity of each level (needs --graph).
    #[arg(long, requires = "graph")]
    connectivity: Option<PathBuf>,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Highest scattering order kept; defaults to the model's.
    #[arg(long)]
    max_order: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// CSV of `label,predicted` per sample.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScrambleArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scrambled dataset as CSV.
    #[arg(long)]
    out: PathBuf,
    /// Permutation, one target position per line.
    #[arg(long)]
    permutation: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Experiment {
    /// Normalized variance of each scattering order for white noise.
    VarianceTable {
        #[arg(long, default_value_t = 5)]
        depth: usize,
        #[arg(long, default_value_t = 1024)]
        dim: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
    /// Success rate of total variation pairing on Gaussian ring processes.
    RingRecovery {
        /// JSON configuration; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        neighbour: Option<f64>,
        #[arg(long)]
        far: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
    /// Digit classification with known or scrambled pixel geometry.
    Mnist {
        /// Directory with the four IDX files.
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long, default_value = "known")]
        geometry: GeometryChoice,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        /// Comma-separated list of T values, one run each.
        #[arg(long, value_delimiter = ',', default_value = "4")]
        transforms: Vec<usize>,
        #[arg(long, default_value = "l1")]
        norm: Norm,
        #[arg(long, default_value = "exact")]
        matcher: Matcher,
        #[arg(long)]
        train_limit: Option<usize>,
        #[arg(long)]
        test_limit: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        target_dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
    /// Invert scattering built on interlaced pairings.
    Reconstruct {
        #[arg(long, default_value_t = 32)]
        dim: usize,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 200)]
        signals: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
}

fn order_cap(m: usize) -> Option<usize> {
    (m > 0).then_some(m)
}

fn train(args: TrainArgs) -> Result<()> {
    let ds = args.data.load()?;
    let networks;
    let training;
    if args.grid {
        let Geometry::Grid { height, width } = ds.geometry else {
            bail!("--grid needs image data with a known grid layout");
        };
        if args.mode != Mode::Structured {
            bail!("grid pairings are structured");
        }
        networks = grid_networks(height, width, args.depth, args.transforms)?;
        training = TrainingInfo {
            source: "grid".into(),
            norm: args.norm,
            matcher: args.matcher,
            seed: args.seed,
            subset_assignment: Vec::new(),
        };
    } else {
        let mut cfg = TrainConfig::new(args.depth, args.mode);
        cfg.norm = args.norm;
        cfg.matcher = args.matcher;
        cfg.seed = args.seed;
        let bag = train_bagged(&ds.images, args.transforms, &cfg)?;
        training = ModelFile::from_bagged(&bag)?.training;
        networks = bag.transforms;
    }
    let mut model = ModelFile::new(&networks, training)?;

    if let Some(path) = &args.graph {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let g = ReferenceGraph::parse_edge_list(&text, Some(ds.dim()))?;
        let mask = ds.active_mask();
        let mut csv = String::from("transform,level,induced,mergewise\n");
        for (t, net) in networks.iter().enumerate() {
            let p = build_partition(net)?;
            for j in 0..=net.depth() {
                let a = connectivity_fraction(&p, &g, j, Some(&mask), Connectivity::Induced)?;
                let b = connectivity_fraction(&p, &g, j, Some(&mask), Connectivity::Mergewise)?;
                writeln!(csv, "{t},{j},{a},{b}")?;
            }
        }
        match &args.connectivity {
            Some(out) => write_file(out, &csv)?,
            None => eprint!("{csv}"),
        }
    }

    if args.fit {
        let max_order = match args.mode {
            Mode::Structured => order_cap(args.max_order),
            Mode::Free => None,
        };
        let cfg = PipelineConfig {
            max_order,
            target_dim: args.target_dim,
            kernel: haarscat::classify::KernelConfig { sigma: args.sigma, lambda: args.lambda },
        };
        let pipeline = Pipeline::fit(networks, &ds.images, &ds.labels, &cfg)?;
        let err = error_rate(&pipeline.predict(&ds.images)?, &ds.labels);
        eprintln!("training error {err}");
        model = model.with_pipeline(&pipeline)?;
    }
    model.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn transform(args: TransformArgs) -> Result<()> {
    let model = ModelFile::load(&args.model)?;
    let ds = args.data.load()?;
    let max_order = match (args.max_order, model.mode) {
        (Some(m), _) => order_cap(m),
        (None, Mode::Structured) => model.max_order,
        (None, Mode::Free) => None,
    };
    let f = build_features_from(&model.networks()?, &ds.images, max_order)?;
    let mut csv = String::new();
    for i in 0..f.rows() {
        let row = f.row(i);
        // The trailing constant column is left out.
        let fields: Vec<String> = row[..f.bias_column()].iter().map(f64::to_string).collect();
        writeln!(csv, "{},{}", ds.labels[i], fields.join(","))?;
    }
    write_file(&args.out, &csv)
}

fn classify(args: ClassifyArgs) -> Result<()> {
    let model = ModelFile::load(&args.model)?;
    let Some(pipeline) = model.pipeline()? else {
        bail!("{} holds no fitted classifier; train with --fit", args.model.display());
    };
    let ds = args.data.load()?;
    let predicted = pipeline.predict(&ds.images)?;
    println!("error {}", error_rate(&predicted, &ds.labels));
    if let Some(out) = &args.out {
        let mut csv = String::from("label,predicted\n");
        for (l, p) in ds.labels.iter().zip(&predicted) {
            writeln!(csv, "{l},{p}")?;
        }
        write_file(out, &csv)?;
    }
    Ok(())
}

fn scramble_cmd(args: ScrambleArgs) -> Result<()> {
    let ds = args.data.load()?;
    let (scrambled, perm) = scramble(&ds, args.seed);
    let mut csv = String::new();
    for (x, l) in scrambled.images.iter().zip(&scrambled.labels) {
        let fields: Vec<String> = x.iter().map(f64::to_string).collect();
        writeln!(csv, "{l},{}", fields.join(","))?;
    }
    write_file(&args.out, &csv)?;
    if let Some(path) = &args.permutation {
        let text: String = perm.iter().map(|p| format!("{p}\n")).collect();
        write_file(path, &text)?;
    }
    Ok(())
}

fn experiment(e: Experiment) -> Result<()> {
    let (report, out): (ExperimentReport, PathBuf) = match e {
        Experiment::VarianceTable { depth, dim, samples, seed, out } => {
            (run_variance_table(&VarianceConfig { depth, dim, samples, seed })?, out)
        }
        Experiment::RingRecovery { config, dims, sizes, trials, neighbour, far, seed, out } => {
            let mut cfg = match config {
                Some(path) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
                }
                None => RingRecoveryConfig::default(),
            };
            cfg.dims = dims.unwrap_or(cfg.dims);
            cfg.sample_sizes = sizes.unwrap_or(cfg.sample_sizes);
            cfg.trials = trials.unwrap_or(cfg.trials);
            cfg.neighbour = neighbour.unwrap_or(cfg.neighbour);
            cfg.far = far.unwrap_or(cfg.far);
            cfg.seed = seed.unwrap_or(cfg.seed);
            (run_ring_recovery(&cfg)?, out)
        }
        Experiment::Mnist {
            data_dir,
            geometry,
            depth,
            transforms,
            norm,
            matcher,
            train_limit,
            test_limit,
            target_dim,
            seed,
            out,
        } => {
            let mut cfg = MnistConfig::desk(&data_dir, geometry);
            cfg.depth = depth;
            cfg.transforms = transforms;
            cfg.norm = norm;
            cfg.matcher = matcher;
            cfg.train_limit = train_limit;
            cfg.test_limit = test_limit;
            cfg.pipeline.target_dim = target_dim;
            cfg.seed = seed;
            (run_mnist_pipeline(&cfg)?, out)
        }
        Experiment::Reconstruct { dim, depth, signals, seed, out } => {
            (run_reconstruct(&ReconstructConfig { dim, depth, signals, seed })?, out)
        }
    };
    for path in report.write(&out)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let start = Instant::now();
    match cli.command {
        Command::Train(a) => train(a)?,
        Command::Transform(a) => transform(a)?,
        Command::Classify(a) => classify(a)?,
        Command::Scramble(a) => scramble_cmd(a)?,
        Command::Experiment(e) => experiment(e)?,
    }
    eprintln!("done in {:.2} s", start.elapsed().as_secs_f64());
    Ok(())
}
