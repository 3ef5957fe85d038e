mod commands;
mod config;
mod input;

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand};

use crate::commands::{EvalInputs, NoiseInputs};
use crate::config::{RunConfig, CONFIG_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "detkit",
    version,
    about = "Voxelization, matching, evaluation and robustness tools for LiDAR 3D detection"
)]
struct Cli {
    /// TOML run configuration; defaults apply to anything it omits.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    /// Seed for voxel subsampling and noise injection.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bin a velodyne .bin point cloud into the voxel grid and summarize it.
    Voxelize {
        input: PathBuf,
        /// Also write the mean feature of every non-empty voxel.
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Match predictions to labels and report per-pair and frame losses.
    Match {
        /// Prediction file; repeat once per refinement stage.
        #[arg(long = "predictions", short, required = true)]
        predictions: Vec<PathBuf>,
        #[arg(long, short)]
        labels: PathBuf,
        /// Calibration file; without one labels are read in the LiDAR frame.
        #[arg(long)]
        calib: Option<PathBuf>,
    },
    /// AP tables over all thresholds and difficulties, plus the noise sweep.
    Eval {
        #[arg(long)]
        gt: Option<PathBuf>,
        #[arg(long)]
        dets: Option<PathBuf>,
        #[arg(long)]
        calib: Option<PathBuf>,
        #[arg(long)]
        velodyne: Option<PathBuf>,
        /// Comma-separated IoU thresholds.
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        /// Comma-separated noise points per ground truth.
        #[arg(long, value_delimiter = ',')]
        noise_levels: Option<Vec<usize>>,
        /// Comma-separated categories.
        #[arg(long, value_delimiter = ',')]
        categories: Option<Vec<String>>,
    },
    /// Time rotated BEV IoU over random box pairs.
    IouBench {
        #[arg(long, default_value_t = 200_000)]
        pairs: usize,
    },
    /// Add uniform clutter points around every labeled box of one frame.
    Noise {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long, short)]
        labels: PathBuf,
        #[arg(long)]
        calib: Option<PathBuf>,
        /// Points added per box.
        #[arg(long)]
        level: usize,
        /// Output .bin path.
        #[arg(long)]
        out_cloud: PathBuf,
        /// Identifier seeding the frame's noise stream; defaults to the label file stem.
        #[arg(long)]
        frame_id: Option<String>,
    },
    /// Print the effective configuration as TOML.
    Config,
}

fn emit(report: &str, output: Option<&Path>) -> anyhow::Result<()> {
    match output {
        Some(path) => std::fs::write(path, report).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{report}");
            Ok(())
        }
    }
}

fn required(flag: Option<PathBuf>, config: &Option<PathBuf>, name: &str) -> anyhow::Result<PathBuf> {
    flag.or_else(|| config.clone())
        .with_context(|| format!("--{name} is required (or set paths.{name} in the config)"))
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let output = cli.output.clone().or_else(|| cfg.paths.output.clone());

    let report = match cli.command {
        Command::Voxelize { input, features } => commands::voxelize(&cfg, &input, features.as_deref())?,
        Command::Match {
            predictions,
            labels,
            calib,
        } => commands::match_frame(&cfg, &predictions, &labels, calib.as_deref())?,
        Command::Eval {
            gt,
            dets,
            calib,
            velodyne,
            thresholds,
            noise_levels,
            categories,
        } => {
            if let Some(t) = thresholds {
                cfg.iou_thresholds = t;
            }
            if let Some(n) = noise_levels {
                cfg.noise_levels = n;
            }
            if let Some(c) = categories {
                cfg.categories = c;
            }
            cfg.validate()?;
            let labels = required(gt, &cfg.paths.labels, "labels")?;
            let detections = required(dets, &cfg.paths.detections, "detections")?;
            let calib = calib.or_else(|| cfg.paths.calib.clone());
            let velodyne = velodyne.or_else(|| cfg.paths.velodyne.clone());
            commands::eval(
                &cfg,
                &EvalInputs {
                    labels: &labels,
                    detections: &detections,
                    calib: calib.as_deref(),
                    velodyne: velodyne.as_deref(),
                },
            )?
        }
        Command::IouBench { pairs } => commands::iou_bench(pairs, cfg.seed)?,
        Command::Noise {
            cloud,
            labels,
            calib,
            level,
            out_cloud,
            frame_id,
        } => commands::noise(
            &cfg,
            &NoiseInputs {
                cloud: &cloud,
                labels: &labels,
                calib: calib.as_deref(),
                level,
                output: &out_cloud,
                frame_id: frame_id.as_deref(),
            },
        )?,
        Command::Config => cfg.to_toml(),
    };
    emit(&report, output.as_deref())
}
