//! `topofeat` command-line pipeline: segmentation, topological feature
//! extraction, curve export, classifier training and the persistence oracle.

mod commands;
mod config;
mod run;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Parser, Subcommand};
use topofeat::features::FeatureSet;

use crate::config::RunConfig;
use crate::run::Failure;
use crate::train::{ModelKind, TrainArgs};

#[derive(Parser, Debug)]
#[command(name = "topofeat", version, about = "Topological features for dermoscopic-style images")]
struct Cli {
    /// RNG seed for splits, training and synthetic data.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-image work (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Segment every image in a directory into masks and JSON reports.
    Segment {
        input: PathBuf,
        output: PathBuf,
        /// Directory of reference masks `<stem>.pgm`; adds IOU to reports.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Extract a feature set from every image into one CSV.
    Features {
        input: PathBuf,
        /// Directory of masks `<stem>.pgm` applied before extraction.
        #[arg(long)]
        masks: Option<PathBuf>,
        /// ps-rgb, ps-xyz, pc-rgb, pc-xyz or all.
        #[arg(long)]
        feature_set: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write one 255-sample persistence curve as `t,value` CSV.
    Curve {
        image: PathBuf,
        /// R, G, B, X, Y, Z or gray.
        #[arg(long, default_value = "X")]
        channel: String,
        /// betti0, betti1, entropy0 or entropy1.
        #[arg(long, default_value = "betti0")]
        curve: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Train an SVM or fusion model on a feature CSV and labels.
    Train {
        features: PathBuf,
        labels: PathBuf,
        #[arg(long, value_enum, default_value = "svm")]
        model: ModelKind,
        #[arg(short, long, default_value = "model.json")]
        output: PathBuf,
        /// Feature CSV with the same image ids used as fusion backbone.
        #[arg(long)]
        backbone_csv: Option<PathBuf>,
        /// Hold out this many images per class as a balanced test set.
        #[arg(long)]
        balanced_test: Option<usize>,
        #[arg(long)]
        reduced_dim: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        train_fraction: Option<f64>,
    },
    /// Predict with a trained model.
    Eval {
        model: PathBuf,
        features: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        backbone_csv: Option<PathBuf>,
        #[arg(short, long, default_value = "predictions.csv")]
        output: PathBuf,
    },
    /// Check diagram ranks against thresholded Betti numbers on random images.
    Selftest {
        #[arg(long, default_value_t = 200)]
        images: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?.with_seed(cli.seed);
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| anyhow!("thread pool: {e}"))?;
    }
    match cli.command {
        Command::Segment { input, output, reference } => {
            commands::segment_dir(&input, &output, reference.as_deref(), &cfg)
        }
        Command::Features { input, masks, feature_set, output } => {
            if let Some(name) = feature_set {
                cfg.feature_set = FeatureSet::parse(&name).map_err(anyhow::Error::from)?;
            }
            commands::features_dir(&input, masks.as_deref(), &output, &cfg)
        }
        Command::Curve { image, channel, curve, output } => commands::curve(&image, &channel, &curve, output.as_deref()),
        Command::Train {
            features,
            labels,
            model,
            output,
            backbone_csv,
            balanced_test,
            reduced_dim,
            epochs,
            learning_rate,
            lambda,
            train_fraction,
        } => {
            if balanced_test.is_some() {
                cfg.balanced_test = balanced_test;
            }
            if let Some(v) = reduced_dim {
                cfg.fusion.reduced_dim = v;
            }
            if let Some(v) = epochs {
                cfg.fusion.epochs = v;
                cfg.svm.epochs = v;
            }
            if let Some(v) = learning_rate {
                cfg.fusion.learning_rate = v;
            }
            if let Some(v) = lambda {
                cfg.svm.lambda = v;
            }
            if let Some(v) = train_fraction {
                cfg.train_fraction = v;
            }
            let args = TrainArgs {
                features: &features,
                labels: &labels,
                model,
                out: &output,
                backbone_csv: backbone_csv.as_deref(),
            };
            train::train(&args, &cfg)
        }
        Command::Eval { model, features, labels, backbone_csv, output } => {
            train::eval(&model, &features, labels.as_deref(), backbone_csv.as_deref(), &output)
        }
        Command::Selftest { images, output } => commands::selftest(cfg.seed, images, output.as_ref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
