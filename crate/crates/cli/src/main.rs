use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use msmsf_cli::commands::{cmd_eval, cmd_inspect, cmd_predict, cmd_synth, cmd_train, EvalArgs, PredictArgs};
use msmsf_cli::config::EvalSettings;
use msmsf_cli::manifest::Modality;
use msmsf_cli::Result;
use msmsf_core::train::DatasetProfile;

#[derive(Parser)]
#[command(name = "msmsf", version, about = "Train, run and evaluate edge detectors")]
struct Cli {
    /// Directory every relative path is resolved against.
    #[arg(long, global = true, default_value = ".")]
    root: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network from scratch.
    Train {
        /// Run configuration (TOML).
        #[arg(long)]
        config: PathBuf,
    },
    /// Write edge probability maps for images.
    Predict {
        /// Checkpoint file; give two (RGB and HHA) with --modality-average.
        #[arg(long = "checkpoint", required = true)]
        checkpoints: Vec<PathBuf>,
        /// Manifest listing inputs with modality tags.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Input images (used when no manifest is given).
        images: Vec<PathBuf>,
        /// Modality of the positional input images.
        #[arg(long, default_value = "rgb")]
        modality: Modality,
        /// Average predictions over resized copies of each image.
        #[arg(long)]
        multiscale: bool,
        /// Scales used by --multiscale.
        #[arg(long, value_delimiter = ',', default_value = "0.5,1.0,1.5")]
        scales: Vec<f64>,
        /// Average the maps of an RGB and an HHA network.
        #[arg(long)]
        modality_average: bool,
        #[arg(long)]
        out: PathBuf,
        /// PNG bit depth (8 or 16).
        #[arg(long, default_value_t = 8)]
        bits: u8,
        /// Skip the lossless float sidecar.
        #[arg(long)]
        no_sidecar: bool,
        /// Per-channel mean to subtract, e.g. 0.48,0.46,0.41.
        #[arg(long, value_delimiter = ',', num_args = 3)]
        mean: Option<Vec<f32>>,
    },
    /// Score predictions against ground truth (ODS, OIS, AP).
    Eval {
        /// Directory with <stem>.pmap or <stem>.png predictions.
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth manifest.
        #[arg(long)]
        gt: PathBuf,
        /// Matching tolerance as a fraction of the image diagonal.
        #[arg(long)]
        tol: Option<f64>,
        /// Number of uniformly spaced thresholds.
        #[arg(long, default_value_t = 99)]
        thresholds: usize,
        /// Evaluate maps as given, without non-maximum suppression.
        #[arg(long)]
        no_nms: bool,
        /// Dataset conventions (nyud selects tolerance 0.011).
        #[arg(long)]
        dataset: Option<DatasetProfile>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print layer and parameter counts for a profile, config or checkpoint.
    Inspect {
        /// "tiny", "paper-depth", a network config file or a checkpoint.
        target: String,
    },
    /// Generate a synthetic dataset with exact edge maps.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        count: usize,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<()> {
    let root = cli.root;
    match cli.command {
        Command::Train { config } => {
            let s = cmd_train(&root, &config)?;
            println!(
                "trained {} steps; loss {:.4} -> {:.4}; outputs in {}",
                s.steps,
                s.first_loss,
                s.last_loss,
                s.output_dir.display()
            );
        }
        Command::Predict {
            checkpoints,
            manifest,
            images,
            modality,
            multiscale,
            scales,
            modality_average,
            out,
            bits,
            no_sidecar,
            mean,
        } => {
            let args = PredictArgs {
                checkpoints,
                images,
                modality,
                manifest,
                scales: multiscale.then_some(scales),
                modality_average,
                output: out,
                bits,
                sidecar: !no_sidecar,
                mean: mean.map(|m| [m[0], m[1], m[2]]),
            };
            for p in cmd_predict(&root, &args)? {
                println!("{}", p.display());
            }
        }
        Command::Eval {
            pred,
            gt,
            tol,
            thresholds,
            no_nms,
            dataset,
            out,
        } => {
            let args = EvalArgs {
                predictions: pred,
                manifest: gt,
                settings: EvalSettings {
                    tol_frac: tol,
                    thresholds,
                    nms: !no_nms,
                    ..EvalSettings::default()
                },
                dataset,
                output: out,
            };
            print!("{}", cmd_eval(&root, &args)?.text);
        }
        Command::Inspect { target } => print!("{}", cmd_inspect(&root, &target)?),
        Command::Synth { out, count, size, seed } => {
            println!("{}", cmd_synth(&root, &out, count, size, seed)?.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
