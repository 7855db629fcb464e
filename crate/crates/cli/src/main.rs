//! `malpipe`: train, evaluate and apply soft-voting tree ensembles over
//! static malware feature vectors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use malpipe_core::{Error, ErrorClass};

#[derive(Parser)]
#[command(name = "malpipe", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full training pipeline and write a model bundle.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Write the bundle here instead of the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a labelled dataset with a bundle and print metrics as JSON.
    Evaluate {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Also write the ROC curve as `fpr,tpr` rows.
        #[arg(long)]
        roc_csv: Option<PathBuf>,
    },
    /// Write `row_id,probability,label` for every input row.
    Predict {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a labelled synthetic corpus (`.mfbin` or CSV by extension).
    Synth {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        dims: usize,
        #[arg(long)]
        informative: usize,
        #[arg(long)]
        noise: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Mean shift of every latent column, for drifted corpora.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        shift: f64,
    },
    /// Print a bundle's provenance, metrics and stage timings.
    Report {
        #[arg(long)]
        bundle: PathBuf,
    },
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Model => 4,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("MALPIPE_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Error::Config(format!(
                "MALPIPE_THREADS={value:?} is not a positive integer"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Error> {
    configure_threads()?;
    match cli.command {
        Command::Train { config, out } => commands::train(&config, out),
        Command::Evaluate {
            bundle,
            data,
            roc_csv,
        } => commands::evaluate(&bundle, &data, roc_csv.as_deref()),
        Command::Predict { bundle, data, out } => commands::predict(&bundle, &data, &out),
        Command::Synth {
            rows,
            dims,
            informative,
            noise,
            seed,
            out,
            shift,
        } => commands::synth(
            malpipe_core::synth::SynthSpec {
                rows,
                dims,
                informative,
                noise,
                seed,
                shift,
            },
            &out,
        ),
        Command::Report { bundle } => commands::report(&bundle),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut message = e.to_string();
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let text = s.to_string();
                if !message.contains(&text) {
                    message.push_str(": ");
                    message.push_str(&text);
                }
                source = s.source();
            }
            eprintln!("error: {message}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
