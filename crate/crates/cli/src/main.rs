use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

/// Binary hash codes from embeddings via learned Householder rotations.
#[derive(Debug, Parser)]
#[command(name = "hhash", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate rotated-hypercube train/query/database splits.
    Synth(SynthArgs),
    /// Train a Householder rotation on embeddings.
    Fit(FitArgs),
    /// Fit an ITQ rotation and store it as Householder reflections.
    Itq(ItqArgs),
    /// Binarize embeddings, optionally after a rotation.
    Hash(HashArgs),
    /// Compute mAP@k of query hashes against database hashes.
    Eval(EvalArgs),
    /// Print header metadata of EMB1/ROT1/HSH1 or label files.
    Info(InfoArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output prefix; writes <prefix>.{train,query,db}.{emb,labels}.
    #[arg(long)]
    out_prefix: String,
    /// Training points per class.
    #[arg(long)]
    n_per_class: usize,
    /// Number of classes (distinct hypercube vertices).
    #[arg(long)]
    classes: usize,
    /// Embedding width / code length.
    #[arg(long)]
    bits: usize,
    /// Standard deviation of the Gaussian noise around each vertex.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Query points per class [default: n-per-class / 8, at least 1].
    #[arg(long)]
    query_per_class: Option<usize>,
    /// Database points per class [default: 4 x query-per-class].
    #[arg(long)]
    db_per_class: Option<usize>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// EMB1 file with training embeddings.
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, default_value = "l2", value_parser = ["l2", "l1", "min-entry", "bit-var"])]
    loss: String,
    /// Adam learning rate [default: 0.1, or 0.01 for bit-var].
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, default_value_t = 300)]
    epochs: usize,
    #[arg(long, default_value_t = 128)]
    batch: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output ROT1 file.
    #[arg(long)]
    out: PathBuf,
    /// Optional training log, one "epoch<TAB>mean_loss" line per epoch.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ItqArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, default_value_t = 50)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Subtract column means first; the means are written to <out>.mean (EMB1, one row).
    #[arg(long)]
    center: bool,
    /// Output ROT1 file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct HashArgs {
    #[arg(long)]
    embeddings: PathBuf,
    /// ROT1 rotation to apply before binarizing.
    #[arg(long)]
    rotation: Option<PathBuf>,
    /// EMB1 row of means to subtract first (from `itq --center`).
    #[arg(long)]
    mean: Option<PathBuf>,
    /// Output HSH1 file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    query_emb: PathBuf,
    #[arg(long)]
    query_hash: PathBuf,
    #[arg(long)]
    query_labels: PathBuf,
    #[arg(long)]
    db_emb: PathBuf,
    #[arg(long)]
    db_hash: PathBuf,
    #[arg(long)]
    db_labels: PathBuf,
    /// Cutoff of mAP@k (required; there is no universal default).
    #[arg(long)]
    k: usize,
    /// Also print the AP of every query.
    #[arg(long)]
    verbose: bool,
}

#[derive(Debug, Args)]
struct InfoArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                eprint!("{e}");
                return ExitCode::FAILURE;
            }
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("{line}");
            return ExitCode::FAILURE;
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
