//! `fixloc`: fix-localization pipelines on the command line.
//!
//! Subcommands cover the whole workflow: oracle extraction from patch
//! pairs, corpus generation, training, prediction, cross-validated
//! evaluation against the baselines, heuristic repair, the model gradient
//! check, and debugging-effort statistics. Every run writes a manifest
//! (resolved configuration, seed, tool version) beside its outputs.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "fixloc", version, about = "Token-level fix localization toolkit")]
struct Cli {
    /// Flat key=value config file; command-line flags override its entries.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute oracle operation paths for (buggy, fixed) source pairs.
    Extract(ExtractArgs),
    /// Generate a mutation corpus with known oracles.
    GenCorpus(GenCorpusArgs),
    /// Train the pointer ranking model.
    Train(TrainArgs),
    /// Rank the operation paths of one method with a trained model.
    Predict(PredictArgs),
    /// Evaluate localizers: k-fold cross validation or a fixed checkpoint.
    Evaluate(EvaluateArgs),
    /// Generate-and-validate repair over a record set.
    Repair(RepairArgs),
    /// Check model gradients against finite differences.
    Gradcheck(GradcheckArgs),
    /// Token-count distributions for buggy methods and lines.
    EffortStats(EffortStatsArgs),
}

/// Hyper-parameter flags shared by train and evaluate.
#[derive(Args, Clone, Debug, Default)]
struct HyperArgs {
    /// Token embedding width.
    #[arg(long)]
    d_t: Option<usize>,
    /// Path-node embedding width (per LSTM direction).
    #[arg(long)]
    d_p: Option<usize>,
    /// Operator embedding width.
    #[arg(long)]
    d_o: Option<usize>,
    /// Fused hidden width.
    #[arg(long)]
    d_hidden: Option<usize>,
    /// Maximum AST path length kept.
    #[arg(long)]
    max_l: Option<usize>,
    /// Maximum operation paths per window.
    #[arg(long)]
    max_k: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Comma-separated ablations: no_token_split, whole_path_embedding,
    /// no_fc_layer.
    #[arg(long)]
    ablation: Option<String>,
}

#[derive(Args)]
struct ExtractArgs {
    /// JSONL input with id, buggy_src, fixed_src per line.
    #[arg(long)]
    input: std::path::PathBuf,
    /// PatchRecord JSONL output (oracle filled in).
    #[arg(long)]
    output: std::path::PathBuf,
}

#[derive(Args)]
struct GenCorpusArgs {
    /// Number of mutants.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// File of seed methods (blank-line separated); omit to synthesize.
    #[arg(long)]
    seed_methods: Option<std::path::PathBuf>,
    /// Synthesize this many seed methods when no file is given.
    #[arg(long)]
    synthesize: Option<usize>,
    /// Kind mix, e.g. "OperatorSwap=0.3,BooleanFlip=0.1".
    #[arg(long)]
    mix: Option<String>,
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// PatchRecord JSONL training data.
    #[arg(long)]
    data: std::path::PathBuf,
    /// Checkpoint output path.
    #[arg(long)]
    out: std::path::PathBuf,
    /// Per-epoch CSV log (epoch, mean_loss, train_recall1).
    #[arg(long)]
    log: Option<std::path::PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Stop early once train recall@1 reaches this value.
    #[arg(long)]
    stop_at_recall1: Option<f64>,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: std::path::PathBuf,
    /// Source file holding one method.
    #[arg(long)]
    method: std::path::PathBuf,
    /// Restrict candidates to this 1-based source line.
    #[arg(long)]
    line: Option<u32>,
    /// How many rows to print.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    /// PatchRecord JSONL with oracles.
    #[arg(long)]
    data: std::path::PathBuf,
    /// Evaluate this checkpoint instead of cross-validating.
    #[arg(long)]
    model: Option<std::path::PathBuf>,
    /// Cross-validation fold count.
    #[arg(long)]
    folds: Option<usize>,
    /// method | line
    #[arg(long)]
    scenario: Option<String>,
    /// Comma-separated systems: pointer, stat, forest.
    #[arg(long)]
    systems: Option<String>,
    /// token | token-operator
    #[arg(long = "match")]
    match_mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Deduplicate records first.
    #[arg(long, default_value_t = false)]
    dedup: bool,
    /// JSON report output.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args)]
struct RepairArgs {
    /// PatchRecord JSONL (oracles drive perfect ranking and oracle
    /// validation).
    #[arg(long)]
    data: std::path::PathBuf,
    /// Rank with this trained checkpoint.
    #[arg(long)]
    model: Option<std::path::PathBuf>,
    /// Rank perfectly (oracle first) instead of using a model.
    #[arg(long, default_value_t = false)]
    perfect: bool,
    /// Validation command with a {patched} placeholder; the default is
    /// oracle token comparison against fixed_src.
    #[arg(long)]
    command: Option<String>,
    /// Top predictions considered by the schedule.
    #[arg(long)]
    width: Option<usize>,
    /// JSONL outcome log.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Embedding and hidden width for the probe model.
    #[arg(long)]
    dims: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_l: Option<usize>,
}

#[derive(Args)]
struct EffortStatsArgs {
    #[arg(long)]
    data: std::path::PathBuf,
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let file_config = match config::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    };
    let result = match cli.command {
        Command::Extract(args) => commands::extract(args, &file_config),
        Command::GenCorpus(args) => commands::gen_corpus(args, &file_config),
        Command::Train(args) => commands::train(args, &file_config),
        Command::Predict(args) => commands::predict(args, &file_config),
        Command::Evaluate(args) => commands::evaluate(args, &file_config),
        Command::Repair(args) => commands::repair(args, &file_config),
        Command::Gradcheck(args) => commands::gradcheck(args, &file_config),
        Command::EffortStats(args) => commands::effort_stats(args, &file_config),
    };
    match result {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
