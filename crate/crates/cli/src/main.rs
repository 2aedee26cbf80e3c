//! `occluforge` — command-line front end for the occlusion-robust motion
//! capture toolkit: synthetic dataset generation, visibility simulation,
//! occlusion statistics, rig selection, resampling plans, solver training,
//! evaluation, gradient checking, and attention-chain inspection.

mod commands;
mod ctx;
mod error;

use clap::{Parser, Subcommand, ValueEnum};
use ctx::Ctx;
use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "occluforge", version, about = "Occlusion-robust optical motion capture toolkit")]
struct Cli {
    /// Project configuration file (JSON). Defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed; overrides the seed from the configuration file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for parallel sections (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Output path (directory or file depending on the command).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Force bitwise-reproducible runs (single worker, ordered reductions).
    #[arg(long, global = true)]
    deterministic: bool,

    /// Emit errors as a JSON object on stderr instead of plain text.
    #[arg(long, global = true)]
    json_errors: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Separate position and rotation solvers.
    Decoupled,
    /// Single network predicting positions and rotations jointly.
    Merged,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Split {
    All,
    Holdout,
    Train,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic articulated-chain dataset container.
    Toygen,
    /// Simulate per-marker visibility for one sequence of the toy scene.
    Simulate,
    /// Summarise a visibility mask: per-marker occlusion and run lengths.
    Stats {
        /// Visibility mask file (.mask).
        #[arg(long)]
        input: PathBuf,
    },
    /// Rank candidate camera rigs against reference occlusion statistics.
    SelectRig {
        /// Number of candidate rigs to generate around the configured one.
        #[arg(long, default_value_t = 8)]
        candidates: usize,
    },
    /// Compute an oversampling plan for under-represented occlusion levels.
    Oversample {
        /// Dataset container directory.
        #[arg(long)]
        input: PathBuf,
        /// Occlusion level above which sequences count as under-represented.
        #[arg(long, default_value_t = 0.15)]
        threshold: f64,
        /// Target share of high-occlusion sequences after resampling.
        #[arg(long, default_value_t = 0.5)]
        target_ratio: f64,
    },
    /// Train solvers on a dataset container and write checkpoints.
    Train {
        /// Dataset container directory.
        #[arg(long)]
        input: PathBuf,
        /// Solver arrangement to train.
        #[arg(long, value_enum, default_value_t = Mode::Decoupled)]
        mode: Mode,
        /// Disable marker-joint chain attention masking (ablation).
        #[arg(long)]
        no_chain: bool,
    },
    /// Evaluate trained solvers: position/orientation error by severity.
    Eval {
        /// Dataset container directory.
        #[arg(long)]
        input: PathBuf,
        /// Directory containing checkpoints written by `train`.
        #[arg(long)]
        checkpoints: Option<PathBuf>,
        /// Solver arrangement to evaluate.
        #[arg(long, value_enum, default_value_t = Mode::Decoupled)]
        mode: Mode,
        /// Disable marker-joint chain attention masking (ablation).
        #[arg(long)]
        no_chain: bool,
        /// Which frames to include.
        #[arg(long, value_enum, default_value_t = Split::All)]
        split: Split,
        /// Evaluate the ground-truth pass-through stub instead of a solver.
        #[arg(long)]
        oracle: bool,
    },
    /// Verify analytic gradients against finite differences.
    Gradcheck {
        /// Parameters to sample per loss.
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Report the marker-joint attention chain for one frame.
    ChainReport {
        /// Dataset container directory.
        #[arg(long)]
        input: PathBuf,
        /// Directory containing checkpoints written by `train`.
        #[arg(long)]
        checkpoints: Option<PathBuf>,
        /// Frame index into the flattened dataset.
        #[arg(long, default_value_t = 0)]
        frame: usize,
        /// Disable marker-joint chain attention masking (ablation).
        #[arg(long)]
        no_chain: bool,
    },
    /// Re-corrupt a container's input channel from its ground truth.
    Corrupt {
        /// Dataset container directory.
        #[arg(long)]
        input: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let ctx = Ctx::new(
        cli.config.as_deref(),
        cli.seed,
        cli.threads,
        cli.deterministic,
        cli.out,
    )?;
    match cli.command {
        Command::Toygen => commands::toygen::run(&ctx),
        Command::Simulate => commands::simulate::run(&ctx),
        Command::Stats { input } => commands::stats::run(&ctx, &input),
        Command::SelectRig { candidates } => commands::select_rig::run(&ctx, candidates),
        Command::Oversample {
            input,
            threshold,
            target_ratio,
        } => commands::oversample::run(&ctx, &input, threshold, target_ratio),
        Command::Train {
            input,
            mode,
            no_chain,
        } => commands::train::run(&ctx, &input, mode, no_chain),
        Command::Eval {
            input,
            checkpoints,
            mode,
            no_chain,
            split,
            oracle,
        } => commands::eval::run(
            &ctx,
            &input,
            checkpoints.as_deref(),
            mode,
            no_chain,
            split,
            oracle,
        ),
        Command::Gradcheck { samples } => commands::gradcheck::run(&ctx, samples),
        Command::ChainReport {
            input,
            checkpoints,
            frame,
            no_chain,
        } => commands::chain_report::run(&ctx, &input, checkpoints.as_deref(), frame, no_chain),
        Command::Corrupt { input } => commands::corrupt::run(&ctx, &input),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            eprint!("{err}");
            return ExitCode::from(1u8);
        }
    };
    let json_errors = cli.json_errors;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if json_errors {
                let body = serde_json::json!({
                    "error": { "kind": err.kind(), "message": err.message() }
                });
                eprintln!("{body}");
            } else {
                eprintln!("error: {}", err.message());
            }
            ExitCode::from(err.exit_code())
        }
    }
}
