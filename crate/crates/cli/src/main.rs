use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Crash deduplication by fault signatures.
#[derive(Parser, Debug)]
#[command(name = "fuzzeraid", version, about)]
struct Cli {
    /// Worker threads for per-crash executions (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// More log output (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a crash corpus by mutating a crashing seed input.
    Explore(ExploreArgs),
    /// Label corpus crashes with the bug whose patch removes them.
    Label(LabelArgs),
    /// Classify crashes, generate signatures and merge them into groups.
    Group(GroupArgs),
    /// Deduplicate with a conventional strategy.
    Baseline(BaselineArgs),
    /// Score groups against ground-truth labels.
    Report(ReportArgs),
    /// Re-check reproduction and 1-minimality of stored signatures.
    Validate(ValidateArgs),
    /// Run the whole experiment over bundled fixtures.
    Suite(SuiteArgs),
}

#[derive(Args, Debug, Clone)]
struct Budget {
    /// Interpreter steps per execution.
    #[arg(long, default_value_t = fuzzeraid_core::minilang::DEFAULT_STEP_BUDGET)]
    step_budget: u64,
}

#[derive(Args, Debug)]
struct ExploreArgs {
    #[arg(long)]
    program: PathBuf,
    /// File holding the crashing seed input.
    #[arg(long)]
    seed_input: PathBuf,
    #[arg(long, default_value_t = 1000)]
    iters: u64,
    /// Mutation rng seed (FUZZERAID_SEED overrides).
    #[arg(long, default_value_t = 0)]
    rng: u64,
    #[arg(long, default_value_t = 64)]
    max_len: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    budget: Budget,
}

#[derive(Args, Debug)]
struct LabelArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    program: PathBuf,
    /// Patched program for one bug, as BUG=FILE (repeatable).
    #[arg(long = "patch", value_name = "BUG=FILE", required = true)]
    patches: Vec<String>,
    /// Output labels file.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    budget: Budget,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Unit {
    Lines,
    Chars,
}

#[derive(Args, Debug, Clone)]
struct TriageArgs {
    #[arg(long, default_value_t = 0.7)]
    threshold: f64,
    #[arg(long, default_value_t = 10)]
    retries: u32,
    #[arg(long, default_value_t = fuzzeraid_core::siggen::DEFAULT_MAX_ORACLE_RUNS)]
    max_oracle_runs: u64,
    /// Unit of the signature edit distance.
    #[arg(long, value_enum, default_value_t = Unit::Lines)]
    distance: Unit,
    #[command(flatten)]
    budget: Budget,
}

#[derive(Args, Debug)]
struct GroupArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    program: PathBuf,
    /// Signature store from an earlier campaign to classify against first.
    #[arg(long)]
    seed_signatures: Option<PathBuf>,
    /// Output directory (signatures/, groups.json, missed.json).
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    triage: TriageArgs,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    program: PathBuf,
    /// afl, stack:N or site.
    #[arg(long)]
    mode: fuzzeraid_core::baselines::BaselineMode,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    budget: Budget,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    groups: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    missed: Option<PathBuf>,
    /// Signature store, to count signatures per bug.
    #[arg(long)]
    signatures: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    signatures: PathBuf,
    #[command(flatten)]
    budget: Budget,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    /// Directory holding fixture subdirectories.
    #[arg(long, default_value = "fixtures")]
    fixtures: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Rng seed for exploration and capping (FUZZERAID_SEED overrides).
    #[arg(long, default_value_t = 1)]
    rng: u64,
    /// Only run these fixtures.
    #[arg(long)]
    only: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    triage: TriageArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
