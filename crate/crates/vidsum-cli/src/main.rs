//! `vidsum`: command-line toolkit for multi-pair video summarization —
//! alignment metrics, caption evaluation, exact and beam-search selection,
//! annotation filtering, pseudo-dataset generation, and corpus statistics.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error, 3 infeasible
//! request, 64 usage error.

mod cmd;
mod manifest;

use clap::Parser;
use vidsum_core::{Error, ErrorKind, Result};

#[derive(Debug, Parser)]
#[command(
    name = "vidsum",
    version,
    about = "Multi-pair video summarization metrics and selection toolkit"
)]
struct Cli {
    /// Maximum concurrent per-video tasks (default: $VIDSUM_JOBS, then all
    /// cores). Results never depend on this value.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Subcommand)]
enum Command {
    /// Score predictions with aligned keyframe matching.
    Akm(cmd::akm::AkmArgs),
    /// Per-video evaluation reports plus a corpus aggregate.
    Eval(cmd::eval::EvalArgs),
    /// Exact DP selection of N candidates per video.
    Select(cmd::select::SelectArgs),
    /// Beam-search selection of N (frame, caption) pairs per video.
    Beam(cmd::beam::BeamArgs),
    /// Remove annotated keyframes far from their caption centroid.
    Filter(cmd::filter::FilterArgs),
    /// Generate a deterministic synthetic dataset.
    PseudoGen(cmd::pseudo::PseudoGenArgs),
    /// Corpus statistics table.
    Stats(cmd::stats::StatsArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version land here too; those print to stdout and
            // exit 0, while genuine usage errors go to stderr with 64.
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(match e.kind() {
            ErrorKind::Validation => 1,
            ErrorKind::Io => 2,
            ErrorKind::Infeasible => 3,
        });
    }
}

fn run(cli: &Cli) -> Result<()> {
    init_jobs(cli.jobs)?;
    match &cli.command {
        Command::Akm(args) => cmd::akm::run(args),
        Command::Eval(args) => cmd::eval::run(args),
        Command::Select(args) => cmd::select::run(args),
        Command::Beam(args) => cmd::beam::run(args),
        Command::Filter(args) => cmd::filter::run(args),
        Command::PseudoGen(args) => cmd::pseudo::run(args),
        Command::Stats(args) => cmd::stats::run(args),
    }
}

/// Resolve --jobs (flag, then VIDSUM_JOBS, then rayon's default) and size
/// the global thread pool accordingly.
fn init_jobs(flag: Option<usize>) -> Result<()> {
    let jobs = match flag {
        Some(j) => Some(j),
        None => match std::env::var("VIDSUM_JOBS") {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
                Error::validation(format!("VIDSUM_JOBS must be a positive integer, got {v:?}"))
            })?),
            Err(std::env::VarError::NotPresent) => None,
            Err(std::env::VarError::NotUnicode(_)) => {
                return Err(Error::validation("VIDSUM_JOBS is not valid UTF-8"))
            }
        },
    };
    if let Some(jobs) = jobs {
        if jobs == 0 {
            return Err(Error::validation("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::validation(format!("cannot configure the thread pool: {e}")))?;
    }
    Ok(())
}
