//! Command-line front end: explore the AC-OPF feasible space by sequential
//! max-distance collection, partitioned exhaustive sampling, and
//! Hausdorff-distance comparison of the resulting point sets.
//!
//! Exit codes: 0 success, 1 infeasible or failure-dominated run, 2 usage
//! error, 3 I/O or parse error.

mod commands;
mod failure;
mod manifest;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "opfx",
    version,
    about = "Explore the feasible space of AC optimal power flow",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a case file and print a summary.
    Parse(commands::parse::ParseArgs),
    /// Build a solution library by sequential max-distance collection.
    Collect(commands::collect::CollectArgs),
    /// Exhaustively sample the feasible space over a voltage partition.
    Exhaust(commands::exhaust::ExhaustArgs),
    /// Hausdorff-compare solution libraries against an exhaustive set.
    Compare(commands::compare::CompareArgs),
    /// Merge distance tables and rank the objectives.
    Score(commands::score::ScoreArgs),
    /// Rerun a manifest and reproduce its artifacts byte for byte.
    Replay(commands::replay::ReplayArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Parse(args) => commands::parse::run(args),
        Cmd::Collect(args) => commands::collect::run(args),
        Cmd::Exhaust(args) => commands::exhaust::run(args),
        Cmd::Compare(args) => commands::compare::run(args),
        Cmd::Score(args) => commands::score::run(args),
        Cmd::Replay(args) => commands::replay::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.code());
    }
}
