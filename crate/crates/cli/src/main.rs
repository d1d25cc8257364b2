mod commands;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

/// Path, query and embedding reasoning over knowledge graphs.
///
/// Worker count comes from `KGREASON_THREADS` (default: all cores); outputs
/// are identical for every worker count. Exit codes: 0 ok, 1 usage, 2 data
/// error, 3 numeric divergence.
#[derive(Parser)]
#[command(name = "kgreason", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Semiring path scores from one or more sources (TSV).
    Paths(commands::PathsArgs),
    /// A single pruned propagation with its per-iteration trace (JSON).
    Prune(commands::PruneArgs),
    /// Relation graph of co-incidence counts (TSV).
    Lift(commands::LiftArgs),
    /// Execute queries with fuzzy operators; ranked answers (JSON).
    Query(commands::QueryArgs),
    /// Sample queries with easy/hard answers from a train/full pair (JSON).
    SampleQueries(commands::SampleArgs),
    /// Ranking, AUROC and cardinality metrics (JSON).
    Eval(commands::EvalArgs),
    /// Embedding scores, link prediction and relation-pattern checks.
    Score(commands::ScoreArgs),
}

/// Marks an error as a usage problem (exit 1) rather than bad data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn classify(err: &anyhow::Error) -> (u8, &'static str) {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return (1, "usage");
        }
        if let Some(e) = cause.downcast_ref::<kgreason::Error>() {
            return match e {
                _ if e.is_divergence() => (3, "divergence"),
                kgreason::Error::InvalidParameter(_) => (1, "usage"),
                _ => (2, "data"),
            };
        }
    }
    (2, "data")
}

fn report(kind: &str, message: &str) {
    let line: String = message
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ");
    eprintln!("error[{kind}]: {line}");
}

fn init_threads() -> anyhow::Result<()> {
    let Some(raw) = std::env::var_os("KGREASON_THREADS") else {
        return Ok(());
    };
    let n = raw
        .to_str()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("KGREASON_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(format!("cannot start {n} workers: {e}")))
}

fn run(command: Command) -> anyhow::Result<()> {
    init_threads()?;
    match command {
        Command::Paths(a) => commands::paths(&a),
        Command::Prune(a) => commands::prune(&a),
        Command::Lift(a) => commands::lift(&a),
        Command::Query(a) => commands::query(&a),
        Command::SampleQueries(a) => commands::sample_queries(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Score(a) => commands::score(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                _ => {
                    let text = e.render().to_string();
                    let head = text.split("\nUsage:").next().unwrap_or_default();
                    report("usage", head.trim_start_matches("error: "));
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, kind) = classify(&e);
            // Library errors already render their source; skip causes that
            // would only repeat it.
            let mut message = String::new();
            for cause in e.chain() {
                let text = cause.to_string();
                if !message.contains(&text) {
                    if !message.is_empty() {
                        message.push_str(": ");
                    }
                    message.push_str(&text);
                }
            }
            report(kind, &message);
            ExitCode::from(code)
        }
    }
}
