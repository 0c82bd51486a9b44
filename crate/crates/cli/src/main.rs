//! `ctcgraph`: build decoding graphs, decode CTC posteriors, rescore n-best
//! lists and manage tar shards.

mod config;
mod decode;
mod graph;
mod shards;

use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Input that failed to parse, or an invalid combination of arguments.
/// Exits with status 2.
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

/// Prefixes a `line N: ...` style parse failure with its file.
pub fn parse_failure(file: &Path, line: usize, message: impl fmt::Display) -> anyhow::Error {
    usage(format!("{}:{line}: {message}", file.display()))
}

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

#[derive(Parser)]
#[command(
    name = "ctcgraph",
    version,
    about = "CTC decoding with WFST graphs, contextual biasing and rescoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Build T (and L, G, TLG when a lexicon and ARPA model are given).
    BuildGraph(graph::BuildGraphArgs),
    /// Decode posterior files into n-best lists.
    Decode(decode::DecodeArgs),
    /// Rescore an n-best file with L2R/R2L score tables.
    Rescore(decode::RescoreArgs),
    /// Pack a raw sample list into tar shards.
    Pack(shards::PackArgs),
    /// List the records of shards: key and payload bytes.
    CatShards(shards::CatArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::BuildGraph(a) => graph::run(a),
        Command::Decode(a) => decode::run(a),
        Command::Rescore(a) => decode::run_rescore(a),
        Command::Pack(a) => shards::run_pack(a),
        Command::CatShards(a) => shards::run_cat(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
