//! Configuration, subcommands and file emitters behind the `roomgap` binary.

pub mod commands;
pub mod config;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use commands::{cmd_bands, cmd_converge, cmd_limit, cmd_mesh_dump, CliError, Outcome};
pub use config::{parse_config, ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "roomgap",
    version,
    about = "Band gaps of strips with periodic room-and-passage protuberances"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Existing output directory; overrides `output.directory`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for the phase sweep (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Reserved. Every algorithm is deterministic, so the value is ignored.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Limit spectrum and limit fiber bands.
    Limit,
    /// Band structure and gaps at every ε.
    Bands,
    /// Convergence study toward the limit spectrum.
    Converge,
    /// Write the ε-cell meshes.
    MeshDump,
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

/// Run a parsed command line; returns the process exit code.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Io("--config <path> is required".into()))?;
    let cfg = load_config(path)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Io("--threads must be positive".into()));
        }
        // a second build in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let dir = cli
        .out
        .clone()
        .unwrap_or_else(|| cfg.output.directory.clone());
    match cli.command {
        Command::Limit => cmd_limit(&cfg, &dir),
        Command::Bands => cmd_bands(&cfg, &dir),
        Command::Converge => cmd_converge(&cfg, &dir),
        Command::MeshDump => cmd_mesh_dump(&cfg, &dir),
    }
}
