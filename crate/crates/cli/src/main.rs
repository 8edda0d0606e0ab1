use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hmmtrack_core::experiments::ExperimentError;
use hmmtrack_core::grid::{bundled_map, parse_map, GridMap, MapError};
use hmmtrack_core::hmm::HmmError;
use hmmtrack_core::pursuit::PursuitError;
use hmmtrack_service::ServiceError;
use thiserror::Error;

mod export;
mod learn;
mod play;
mod serve;
mod simulate;
mod stats;

#[derive(Debug, Parser)]
#[command(
    name = "hmmtrack",
    version,
    about = "Track a hidden agent on a grid and learn its habits across games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment plan and write a run directory.
    Simulate(simulate::SimulateArgs),
    /// Fit a knowledge store to its archived episodes.
    Learn(learn::LearnArgs),
    /// Welch t-test between the mean-distance curves of two runs.
    Stats(stats::StatsArgs),
    /// Heatmaps and learning curves from a run directory.
    Export(export::ExportArgs),
    /// Serve live sessions over websockets.
    Serve(serve::ServeArgs),
    /// Play against the tracker in the terminal.
    Play(play::PlayArgs),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Pursuit(#[from] PursuitError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error(transparent)]
    Hmm(#[from] HmmError),
    #[error("map {name}: {source}")]
    Map { name: String, source: MapError },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.display().to_string(),
        source,
    })
}

/// Bundled map name or path to a map file.
#[derive(Debug, Clone, Args)]
pub struct MapArg {
    /// Bundled map name or map file path.
    #[arg(long, default_value = "island")]
    map: String,
}

impl MapArg {
    pub fn load(&self) -> Result<GridMap> {
        load_map(&self.map)
    }
}

pub fn load_map(spec: &str) -> Result<GridMap> {
    let text = match bundled_map(spec) {
        Some(t) => t.to_string(),
        None => {
            let path = PathBuf::from(spec);
            std::fs::read_to_string(&path).map_err(io_err(&path))?
        }
    };
    parse_map(&text).map_err(|source| CliError::Map {
        name: spec.to_string(),
        source,
    })
}

/// `lo-hi`, 1-based and inclusive.
pub fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (lo, hi) = s.split_once('-').unwrap_or((s, s));
    let lo: usize = lo.trim().parse().map_err(|_| format!("bad range {s:?}"))?;
    let hi: usize = hi.trim().parse().map_err(|_| format!("bad range {s:?}"))?;
    if lo == 0 || hi < lo {
        return Err(format!("bad range {s:?}: need 1 <= lo <= hi"));
    }
    Ok((lo, hi))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Learn(a) => learn::run(a),
        Command::Stats(a) => stats::run(a),
        Command::Export(a) => export::run(a),
        Command::Serve(a) => serve::run(a),
        Command::Play(a) => play::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
