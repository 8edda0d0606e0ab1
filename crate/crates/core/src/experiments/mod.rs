//! Scripted games against the tracker, the repeat/switch/alternate
//! protocols, statistics and file exports.

mod export;
mod game;
mod plan;
mod runner;
mod stats;

pub use export::{
    export_heatmap, export_learning_curve, heatmap_csv, heatmap_ppm, learning_curve_csv,
    HEATMAP_HIGH,
};
pub use game::{
    run_game, EpisodeLog, Game, GameRules, GameRun, Outcome, ScriptedStrategy, StepResult,
    TouchRule, TurnRecord,
};
pub use plan::{
    load_plan, parse_plan, ExperimentPlan, MapSource, PlanConfig, PlanKind, TrackerVariant,
};
pub use runner::{
    replay_beliefs, run_experiment, simulate, warmup_strategies, write_outputs, Comparison,
    ExperimentOutput, HeatmapFrame, StatsReport, VariantCurve, VariantRun,
};
pub use stats::{
    ln_gamma, mean_distance_with, mean_estimate_distance, regularized_incomplete_beta,
    student_t_two_sided, welch_t_test, DistanceMetric, DistanceOptions, WelchResult,
};

use thiserror::Error;

use crate::grid::{GridError, MapError, MoveAction, Position};
use crate::hmm::HmmError;
use crate::pursuit::PursuitError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{file}:{line}: {message}")]
    Config {
        file: String,
        line: usize,
        message: String,
    },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("strategy {strategy}: move {step} ({action:?}) from {from} runs into a wall")]
    ScriptIllegalMove {
        strategy: String,
        step: usize,
        from: Position,
        action: MoveAction,
    },
    #[error("illegal move {action:?} from {from}")]
    IllegalMove { from: Position, action: MoveAction },
    #[error("game already finished ({0:?})")]
    GameOver(Outcome),
    #[error("need at least two samples per group, got {a} and {b}")]
    TooFewSamples { a: usize, b: usize },
    #[error("samples must be finite")]
    NonFiniteSample,
    #[error("both samples have zero variance")]
    DegenerateVariance,
    #[error("map {path}: {source}")]
    Map { path: String, source: MapError },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Pursuit(#[from] PursuitError),
    #[error(transparent)]
    Hmm(#[from] HmmError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

impl ExperimentError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
