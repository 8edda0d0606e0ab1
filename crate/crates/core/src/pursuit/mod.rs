//! The tracking opponent: live belief filtering, cross-game learning and
//! shortest-path pursuit.

mod knowledge;
mod path;
mod tracker;

pub use knowledge::{
    KnowledgeStore, ObservationRecord, DEFAULT_BLEND_LAMBDA, DEFAULT_SHORT_WINDOW,
    STORE_FORMAT_VERSION,
};
pub use path::{dijkstra, next_move, next_move_in, DistanceField};
pub use tracker::{IngestOutcome, TrackerState};

use thiserror::Error;

use crate::grid::GridError;
use crate::hmm::HmmError;

#[derive(Debug, Error)]
pub enum PursuitError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no archived episodes to learn from")]
    NoEpisodes,
    #[error("episode {episode} is impossible under the model (step {step})")]
    InconsistentEpisode { episode: usize, step: usize },
    #[error("store was trained on map {expected}, not {found}")]
    MapMismatch { expected: String, found: String },
    #[error("unsupported knowledge store version {found:?}")]
    FormatVersion { found: Option<u64> },
    #[error("malformed knowledge store: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Hmm(#[from] HmmError),
    #[error(transparent)]
    Grid(#[from] GridError),
}
