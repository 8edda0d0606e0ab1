use hmmtrack_core::experiments::ExperimentError;
use hmmtrack_core::grid::{MoveAction, Position};
use hmmtrack_core::hmm::HmmError;
use hmmtrack_core::pursuit::PursuitError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no map named {0:?}")]
    UnknownMap(String),
    #[error("no game in progress")]
    NoLiveGame,
    #[error("a game is already in progress")]
    GameInProgress,
    #[error("cannot move {action:?} from {from}")]
    IllegalMove { from: Position, action: MoveAction },
    #[error("belief debugging is off")]
    DebugDisabled,
    #[error("unsupported protocol version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed message: {0}")]
    BadMessage(String),
    #[error("learning task failed: {0}")]
    LearningTask(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Pursuit(#[from] PursuitError),
    #[error(transparent)]
    Hmm(#[from] HmmError),
}

impl ServiceError {
    /// Stable identifier carried in `Error` messages.
    pub fn code(&self) -> &'static str {
        match self {
            Self::UnknownMap(_) => "unknown_map",
            Self::NoLiveGame => "no_live_game",
            Self::GameInProgress => "game_in_progress",
            Self::IllegalMove { .. } => "illegal_move",
            Self::DebugDisabled => "debug_disabled",
            Self::UnsupportedVersion(_) => "unsupported_version",
            Self::BadMessage(_) => "bad_message",
            Self::LearningTask(_) => "learning_failed",
            Self::Experiment(_) | Self::Pursuit(_) | Self::Hmm(_) => "internal",
        }
    }
}
