//! JSON messages exchanged over a session connection. Every message is one
//! JSON object with a `type` tag and a `protocol_version` field.

use hmmtrack_core::experiments::Outcome;
use hmmtrack_core::grid::{MoveAction, Position};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ServiceError;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ClientMessage {
    NewGame,
    Move { action: MoveAction },
    Resign,
    SetDebug { on: bool },
}

/// Board snapshot after a turn, or at the start of a game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub turn: usize,
    pub agent_pos: Position,
    pub ai_pos: Position,
    pub goals: Vec<Position>,
    pub cameras: Vec<Position>,
    pub occupy_progress: usize,
    /// Rows of the tracker's belief, `null` on walls. Only sent in debug mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub belief_grid: Option<Vec<Vec<Option<f64>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ServerMessage {
    /// First message on a connection.
    Welcome {
        session_id: String,
        map_name: String,
        width: usize,
        height: usize,
        /// Map text, one string per row.
        rows: Vec<String>,
    },
    State(GameState),
    GameOver {
        outcome: Outcome,
        mean_distance: f64,
    },
    LearningDone {
        games_played: usize,
    },
    Error {
        code: String,
        text: String,
    },
}

impl From<&ServiceError> for ServerMessage {
    fn from(e: &ServiceError) -> Self {
        Self::Error {
            code: e.code().to_string(),
            text: e.to_string(),
        }
    }
}

fn with_version<T: Serialize>(msg: &T) -> String {
    let mut value = serde_json::to_value(msg).expect("messages serialize");
    if let Value::Object(map) = &mut value {
        map.insert("protocol_version".into(), PROTOCOL_VERSION.into());
    }
    value.to_string()
}

fn without_version<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, ServiceError> {
    let mut value: Value =
        serde_json::from_str(text).map_err(|e| ServiceError::BadMessage(e.to_string()))?;
    let map = value
        .as_object_mut()
        .ok_or_else(|| ServiceError::BadMessage("expected a JSON object".into()))?;
    match map.remove("protocol_version") {
        None => return Err(ServiceError::BadMessage("missing protocol_version".into())),
        Some(v) => match v.as_u64() {
            Some(v) if v == u64::from(PROTOCOL_VERSION) => {}
            Some(v) => {
                return Err(ServiceError::UnsupportedVersion(
                    v.try_into().unwrap_or(u32::MAX),
                ))
            }
            None => {
                return Err(ServiceError::BadMessage(
                    "protocol_version must be an integer".into(),
                ))
            }
        },
    }
    serde_json::from_value(value).map_err(|e| ServiceError::BadMessage(e.to_string()))
}

pub fn encode_client(msg: &ClientMessage) -> String {
    with_version(msg)
}

pub fn decode_client(text: &str) -> Result<ClientMessage, ServiceError> {
    without_version(text)
}

pub fn encode_server(msg: &ServerMessage) -> String {
    with_version(msg)
}

pub fn decode_server(text: &str) -> Result<ServerMessage, ServiceError> {
    without_version(text)
}
