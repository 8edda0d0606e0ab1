//! Session service for live play: a human drives the agent one move at a
//! time while the adaptive tracker pursues and learns between games.
//!
//! [`Session`] is the synchronous core and can be driven directly; [`serve`]
//! puts one session behind each websocket connection. The message schema is
//! in [`wire`].

mod error;
mod server;
mod session;
pub mod wire;

pub use error::ServiceError;
pub use server::{router, serve};
pub use session::{
    BeliefGrid, LearnJob, Learned, Reply, Session, SessionConfig, SessionId, SessionManager,
};
