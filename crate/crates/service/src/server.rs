use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Deserialize;
use tokio::net::TcpListener;
use tokio::sync::mpsc;

use crate::session::{Learned, Session, SessionManager};
use crate::wire::{encode_server, ServerMessage};
use crate::ServiceError;

const DEFAULT_MAP: &str = "island";

#[derive(Debug, Deserialize)]
struct Connect {
    map: Option<String>,
}

/// `GET /ws?map=<name>` opens a session; `GET /maps` lists map names.
pub fn router(manager: Arc<SessionManager>) -> Router {
    Router::new()
        .route("/ws", get(connect))
        .route("/maps", get(list_maps))
        .with_state(manager)
}

pub async fn serve(listener: TcpListener, manager: Arc<SessionManager>) -> std::io::Result<()> {
    axum::serve(listener, router(manager)).await
}

async fn list_maps(State(manager): State<Arc<SessionManager>>) -> Json<Vec<String>> {
    Json(manager.map_names().map(str::to_string).collect())
}

async fn connect(
    ws: WebSocketUpgrade,
    State(manager): State<Arc<SessionManager>>,
    Query(query): Query<Connect>,
) -> Response {
    let name = query.map.unwrap_or_else(|| DEFAULT_MAP.to_string());
    if !manager.map_names().any(|m| m == name) {
        return (
            StatusCode::NOT_FOUND,
            ServiceError::UnknownMap(name).to_string(),
        )
            .into_response();
    }
    ws.on_upgrade(move |socket| async move {
        match manager.create_session(&name) {
            Ok(session) => {
                let id = session.id().to_string();
                log::info!("session {id} opened on {name}");
                run_connection(socket, session).await;
                manager.close_session(&id);
                log::info!("session {id} closed");
            }
            Err(e) => log::error!("could not open a session on {name}: {e}"),
        }
    })
}

async fn send(socket: &mut WebSocket, msg: &ServerMessage) -> bool {
    socket
        .send(Message::Text(encode_server(msg).into()))
        .await
        .is_ok()
}

/// Client messages are handled one at a time in arrival order. Learning runs
/// on the blocking pool and reports back through a channel, so turns keep
/// flowing while it works.
async fn run_connection(mut socket: WebSocket, mut session: Session) {
    let (done_tx, mut done_rx) = mpsc::unbounded_channel::<Result<Learned, ServiceError>>();
    if !send(&mut socket, &session.welcome()).await {
        return;
    }
    loop {
        tokio::select! {
            incoming = socket.recv() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(Message::Binary(_))) => {
                        let e = ServiceError::BadMessage("binary frames are not supported".into());
                        if !send(&mut socket, &(&e).into()).await {
                            break;
                        }
                        continue;
                    }
                    Some(Ok(_)) => continue,
                };
                let reply = session.handle_text(text.as_str());
                if let Some(job) = reply.learn {
                    let tx = done_tx.clone();
                    tokio::spawn(async move {
                        let result = tokio::task::spawn_blocking(move || job.run())
                            .await
                            .unwrap_or_else(|e| Err(ServiceError::LearningTask(e.to_string())));
                        let _ = tx.send(result);
                    });
                }
                for m in &reply.messages {
                    if !send(&mut socket, m).await {
                        return;
                    }
                }
            }
            Some(result) = done_rx.recv() => {
                let msg = session.finish_learning(result);
                if !send(&mut socket, &msg).await {
                    break;
                }
            }
        }
    }
}
