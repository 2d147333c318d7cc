//! WebSocket and health endpoints over a [`SessionHub`].

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

use super::hub::SessionHub;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
    pub active_sessions: usize,
}

pub fn router(hub: Arc<SessionHub>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/ws", get(upgrade))
        .with_state(hub)
}

async fn health(State(hub): State<Arc<SessionHub>>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        active_sessions: hub.active_sessions(),
    })
}

async fn upgrade(ws: WebSocketUpgrade, State(hub): State<Arc<SessionHub>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, hub))
}

/// Messages on one connection are handled strictly one after another.
async fn connection(mut socket: WebSocket, hub: Arc<SessionHub>) {
    while let Some(Ok(msg)) = socket.recv().await {
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Close(_) => break,
            _ => continue,
        };
        let h = hub.clone();
        let reply = match tokio::task::spawn_blocking(move || h.handle_text(&text)).await {
            Ok(reply) => reply,
            Err(e) => {
                log::error!("session handler panicked: {e}");
                break;
            }
        };
        if socket.send(Message::Text(reply.into())).await.is_err() {
            break;
        }
    }
}

/// Serves until the listener fails, sweeping idle sessions in the
/// background.
pub async fn serve(listener: TcpListener, hub: Arc<SessionHub>) -> std::io::Result<()> {
    let sweeper = hub.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(30));
        loop {
            tick.tick().await;
            let removed = sweeper.sweep();
            if removed > 0 {
                log::info!("expired {removed} idle sessions");
            }
        }
    });
    axum::serve(listener, router(hub)).await
}

/// Binds `addr` and serves on a background task; returns the bound address.
/// Used by tests and embedders that need an ephemeral port.
pub async fn spawn(addr: SocketAddr, hub: Arc<SessionHub>) -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    tokio::spawn(async move {
        if let Err(e) = serve(listener, hub).await {
            log::error!("server stopped: {e}");
        }
    });
    Ok(local)
}
