//! Networked editing sessions: a JSON protocol over WebSocket plus a health
//! endpoint.

pub mod hub;
pub mod protocol;
pub mod server;

pub use hub::{SessionHub, DEFAULT_IDLE_TIMEOUT};
pub use protocol::{ClientMessage, OpenSource, Reply, Request, ServerMessage, SessionState};
