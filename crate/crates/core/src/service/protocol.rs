//! JSON messages exchanged over the session WebSocket.
//!
//! Every message is one JSON object with a `kind` field. Clients may attach
//! an integer `seq`; the reply to that message echoes it.

use serde::{Deserialize, Serialize};

use crate::interaction::{EnergyWeights, StepOutcome};
use crate::io::ContourDocument;

/// Codes that exist only at the protocol level. Pipeline failures use
/// [`crate::BeasError::code`].
pub const SESSION_NOT_FOUND: &str = "SESSION_NOT_FOUND";
pub const BAD_MESSAGE: &str = "BAD_MESSAGE";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClientMessage {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    #[serde(flatten)]
    pub request: Request,
}

impl From<Request> for ClientMessage {
    fn from(request: Request) -> Self {
        Self { seq: None, request }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Request {
    Open {
        source: OpenSource,
    },
    State {
        session_id: String,
    },
    AddAnchor {
        session_id: String,
        x: f64,
        y: f64,
    },
    MoveAnchor {
        session_id: String,
        anchor_id: u64,
        x: f64,
        y: f64,
    },
    RemoveAnchor {
        session_id: String,
        anchor_id: u64,
    },
    Step {
        session_id: String,
    },
    SetWeights {
        session_id: String,
        alpha: f64,
        beta: f64,
        gamma: f64,
    },
    Reset {
        session_id: String,
    },
    Close {
        session_id: String,
    },
    Export {
        session_id: String,
    },
}

impl Request {
    pub fn session_id(&self) -> Option<&str> {
        match self {
            Request::Open { .. } => None,
            Request::State { session_id }
            | Request::AddAnchor { session_id, .. }
            | Request::MoveAnchor { session_id, .. }
            | Request::RemoveAnchor { session_id, .. }
            | Request::Step { session_id }
            | Request::SetWeights { session_id, .. }
            | Request::Reset { session_id }
            | Request::Close { session_id }
            | Request::Export { session_id } => Some(session_id),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OpenSource {
    /// A synthetic phantom; `size` defaults to the server's phantom size.
    Phantom {
        seed: u64,
        #[serde(default)]
        corruption: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        size: Option<usize>,
    },
    /// Base64-encoded 8-bit PGM or PNG files.
    Upload { image: String, prob_map: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServerMessage {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq: Option<u64>,
    #[serde(flatten)]
    pub reply: Reply,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reply {
    State(SessionState),
    Export {
        session_id: String,
        contour: ContourDocument,
        /// Base64 binary PGM of the rasterized contour.
        mask_pgm: String,
    },
    Closed {
        session_id: String,
    },
    Error {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session_id: Option<String>,
        code: String,
        message: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub contour: ContourDocument,
    pub anchors: Vec<AnchorView>,
    pub weights: EnergyWeights,
    /// Result of the descent run triggered by this message, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<StepOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replaced_anchor: Option<u64>,
    /// Present on the reply to `open`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorView {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub rho: f64,
    pub theta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub width: usize,
    pub height: usize,
    /// Dice of the stage-one contour against the thresholded map.
    pub dice_vs_threshold: f64,
    pub stage_one_iterations: usize,
    pub stage_one_converged: bool,
    pub multiple_components: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_format() {
        let text = r#"{"kind":"add_anchor","seq":4,"session_id":"s1","x":10.5,"y":3}"#;
        let m: ClientMessage = serde_json::from_str(text).unwrap();
        assert_eq!(m.seq, Some(4));
        assert_eq!(
            m.request,
            Request::AddAnchor {
                session_id: "s1".into(),
                x: 10.5,
                y: 3.0
            }
        );
        let open = r#"{"kind":"open","source":{"type":"phantom","seed":7}}"#;
        let m: ClientMessage = serde_json::from_str(open).unwrap();
        assert!(matches!(
            m.request,
            Request::Open {
                source: OpenSource::Phantom {
                    seed: 7,
                    corruption: 0,
                    size: None
                }
            }
        ));
        let err = ServerMessage {
            seq: None,
            reply: Reply::Error {
                session_id: None,
                code: BAD_MESSAGE.into(),
                message: "x".into(),
            },
        };
        let v: serde_json::Value = serde_json::to_value(&err).unwrap();
        assert_eq!(v["kind"], "error");
        assert_eq!(v["code"], "BAD_MESSAGE");
    }
}
