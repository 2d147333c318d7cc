//! In-process session registry. Transport-agnostic: the WebSocket server and
//! tests drive it through [`SessionHub::handle`].

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use parking_lot::Mutex;

use super::protocol::*;
use crate::config::Config;
use crate::error::BeasError;
use crate::geometry::Image;
use crate::interaction::{interactive_step, EnergyWeights};
use crate::io::{decode_gray8_bytes, encode_pgm, mask_to_gray8, ContourDocument};
use crate::phantom::generate_phantom;
use crate::pipeline::{dice, open_session, ProbabilityMap, RefineSession};

pub const DEFAULT_IDLE_TIMEOUT: Duration = Duration::from_secs(30 * 60);

struct Entry {
    session: RefineSession,
    last_used: Instant,
}

/// Failure of one request, rendered as an `error` reply.
struct Failure {
    code: String,
    message: String,
}

impl From<BeasError> for Failure {
    fn from(e: BeasError) -> Self {
        Self {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

pub struct SessionHub {
    config: Config,
    idle_timeout: Duration,
    sessions: Mutex<HashMap<String, Arc<Mutex<Entry>>>>,
    next_id: AtomicU64,
}

impl SessionHub {
    pub fn new(config: Config, idle_timeout: Duration) -> Self {
        Self {
            config,
            idle_timeout,
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        }
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn active_sessions(&self) -> usize {
        self.sessions.lock().len()
    }

    /// Drops sessions idle for longer than the timeout. Returns how many
    /// were removed.
    pub fn sweep(&self) -> usize {
        self.sweep_at(Instant::now())
    }

    fn sweep_at(&self, now: Instant) -> usize {
        let mut map = self.sessions.lock();
        let before = map.len();
        map.retain(|_, e| {
            // a locked entry is in use, so not idle
            e.try_lock()
                .map(|e| now.saturating_duration_since(e.last_used) <= self.idle_timeout)
                .unwrap_or(true)
        });
        before - map.len()
    }

    /// Parses one text frame and returns the serialized reply.
    pub fn handle_text(&self, text: &str) -> String {
        let reply = match serde_json::from_str::<ClientMessage>(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => ServerMessage {
                seq: None,
                reply: Reply::Error {
                    session_id: None,
                    code: BAD_MESSAGE.into(),
                    message: e.to_string(),
                },
            },
        };
        serde_json::to_string(&reply).expect("server message serializes")
    }

    pub fn handle(&self, msg: ClientMessage) -> ServerMessage {
        let session_id = msg.request.session_id().map(str::to_owned);
        let reply = self.dispatch(msg.request).unwrap_or_else(|f| Reply::Error {
            session_id,
            code: f.code,
            message: f.message,
        });
        ServerMessage {
            seq: msg.seq,
            reply,
        }
    }

    fn dispatch(&self, request: Request) -> Result<Reply, Failure> {
        match request {
            Request::Open { source } => self.open(source),
            Request::Close { session_id } => {
                self.sessions
                    .lock()
                    .remove(&session_id)
                    .ok_or_else(|| not_found(&session_id))?;
                Ok(Reply::Closed { session_id })
            }
            Request::State { session_id } => {
                self.with_session(&session_id, |s| Ok(state(&session_id, s)))
            }
            Request::AddAnchor { session_id, x, y } => self.with_session(&session_id, |s| {
                let (id, replaced) = s.add_anchor(x, y)?;
                let step = interactive_step(s)?;
                let mut st = state(&session_id, s);
                st.step = Some(step);
                st.anchor_id = Some(id);
                st.replaced_anchor = replaced;
                Ok(st)
            }),
            Request::MoveAnchor {
                session_id,
                anchor_id,
                x,
                y,
            } => self.with_session(&session_id, |s| {
                s.move_anchor(anchor_id, x, y)?;
                let step = interactive_step(s)?;
                let mut st = state(&session_id, s);
                st.step = Some(step);
                st.anchor_id = Some(anchor_id);
                Ok(st)
            }),
            Request::RemoveAnchor {
                session_id,
                anchor_id,
            } => self.with_session(&session_id, |s| {
                s.remove_anchor(anchor_id)?;
                let step = interactive_step(s)?;
                let mut st = state(&session_id, s);
                st.step = Some(step);
                Ok(st)
            }),
            Request::Step { session_id } => self.with_session(&session_id, |s| {
                let step = interactive_step(s)?;
                let mut st = state(&session_id, s);
                st.step = Some(step);
                Ok(st)
            }),
            Request::SetWeights {
                session_id,
                alpha,
                beta,
                gamma,
            } => self.with_session(&session_id, |s| {
                s.set_weights(EnergyWeights { alpha, beta, gamma })?;
                Ok(state(&session_id, s))
            }),
            Request::Reset { session_id } => self.with_session(&session_id, |s| {
                s.reset();
                Ok(state(&session_id, s))
            }),
            Request::Export { session_id } => {
                let entry = self.entry(&session_id)?;
                let mut e = entry.lock();
                e.last_used = Instant::now();
                let (contour, mask_pgm) = export(&e.session);
                Ok(Reply::Export {
                    session_id,
                    contour,
                    mask_pgm: B64.encode(mask_pgm),
                })
            }
        }
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<Entry>>, Failure> {
        self.sessions
            .lock()
            .get(id)
            .cloned()
            .ok_or_else(|| not_found(id))
    }

    /// Runs `f` with the session locked, so requests for one session apply
    /// one at a time in arrival order.
    fn with_session(
        &self,
        id: &str,
        f: impl FnOnce(&mut RefineSession) -> Result<SessionState, BeasError>,
    ) -> Result<Reply, Failure> {
        let entry = self.entry(id)?;
        let mut e = entry.lock();
        e.last_used = Instant::now();
        Ok(Reply::State(f(&mut e.session)?))
    }

    fn open(&self, source: OpenSource) -> Result<Reply, Failure> {
        let (image, prob_map) = match source {
            OpenSource::Phantom {
                seed,
                corruption,
                size,
            } => {
                let mut cfg = self.config.phantom.clone();
                if let Some(size) = size {
                    cfg.size = size;
                }
                let p = generate_phantom(seed, corruption, &cfg)?;
                (p.image, p.prob_map)
            }
            OpenSource::Upload { image, prob_map } => (
                decode_upload(&image)?,
                ProbabilityMap::new(decode_upload(&prob_map)?)?,
            ),
        };
        let session = open_session(image, prob_map, &self.config)?;
        let thresholded = session.prob_map().threshold(self.config.threshold);
        let (height, width) = session.shape();
        let one = session.stage_one();
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let mut st = state(&id, &session);
        st.diagnostics = Some(Diagnostics {
            width,
            height,
            dice_vs_threshold: dice(&session.mask(), &thresholded)?,
            stage_one_iterations: one.iterations,
            stage_one_converged: one.converged,
            multiple_components: one.multiple_components,
        });
        self.sessions.lock().insert(
            id,
            Arc::new(Mutex::new(Entry {
                session,
                last_used: Instant::now(),
            })),
        );
        Ok(Reply::State(st))
    }
}

fn not_found(id: &str) -> Failure {
    Failure {
        code: SESSION_NOT_FOUND.into(),
        message: format!("no session {id:?}"),
    }
}

fn decode_upload(b64: &str) -> Result<Image, Failure> {
    let bytes = B64.decode(b64).map_err(|e| Failure {
        code: BAD_MESSAGE.into(),
        message: format!("base64: {e}"),
    })?;
    Ok(decode_gray8_bytes(&bytes)?.mapv(|v| v as f64 / 255.0))
}

fn state(id: &str, s: &RefineSession) -> SessionState {
    let frame = s.frame();
    SessionState {
        session_id: id.to_owned(),
        contour: ContourDocument::new(s.contour(), frame),
        anchors: s
            .anchors()
            .as_slice()
            .iter()
            .map(|a| {
                let [x, y] = frame.to_cartesian(a.rho, a.theta);
                AnchorView {
                    id: a.id,
                    x,
                    y,
                    rho: a.rho,
                    theta: a.theta,
                }
            })
            .collect(),
        weights: *s.weights(),
        step: None,
        anchor_id: None,
        replaced_anchor: None,
        diagnostics: None,
    }
}

/// The contour document and binary PGM mask, byte-identical to what the CLI
/// writes for the same contour.
pub fn export(s: &RefineSession) -> (ContourDocument, Vec<u8>) {
    (
        ContourDocument::new(s.contour(), s.frame()),
        encode_pgm(&mask_to_gray8(&s.mask())),
    )
}
