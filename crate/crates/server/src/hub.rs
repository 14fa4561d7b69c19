//! Registry of live sessions. Commands on one session are applied one at a
//! time; updates are fanned out to subscribers while the session lock is held,
//! so every subscriber sees them in command order.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use log::{info, warn};
use tokio::sync::{broadcast, Mutex};

use crate::session::{ClassConfig, Session, SessionError, SessionState, Update};

pub const UPDATE_BUFFER: usize = 1024;
pub const DEFAULT_TICK_HZ: f64 = 10.0;

#[derive(Debug, thiserror::Error)]
pub enum HubError {
    #[error("unknown session `{0}`")]
    NotFound(String),
    #[error(transparent)]
    Session(#[from] SessionError),
}

struct Entry {
    session: Mutex<Session>,
    tx: broadcast::Sender<Arc<Update>>,
}

pub struct Hub {
    sessions: RwLock<HashMap<String, Arc<Entry>>>,
    tick_hz: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SessionSummary {
    pub id: String,
    pub clock: f64,
    pub speed: f64,
    pub running: bool,
    pub students: usize,
}

impl Default for Hub {
    fn default() -> Self {
        Self::new(DEFAULT_TICK_HZ)
    }
}

impl Hub {
    pub fn new(tick_hz: f64) -> Self {
        assert!(tick_hz.is_finite() && tick_hz > 0.0, "tick rate must be positive");
        Self {
            sessions: RwLock::new(HashMap::new()),
            tick_hz,
        }
    }

    pub fn tick_hz(&self) -> f64 {
        self.tick_hz
    }

    fn entry(&self, id: &str) -> Result<Arc<Entry>, HubError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| HubError::NotFound(id.into()))
    }

    fn insert(&self, session: Session) {
        let (tx, _) = broadcast::channel(UPDATE_BUFFER);
        let id = session.id().to_owned();
        let entry = Arc::new(Entry {
            session: Mutex::new(session),
            tx,
        });
        self.sessions.write().expect("session map poisoned").insert(id, entry);
    }

    pub fn create(&self, config: ClassConfig) -> Result<SessionState, HubError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = Session::new(id, config)?;
        let state = session.state();
        self.insert(session);
        Ok(state)
    }

    pub fn list(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().expect("session map poisoned").keys().cloned().collect();
        ids.sort();
        ids
    }

    pub async fn summaries(&self) -> Vec<SessionSummary> {
        let mut out = Vec::new();
        for id in self.list() {
            if let Ok(entry) = self.entry(&id) {
                let s = entry.session.lock().await;
                out.push(SessionSummary {
                    id,
                    clock: s.clock(),
                    speed: s.speed(),
                    running: s.running(),
                    students: s.student_count(),
                });
            }
        }
        out
    }

    /// Runs `f` with exclusive access to the session, then publishes the
    /// updates it produced.
    pub async fn with<R>(&self, id: &str, f: impl FnOnce(&mut Session) -> R) -> Result<R, HubError> {
        let entry = self.entry(id)?;
        let mut session = entry.session.lock().await;
        let out = f(&mut session);
        for update in session.drain_updates() {
            // no subscribers is fine
            let _ = entry.tx.send(Arc::new(update));
        }
        Ok(out)
    }

    /// Like [`Hub::with`] for fallible session commands.
    pub async fn command<R>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session) -> Result<R, SessionError>,
    ) -> Result<R, HubError> {
        Ok(self.with(id, f).await??)
    }

    /// The current state of the session plus a receiver for every update
    /// applied after it.
    pub async fn subscribe(&self, id: &str) -> Result<(SessionState, broadcast::Receiver<Arc<Update>>), HubError> {
        let entry = self.entry(id)?;
        let session = entry.session.lock().await;
        let rx = entry.tx.subscribe();
        Ok((session.state(), rx))
    }

    pub async fn remove(&self, id: &str) -> Result<(), HubError> {
        self.with(id, Session::close).await?;
        self.sessions.write().expect("session map poisoned").remove(id);
        Ok(())
    }

    /// Advances every running session by one tick of wall-clock time.
    pub async fn tick(&self) {
        let seconds = 1.0 / self.tick_hz;
        for id in self.list() {
            let result = self
                .with(&id, |s| if s.running() { s.advance_real(seconds).map(Some) } else { Ok(None) })
                .await;
            if let Ok(Err(e)) = result {
                warn!("session {id}: {e}; pausing");
                let _ = self.with(&id, |s| s.set_running(false)).await;
            }
        }
    }

    pub fn spawn_ticker(self: &Arc<Self>) -> tokio::task::JoinHandle<()> {
        let hub = Arc::clone(self);
        tokio::spawn(async move {
            let mut interval = tokio::time::interval(Duration::from_secs_f64(1.0 / hub.tick_hz));
            interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
            loop {
                interval.tick().await;
                hub.tick().await;
            }
        })
    }

    /// Writes every session to `<dir>/<id>.json` (staged and renamed).
    pub async fn save_all(&self, dir: &Path) -> std::io::Result<usize> {
        std::fs::create_dir_all(dir)?;
        let mut saved = 0;
        for id in self.list() {
            let Ok(entry) = self.entry(&id) else { continue };
            let json = {
                let s = entry.session.lock().await;
                serde_json::to_vec(&*s)?
            };
            let tmp = dir.join(format!(".{id}.json.partial"));
            std::fs::write(&tmp, json)?;
            std::fs::rename(&tmp, dir.join(format!("{id}.json")))?;
            saved += 1;
        }
        Ok(saved)
    }

    /// Restores sessions saved by [`Hub::save_all`]. Unreadable files are
    /// skipped with a warning.
    pub fn load_all(&self, dir: &Path) -> std::io::Result<usize> {
        let mut loaded = 0;
        if !dir.exists() {
            return Ok(0);
        }
        for entry in std::fs::read_dir(dir)? {
            let path: PathBuf = entry?.path();
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            match std::fs::read(&path).map_err(|e| e.to_string()).and_then(|b| Session::restore(&b)) {
                Ok(session) => {
                    info!("restored session {} from {}", session.id(), path.display());
                    self.insert(session);
                    loaded += 1;
                }
                Err(e) => warn!("skipping {}: {e}", path.display()),
            }
        }
        Ok(loaded)
    }

    pub fn spawn_snapshots(self: &Arc<Self>, dir: PathBuf, every: Duration) -> tokio::task::JoinHandle<()> {
        let hub = Arc::clone(self);
        tokio::spawn(async move {
            let mut interval = tokio::time::interval(every);
            interval.tick().await;
            loop {
                interval.tick().await;
                if let Err(e) = hub.save_all(&dir).await {
                    warn!("snapshot to {} failed: {e}", dir.display());
                }
            }
        })
    }
}
