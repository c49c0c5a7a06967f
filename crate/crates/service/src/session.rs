//! In-memory sessions and their idle eviction.

use std::collections::HashMap;
use std::sync::atomic::AtomicBool;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use cvel::pipeline::{Contour, InitShape, RunSummary};
use cvel::{ConvergenceReport, LandmarkSet, ModelParams, ScalarField};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Idle,
    Running,
    Done,
    Failed,
}

/// What the solver published after its latest completed outer iteration.
/// Replaced wholesale, never mutated.
#[derive(Debug)]
pub struct Progress {
    pub iteration: usize,
    pub report: ConvergenceReport,
    pub contour: Contour,
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub image: Option<ScalarField>,
    pub landmarks: LandmarkSet,
    pub params: ModelParams,
    pub init: Option<InitShape>,
    pub status: Status,
    pub error: Option<String>,
    pub progress: Option<Arc<Progress>>,
    pub summary: Option<RunSummary>,
    pub mask: Option<ScalarField>,
    pub(crate) cancel: Option<Arc<AtomicBool>>,
    last_access: Instant,
}

impl Session {
    fn new(id: String) -> Self {
        Self {
            id,
            image: None,
            landmarks: LandmarkSet::default(),
            params: ModelParams::default(),
            init: None,
            status: Status::Idle,
            error: None,
            progress: None,
            summary: None,
            mask: None,
            cancel: None,
            last_access: Instant::now(),
        }
    }

    pub fn is_running(&self) -> bool {
        self.status == Status::Running
    }

    /// Drops the results of earlier runs.
    pub fn clear_results(&mut self) {
        self.progress = None;
        self.summary = None;
        self.mask = None;
        self.error = None;
    }
}

pub type SessionRef = Arc<Mutex<Session>>;

/// Locks a session, ignoring poisoning: a panicking handler leaves the
/// fields in a consistent (if stale) state.
pub fn lock(s: &SessionRef) -> MutexGuard<'_, Session> {
    s.lock().unwrap_or_else(|e| e.into_inner())
}

#[derive(Debug)]
pub struct Store {
    sessions: Mutex<HashMap<String, SessionRef>>,
    ttl: Duration,
}

impl Store {
    pub fn new(ttl: Duration) -> Self {
        Self {
            sessions: Mutex::new(HashMap::new()),
            ttl,
        }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    fn map(&self) -> MutexGuard<'_, HashMap<String, SessionRef>> {
        self.sessions.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn create(&self) -> String {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = Arc::new(Mutex::new(Session::new(id.clone())));
        self.map().insert(id.clone(), session);
        id
    }

    /// Looks a session up and marks it as used.
    pub fn get(&self, id: &str) -> Option<SessionRef> {
        let s = self.map().get(id).cloned()?;
        lock(&s).last_access = Instant::now();
        Some(s)
    }

    pub fn remove(&self, id: &str) -> Option<SessionRef> {
        self.map().remove(id)
    }

    pub fn len(&self) -> usize {
        self.map().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Removes sessions unused for longer than the TTL as of `now`. Running
    /// sessions are kept. Returns how many were removed.
    pub fn evict_idle(&self, now: Instant) -> usize {
        let mut map = self.map();
        let before = map.len();
        map.retain(|_, s| {
            let s = lock(s);
            s.is_running() || now.saturating_duration_since(s.last_access) <= self.ttl
        });
        before - map.len()
    }
}
