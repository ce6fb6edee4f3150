use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};
use std::time::SystemTime;

use ccid_core::pipeline::{Artifacts, Mode};
use ccid_core::Image;

pub const DEFAULT_CAPACITY: usize = 32;

/// One uploaded image and everything derived from it.
#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub mode: Mode,
    /// Network input: the noisy image, or the low-resolution one.
    pub noisy: Image<f64>,
    pub clean: Option<Image<f64>>,
    /// Externally produced high-resolution image (super-resolution only).
    pub high: Option<Image<f64>>,
    pub scale: usize,
    pub created_at: SystemTime,
    /// Artifacts keyed by reliable-filter fingerprint. Held while they are
    /// computed, so requests to one session serialise here.
    pub artifacts: Mutex<HashMap<String, Arc<Artifacts>>>,
}

impl Session {
    /// Output dimensions of every view.
    pub fn dims(&self) -> (usize, usize) {
        match self.mode {
            Mode::Denoise => self.noisy.dims(),
            Mode::SuperResolution => (self.noisy.height() * self.scale, self.noisy.width() * self.scale),
        }
    }
}

/// In-memory sessions with least-recently-used eviction.
#[derive(Debug)]
pub struct SessionStore {
    capacity: usize,
    sessions: HashMap<String, Arc<Session>>,
    order: VecDeque<String>,
}

impl SessionStore {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self {
            capacity,
            sessions: HashMap::new(),
            order: VecDeque::new(),
        }
    }

    pub fn insert(&mut self, session: Session) -> Arc<Session> {
        let session = Arc::new(session);
        self.sessions.insert(session.id.clone(), session.clone());
        self.order.push_back(session.id.clone());
        while self.order.len() > self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.sessions.remove(&old);
            }
        }
        session
    }

    /// Looks a session up and marks it most recently used.
    pub fn get(&mut self, id: &str) -> Option<Arc<Session>> {
        let session = self.sessions.get(id)?.clone();
        if let Some(pos) = self.order.iter().position(|s| s == id) {
            self.order.remove(pos);
        }
        self.order.push_back(id.to_string());
        Some(session)
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }
}
