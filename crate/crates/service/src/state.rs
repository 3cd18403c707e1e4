use std::io;
use std::sync::{Arc, RwLock};

use ontopurify_core::Ontology;
use tokio::sync::{Mutex, MutexGuard};

use crate::store::SnapshotStore;

/// One committed state of the local ontology.
#[derive(Debug)]
pub struct Snapshot {
    pub ontology: Arc<Ontology>,
    pub revision: u64,
}

/// Shared state: readers clone the current snapshot pointer, writers queue
/// on a single lock, persist, then swap.
pub struct AppState {
    current: RwLock<Arc<Snapshot>>,
    writer: Mutex<()>,
    reference: Option<Arc<Ontology>>,
    admin_token: String,
    auto_purify: bool,
    store: Arc<dyn SnapshotStore>,
}

impl AppState {
    /// Starts at revision 0.
    pub fn new(
        ontology: Ontology,
        reference: Option<Ontology>,
        admin_token: impl Into<String>,
        auto_purify: bool,
        store: Arc<dyn SnapshotStore>,
    ) -> Self {
        Self {
            current: RwLock::new(Arc::new(Snapshot {
                ontology: Arc::new(ontology),
                revision: 0,
            })),
            writer: Mutex::new(()),
            reference: reference.map(Arc::new),
            admin_token: admin_token.into(),
            auto_purify,
            store,
        }
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    pub fn revision(&self) -> u64 {
        self.snapshot().revision
    }

    pub fn reference(&self) -> Option<&Arc<Ontology>> {
        self.reference.as_ref()
    }

    pub fn auto_purify(&self) -> bool {
        self.auto_purify
    }

    /// Constant-time comparison against the configured token.
    pub fn token_matches(&self, presented: &str) -> bool {
        let (a, b) = (self.admin_token.as_bytes(), presented.as_bytes());
        a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
    }

    /// Waits for exclusive write access.
    pub async fn writer(&self) -> Writer<'_> {
        Writer {
            state: self,
            _guard: self.writer.lock().await,
        }
    }
}

/// Exclusive write access; the snapshot cannot change while this is held.
pub struct Writer<'a> {
    state: &'a AppState,
    _guard: MutexGuard<'a, ()>,
}

impl Writer<'_> {
    pub fn current(&self) -> Arc<Snapshot> {
        self.state.snapshot()
    }

    /// Persists `ontology`, then publishes it as the next revision. On a
    /// persistence error nothing is published.
    pub async fn commit(self, ontology: Ontology) -> io::Result<Arc<Snapshot>> {
        let ontology = Arc::new(ontology);
        let store = Arc::clone(&self.state.store);
        let durable = Arc::clone(&ontology);
        tokio::task::spawn_blocking(move || store.persist(&durable))
            .await
            .map_err(io::Error::other)??;
        let next = Arc::new(Snapshot {
            ontology,
            revision: self.current().revision + 1,
        });
        *self
            .state
            .current
            .write()
            .unwrap_or_else(|e| e.into_inner()) = Arc::clone(&next);
        Ok(next)
    }
}
