//! HTTP service over a live local ontology: keyword search for users,
//! bearer-token administration, and purification against an optional
//! reference copy.
//!
//! Every committed mutation is persisted before it becomes visible, and
//! bumps the revision by exactly one. Readers see whole snapshots only.

pub mod config;
pub mod http;
pub mod state;
pub mod store;

use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use ontopurify_core::owl::{self, Format};
use ontopurify_core::{Ontology, OwlError};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub use config::Config;
pub use http::{router, ApiError};
pub use state::{AppState, Snapshot, Writer};
pub use store::{FileStore, NullStore, SnapshotStore};

#[derive(Debug, Error)]
pub enum StartupError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: OwlError },
    #[error("cannot fetch {url}: {message}")]
    Fetch { url: String, message: String },
    #[error("admin token variable {0} is unset or empty")]
    MissingToken(String),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: io::Error },
}

/// Reads and strictly validates an OWL or JSON snapshot, sniffing the format.
pub fn load_snapshot(path: &Path) -> Result<Ontology, StartupError> {
    let text = std::fs::read_to_string(path).map_err(|source| StartupError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    owl::parse(&text, Format::sniff(&text)).map_err(|source| StartupError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a reference from a path or fetches it from an `http(s)://` URL.
/// Blocking.
pub fn load_reference(location: &str) -> Result<Ontology, StartupError> {
    if !(location.starts_with("http://") || location.starts_with("https://")) {
        return load_snapshot(Path::new(location));
    }
    let fetch_err = |message: String| StartupError::Fetch {
        url: location.to_string(),
        message,
    };
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(10)))
        .build()
        .into();
    let text = agent
        .get(location)
        .call()
        .map_err(|e| fetch_err(e.to_string()))?
        .body_mut()
        .read_to_string()
        .map_err(|e| fetch_err(e.to_string()))?;
    owl::parse(&text, Format::sniff(&text)).map_err(|source| StartupError::Parse {
        path: PathBuf::from(location),
        source,
    })
}

/// Builds the shared state from `config`. A reference that cannot be
/// loaded is logged and left out.
pub async fn prepare(config: &Config) -> Result<Arc<AppState>, StartupError> {
    let token = std::env::var(&config.admin_token_env)
        .ok()
        .filter(|t| !t.is_empty())
        .ok_or_else(|| StartupError::MissingToken(config.admin_token_env.clone()))?;
    let ontology = load_snapshot(&config.snapshot_path)?;
    let reference = match &config.reference_path_or_url {
        None => None,
        Some(location) => {
            let location = location.clone();
            let loaded = tokio::task::spawn_blocking(move || load_reference(&location))
                .await
                .map_err(|e| StartupError::Config(e.to_string()))?;
            match loaded {
                Ok(r) => Some(r),
                Err(err) => {
                    tracing::warn!(%err, "reference unavailable; running without purification");
                    None
                }
            }
        }
    };
    let store = Arc::new(FileStore::new(config.snapshot_path.clone()));
    Ok(Arc::new(AppState::new(
        ontology,
        reference,
        token,
        config.auto_purify,
        store,
    )))
}

/// A server running on a background task.
pub struct Running {
    addr: SocketAddr,
    shutdown: oneshot::Sender<()>,
    task: JoinHandle<io::Result<()>>,
}

impl Running {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting connections and waits for in-flight requests.
    pub async fn shutdown(self) -> io::Result<()> {
        let _ = self.shutdown.send(());
        self.task.await.map_err(io::Error::other)?
    }
}

/// Serves `state` on an already bound listener.
pub fn spawn(state: Arc<AppState>, listener: TcpListener) -> io::Result<Running> {
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel();
    let app = router(state);
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    Ok(Running {
        addr,
        shutdown: tx,
        task,
    })
}

/// Loads everything named by `config` and starts serving.
pub async fn start(config: &Config) -> Result<(Running, Arc<AppState>), StartupError> {
    let state = prepare(config).await?;
    let listener = TcpListener::bind(config.bind_addr)
        .await
        .map_err(|source| StartupError::Bind {
            addr: config.bind_addr,
            source,
        })?;
    let running = spawn(Arc::clone(&state), listener).map_err(|source| StartupError::Bind {
        addr: config.bind_addr,
        source,
    })?;
    let snap = state.snapshot();
    tracing::info!(
        addr = %running.addr(),
        revision = snap.revision,
        nodes = snap.ontology.len(),
        reference = state.reference().is_some(),
        "serving"
    );
    Ok((running, state))
}
