use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use ontopurify_core::owl::serialize_json;
use ontopurify_core::Ontology;

/// Durable home of the current snapshot.
pub trait SnapshotStore: Send + Sync {
    /// Returns only once the snapshot is durable; on error the previous
    /// durable snapshot is still the one a restart would load.
    fn persist(&self, ontology: &Ontology) -> io::Result<()>;
}

/// Canonical JSON on disk, replaced by write-to-temp, fsync, rename.
#[derive(Debug)]
pub struct FileStore {
    path: PathBuf,
    crash_next: AtomicBool,
}

impl FileStore {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            crash_next: AtomicBool::new(false),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Fault injection: the next persist writes half of the temp file and
    /// then fails as if the process had died before the rename.
    #[doc(hidden)]
    pub fn crash_next_write(&self) {
        self.crash_next.store(true, Ordering::SeqCst);
    }
}

impl SnapshotStore for FileStore {
    fn persist(&self, ontology: &Ontology) -> io::Result<()> {
        let dir = match self.path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let bytes = serialize_json(ontology).into_bytes();
        let mut tmp = tempfile::Builder::new()
            .prefix(".snapshot-")
            .suffix(".tmp")
            .tempfile_in(dir)?;
        if self.crash_next.swap(false, Ordering::SeqCst) {
            tmp.write_all(&bytes[..bytes.len() / 2])?;
            tmp.as_file().sync_all()?;
            // leave the torn temp file behind, as a real crash would
            tmp.into_temp_path().keep().map_err(|e| e.error)?;
            return Err(io::Error::other("simulated crash before rename"));
        }
        tmp.write_all(&bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&self.path).map_err(|e| e.error)?;
        if let Ok(d) = std::fs::File::open(dir) {
            // directory fsync makes the rename durable; unsupported on some platforms
            let _ = d.sync_all();
        }
        Ok(())
    }
}

/// Keeps nothing; for tests and throwaway instances.
#[derive(Debug, Default)]
pub struct NullStore;

impl SnapshotStore for NullStore {
    fn persist(&self, _: &Ontology) -> io::Result<()> {
        Ok(())
    }
}
