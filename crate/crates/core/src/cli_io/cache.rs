//! Content-addressed store of finished runs.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Output files of one run, by file name.
pub type Artifacts = BTreeMap<String, String>;

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    key: String,
    files: Artifacts,
}

#[derive(Debug, Clone)]
pub struct ResultsCache {
    dir: PathBuf,
}

/// Hex SHA-256 of the canonical config text.
pub fn cache_key(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

impl ResultsCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// A stored run, or `None` when absent or unreadable.
    pub fn get(&self, key: &str) -> Option<Artifacts> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        let entry: Entry = serde_json::from_str(&text).ok()?;
        (entry.key == key).then_some(entry.files)
    }

    /// Stores a complete run. The entry appears atomically or not at all.
    pub fn put(&self, key: &str, files: &Artifacts) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let entry = Entry {
            key: key.to_string(),
            files: files.clone(),
        };
        let text = serde_json::to_string(&entry).map_err(|e| Error::Io(e.to_string()))?;
        write_atomic(&self.path(key), text.as_bytes())
    }
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("not a file path: {}", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::from(e)
    })
}
