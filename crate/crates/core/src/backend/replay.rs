use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Backend, BackendError, BackendRequest};

/// One recorded exchange, one JSON line each.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub digest: String,
    pub template: String,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TranscriptMeta {
    pub engine: String,
    pub model: String,
    pub created: String,
}

/// Digest-addressed responses. Saved as JSON Lines sorted by digest, with
/// metadata in a `.meta.json` sidecar so the line file stays reproducible.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    pub entries: BTreeMap<String, TranscriptEntry>,
    pub metadata: TranscriptMeta,
}

fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

impl Transcript {
    pub fn new(metadata: TranscriptMeta) -> Self {
        Transcript {
            entries: BTreeMap::new(),
            metadata,
        }
    }

    /// Inserts an exchange; a digest already bound to a different response
    /// is a collision.
    pub fn insert(&mut self, entry: TranscriptEntry) -> Result<(), BackendError> {
        if let Some(prev) = self.entries.get(&entry.digest) {
            if prev.response != entry.response || prev.template != entry.template {
                return Err(BackendError::Transcript(format!(
                    "digest collision on {} (template `{}`)",
                    entry.digest, entry.template
                )));
            }
            return Ok(());
        }
        self.entries.insert(entry.digest.clone(), entry);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let io = |e: std::io::Error| BackendError::Transcript(format!("{}: {e}", path.display()));
        let file = fs::File::open(path).map_err(io)?;
        let mut t = Transcript::default();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry = serde_json::from_str(&line).map_err(|e| {
                BackendError::Transcript(format!("{}:{}: {e}", path.display(), n + 1))
            })?;
            t.insert(entry)?;
        }
        let mp = meta_path(path);
        if mp.exists() {
            let raw = fs::read_to_string(&mp).map_err(io)?;
            t.metadata = serde_json::from_str(&raw)
                .map_err(|e| BackendError::Transcript(format!("{}: {e}", mp.display())))?;
        }
        Ok(t)
    }

    pub fn save(&self, path: &Path) -> Result<(), BackendError> {
        let io = |e: std::io::Error| BackendError::Transcript(format!("{}: {e}", path.display()));
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io)?;
        }
        let mut out = fs::File::create(path).map_err(io)?;
        for entry in self.entries.values() {
            let line = serde_json::to_string(entry).expect("entry serializes");
            writeln!(out, "{line}").map_err(io)?;
        }
        let meta = serde_json::to_string_pretty(&self.metadata).expect("meta serializes");
        fs::write(meta_path(path), meta).map_err(io)?;
        Ok(())
    }
}

/// Serves recorded responses by exact digest.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    transcript: Transcript,
}

impl ReplayBackend {
    pub fn new(transcript: Transcript) -> Self {
        ReplayBackend { transcript }
    }

    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        Ok(Self::new(Transcript::load(path)?))
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }
}

impl Backend for ReplayBackend {
    fn engine_name(&self) -> &'static str {
        "replay"
    }

    fn complete(&self, req: &BackendRequest) -> Result<String, BackendError> {
        let digest = req.digest();
        self.transcript
            .entries
            .get(&digest)
            .map(|e| e.response.clone())
            .ok_or(BackendError::ReplayMiss {
                digest,
                template: req.template_name.clone(),
            })
    }
}
