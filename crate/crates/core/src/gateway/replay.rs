//! Record/replay of provider responses, keyed by the rendered-prompt hash.

use super::GatewayError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RecordingEntry {
    key: String,
    response: String,
}

/// An append-only recording: one JSON object per line.
#[derive(Debug, Clone, Default)]
pub struct RecordingFile {
    entries: BTreeMap<String, String>,
}

impl RecordingFile {
    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = fs::read_to_string(path)?;
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: RecordingEntry = serde_json::from_str(line).map_err(|e| {
                GatewayError::Catalog(format!("recording {} line {}: {e}", path.display(), i + 1))
            })?;
            // Later entries win: a re-recorded prompt supersedes the old one.
            entries.insert(entry.key, entry.response);
        }
        Ok(Self { entries })
    }

    pub fn lookup(&self, key: &str) -> Option<String> {
        self.entries.get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Append one entry to a recording file, creating it if needed.
    pub fn append(path: &Path, key: &str, response: &str) -> Result<(), GatewayError> {
        let entry = RecordingEntry {
            key: key.to_string(),
            response: response.to_string(),
        };
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        writeln!(file, "{}", serde_json::to_string(&entry).expect("entry serializes"))?;
        Ok(())
    }
}
