//! The canonical endpoint-model document: one structured text document per
//! application, used both as persisted analysis output and as the neutral
//! descriptor ingestion format.

use super::types::Endpoint;
use crate::diag::Diagnostic;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io;
use std::path::Path;

/// Persisted endpoint model for one application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointModelDocument {
    /// Document schema tag; currently `endpoint-model/1`.
    pub schema: String,
    /// Application name or source directory label.
    pub application: String,
    pub endpoints: Vec<Endpoint>,
    #[serde(default)]
    pub diagnostics: Vec<Diagnostic>,
}

impl EndpointModelDocument {
    pub const SCHEMA: &'static str = "endpoint-model/1";

    pub fn new(application: impl Into<String>, endpoints: Vec<Endpoint>) -> Self {
        Self {
            schema: Self::SCHEMA.to_string(),
            application: application.into(),
            endpoints,
            diagnostics: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        // Pretty output: the document doubles as the human-readable descriptor.
        serde_json::to_string_pretty(self).expect("endpoint model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.to_json() + "\n")
    }

    pub fn load(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}
