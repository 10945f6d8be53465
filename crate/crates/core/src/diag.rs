//! Non-fatal diagnostics collected by analysis and extraction passes.
//!
//! Diagnostics are data, not errors: skipped constructs, dropped proposals,
//! and downgraded extractions are recorded here and persisted alongside the
//! artifacts they refer to.

use serde::{Deserialize, Serialize};

/// One recorded non-fatal event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// Machine-readable code, stable across releases.
    pub code: String,
    /// Human-readable explanation.
    pub message: String,
    /// What the diagnostic refers to (file, endpoint id, parameter name, ...).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
}

impl Diagnostic {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
            subject: None,
        }
    }

    pub fn with_subject(mut self, subject: impl Into<String>) -> Self {
        self.subject = Some(subject.into());
        self
    }
}
