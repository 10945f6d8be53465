//! The deterministic scripted stub provider.
//!
//! A stub script is an ordered rule list. For each call the first rule whose
//! template matches and whose `when_contains` substrings all appear in the
//! rendered prompt supplies the response. Rules are never consumed, so the
//! stub is a pure function of (template_id, rendered prompt).

use super::GatewayError;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubRule {
    /// Template id this rule applies to; `*` matches any template.
    pub template: String,
    /// Substrings that must all appear in the rendered prompt.
    #[serde(default)]
    pub when_contains: Vec<String>,
    /// Response returned verbatim.
    pub response: String,
}

impl StubRule {
    pub fn new(template: &str, response: &str) -> Self {
        Self {
            template: template.to_string(),
            when_contains: Vec::new(),
            response: response.to_string(),
        }
    }

    pub fn when(mut self, needle: &str) -> Self {
        self.when_contains.push(needle.to_string());
        self
    }

    fn matches(&self, template_id: &str, rendered: &str) -> bool {
        (self.template == "*" || self.template == template_id)
            && self.when_contains.iter().all(|n| rendered.contains(n))
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StubScript {
    #[serde(default = "StubScript::default_schema")]
    pub schema: String,
    pub rules: Vec<StubRule>,
}

impl StubScript {
    pub const SCHEMA: &'static str = "stub-script/1";

    fn default_schema() -> String {
        Self::SCHEMA.to_string()
    }

    pub fn from_rules(rules: Vec<StubRule>) -> Self {
        Self {
            schema: Self::SCHEMA.to_string(),
            rules,
        }
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| GatewayError::Catalog(format!("stub script {}: {e}", path.display())))
    }

    /// Merge another script's rules after this one's.
    pub fn extend(&mut self, other: StubScript) {
        self.rules.extend(other.rules);
    }

    pub fn respond(&self, template_id: &str, rendered: &str) -> Result<String, GatewayError> {
        self.rules
            .iter()
            .find(|r| r.matches(template_id, rendered))
            .map(|r| r.response.clone())
            .ok_or_else(|| GatewayError::StubUnmatched {
                template: template_id.to_string(),
            })
    }
}
