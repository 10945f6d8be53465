//! Prompt templates and the on-disk prompt catalog.
//!
//! Each template is a data file with a small header followed by a body
//! containing `{{slot}}` placeholders:
//!
//! ```text
//! -- id: extract-ipds
//! -- required: endpoint, parameters, code_context
//! -- output: structured_block
//! <body...>
//! ```

use super::GatewayError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedOutput {
    StructuredBlock,
    FreeText,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub template_id: String,
    pub body: String,
    pub required_slots: Vec<String>,
    pub expected_output: ExpectedOutput,
}

impl PromptTemplate {
    pub fn new(template_id: &str, body: &str, required_slots: Vec<String>) -> Self {
        Self {
            template_id: template_id.to_string(),
            body: body.to_string(),
            required_slots,
            expected_output: ExpectedOutput::FreeText,
        }
    }

    /// Substitute `{{slot}}` placeholders. All required slots must be given;
    /// unreferenced extra slots are ignored.
    pub fn render(&self, slots: &BTreeMap<String, String>) -> Result<String, GatewayError> {
        for required in &self.required_slots {
            if !slots.contains_key(required) {
                return Err(GatewayError::MissingSlot {
                    template: self.template_id.clone(),
                    slot: required.clone(),
                });
            }
        }
        let mut rendered = self.body.clone();
        for (name, value) in slots {
            rendered = rendered.replace(&format!("{{{{{name}}}}}"), value);
        }
        Ok(rendered)
    }

    /// Parse one template file.
    pub fn parse_file(text: &str, fallback_id: &str) -> Result<Self, GatewayError> {
        let mut id = fallback_id.to_string();
        let mut required = Vec::new();
        let mut output = ExpectedOutput::FreeText;
        let mut body_start = 0;
        for line in text.lines() {
            let Some(rest) = line.strip_prefix("--") else {
                break;
            };
            body_start += line.len() + 1;
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("id:") {
                id = v.trim().to_string();
            } else if let Some(v) = rest.strip_prefix("required:") {
                required = v
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
            } else if let Some(v) = rest.strip_prefix("output:") {
                output = match v.trim() {
                    "structured_block" => ExpectedOutput::StructuredBlock,
                    "free_text" => ExpectedOutput::FreeText,
                    other => {
                        return Err(GatewayError::Catalog(format!(
                            "template '{id}': unknown output kind '{other}'"
                        )))
                    }
                };
            }
        }
        let body = text[body_start.min(text.len())..].trim_start().to_string();
        if body.is_empty() {
            return Err(GatewayError::Catalog(format!("template '{id}' has an empty body")));
        }
        for slot in &required {
            if !body.contains(&format!("{{{{{slot}}}}}")) {
                return Err(GatewayError::Catalog(format!(
                    "template '{id}': required slot '{slot}' does not appear in the body"
                )));
            }
        }
        Ok(Self {
            template_id: id,
            body,
            required_slots: required,
            expected_output: output,
        })
    }
}

/// All templates known to a gateway, keyed by id.
#[derive(Debug, Clone, Default)]
pub struct TemplateCatalog {
    templates: BTreeMap<String, PromptTemplate>,
}

impl TemplateCatalog {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Load every `*.tmpl` file in a directory.
    pub fn load_dir(dir: &Path) -> Result<Self, GatewayError> {
        let mut catalog = Self::empty();
        let mut entries: Vec<_> = fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().map(|x| x == "tmpl").unwrap_or(false))
            .collect();
        entries.sort();
        for path in entries {
            let text = fs::read_to_string(&path)?;
            let fallback = path
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_default();
            catalog.insert(PromptTemplate::parse_file(&text, &fallback)?);
        }
        Ok(catalog)
    }

    /// Load the catalog bundled with this crate.
    pub fn bundled() -> Result<Self, GatewayError> {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("prompts");
        Self::load_dir(&dir)
    }

    pub fn insert(&mut self, template: PromptTemplate) {
        self.templates.insert(template.template_id.clone(), template);
    }

    pub fn get(&self, template_id: &str) -> Option<&PromptTemplate> {
        self.templates.get(template_id)
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(|s| s.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_header_and_body() {
        let text = "-- id: demo\n-- required: a, b\n-- output: structured_block\n\nUse {{a}} and {{b}}.";
        let t = PromptTemplate::parse_file(text, "fallback").unwrap();
        assert_eq!(t.template_id, "demo");
        assert_eq!(t.required_slots, vec!["a", "b"]);
        assert_eq!(t.expected_output, ExpectedOutput::StructuredBlock);
        assert_eq!(t.body, "Use {{a}} and {{b}}.");
    }

    #[test]
    fn required_slot_must_appear_in_body() {
        let text = "-- id: demo\n-- required: missing\nBody without the slot.";
        assert!(PromptTemplate::parse_file(text, "x").is_err());
    }

    #[test]
    fn render_replaces_all_occurrences() {
        let t = PromptTemplate::new("t", "{{x}} and {{x}}", vec!["x".into()]);
        let mut slots = BTreeMap::new();
        slots.insert("x".to_string(), "v".to_string());
        assert_eq!(t.render(&slots).unwrap(), "v and v");
    }
}
