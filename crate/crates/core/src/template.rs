//! Minimal text-template renderer for test emission.
//!
//! Supports `{{name}}` substitution and repeated sections
//! `{{#items}}...{{/items}}` over JSON arrays. Lookups resolve against the
//! innermost context first, then outward to the root object.

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("TEMPLATE_ERROR: unclosed section '{0}'")]
    UnclosedSection(String),
    #[error("TEMPLATE_ERROR: section '{0}' is not an array")]
    NotAnArray(String),
    #[error("TEMPLATE_ERROR: {0}")]
    Io(#[from] std::io::Error),
}

impl TemplateError {
    pub fn code(&self) -> &'static str {
        "TEMPLATE_ERROR"
    }
}

/// Render a template against a JSON object context.
pub fn render(template: &str, context: &Value) -> Result<String, TemplateError> {
    render_scoped(template, &[context])
}

fn render_scoped(template: &str, scopes: &[&Value]) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find("{{") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        let Some(close) = after.find("}}") else {
            out.push_str(&rest[open..]);
            return Ok(out);
        };
        let tag = after[..close].trim();
        let following = &after[close + 2..];
        if let Some(section) = tag.strip_prefix('#') {
            let end_marker = format!("{{{{/{section}}}}}");
            let Some(end) = following.find(&end_marker) else {
                return Err(TemplateError::UnclosedSection(section.to_string()));
            };
            let inner = &following[..end];
            let items = lookup(scopes, section);
            match items {
                Some(Value::Array(items)) => {
                    for item in items {
                        let mut inner_scopes: Vec<&Value> = scopes.to_vec();
                        inner_scopes.insert(0, item);
                        out.push_str(&render_scoped(inner, &inner_scopes)?);
                    }
                }
                Some(_) => return Err(TemplateError::NotAnArray(section.to_string())),
                None => {}
            }
            rest = &following[end + end_marker.len()..];
        } else {
            if let Some(value) = lookup(scopes, tag) {
                out.push_str(&value_text(value));
            }
            rest = following;
        }
    }
    out.push_str(rest);
    Ok(out)
}

fn lookup<'a>(scopes: &[&'a Value], key: &str) -> Option<&'a Value> {
    for scope in scopes {
        if let Some(found) = scope.get(key) {
            return Some(found);
        }
    }
    None
}

fn value_text(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}
