//! Structured-output parsing: extract the first fenced block from a model
//! response and validate it against a registered shape.

use super::GatewayError;
use serde_json::Value;
use std::collections::BTreeMap;

/// Shape of a structured value, used for schema validation with
/// field-naming error messages.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Any,
    Str,
    Num,
    Bool,
    StrArray,
    Array(Box<Shape>),
    /// Fields: (name, shape, required).
    Object(Vec<(&'static str, Shape, bool)>),
    /// A map from string keys to string-or-null values (request assignments).
    MapOfNullableStr,
}

pub type SchemaRegistry = BTreeMap<String, Shape>;

/// The schemas used across the pipeline, keyed by schema id.
pub fn default_registry() -> SchemaRegistry {
    use Shape::*;
    let mut r = SchemaRegistry::new();
    r.insert(
        "parameters".into(),
        Array(Box::new(Object(vec![
            ("name", Str, true),
            ("datatype", Str, true),
            ("kind", Str, false),
        ]))),
    );
    r.insert(
        "value-constraints".into(),
        Array(Box::new(Object(vec![
            ("parameter", Str, true),
            ("kind", Str, true),
            ("allowed_values", StrArray, false),
            ("min", Num, false),
            ("max", Num, false),
            ("regex", Str, false),
            ("note", Str, false),
        ]))),
    );
    r.insert(
        "ipds".into(),
        Array(Box::new(Object(vec![
            ("relation", Str, true),
            ("parameters", StrArray, true),
            ("constraint_logic", Str, false),
        ]))),
    );
    r.insert("assignments".into(), Array(Box::new(MapOfNullableStr)));
    r.insert(
        "plan".into(),
        Object(vec![
            (
                "actions",
                Array(Box::new(Object(vec![
                    ("tool", Str, true),
                    ("arguments", Any, false),
                ]))),
                true,
            ),
            ("rationale", Str, true),
        ]),
    );
    r.insert(
        "reflection".into(),
        Object(vec![("score", Num, true), ("comment", Str, true)]),
    );
    r.insert(
        "edges".into(),
        Array(Box::new(Object(vec![
            ("src", Str, true),
            ("dst", Str, true),
            ("relation", Str, true),
            ("evidence", Str, true),
        ]))),
    );
    r.insert(
        "blocks".into(),
        Array(Box::new(Object(vec![
            ("task", Str, true),
            ("endpoint", Str, true),
            ("links", StrArray, false),
        ]))),
    );
    r.insert(
        "block-rewrites".into(),
        Array(Box::new(Object(vec![
            ("block", Num, true),
            ("task", Str, true),
        ]))),
    );
    r
}

/// Extract the first fenced block (``` ... ```), parse it as JSON, and
/// validate it against the registered shape.
pub fn parse_structured(
    response: &str,
    schema_id: &str,
    registry: &SchemaRegistry,
) -> Result<Value, GatewayError> {
    let shape = registry
        .get(schema_id)
        .ok_or_else(|| GatewayError::UnknownSchema(schema_id.to_string()))?;
    let block = extract_fenced_block(response).ok_or(GatewayError::NoBlock)?;
    let value: Value = serde_json::from_str(&block)
        .map_err(|e| GatewayError::SchemaMismatch(format!("block is not valid JSON: {e}")))?;
    validate(&value, shape, "$")?;
    Ok(value)
}

fn extract_fenced_block(text: &str) -> Option<String> {
    let open = text.find("```")?;
    let after_fence = &text[open + 3..];
    // Skip an optional language tag on the fence line.
    let content_start = after_fence.find('\n').map(|i| i + 1).unwrap_or(0);
    let content = &after_fence[content_start..];
    let close = content.find("```")?;
    Some(content[..close].trim().to_string())
}

fn validate(value: &Value, shape: &Shape, path: &str) -> Result<(), GatewayError> {
    match shape {
        Shape::Any => Ok(()),
        Shape::Str => {
            if value.is_string() {
                Ok(())
            } else {
                Err(mismatch(path, "string", value))
            }
        }
        Shape::Num => {
            if value.is_number() {
                Ok(())
            } else {
                Err(mismatch(path, "number", value))
            }
        }
        Shape::Bool => {
            if value.is_boolean() {
                Ok(())
            } else {
                Err(mismatch(path, "boolean", value))
            }
        }
        Shape::StrArray => {
            let Some(items) = value.as_array() else {
                return Err(mismatch(path, "array of strings", value));
            };
            for (i, item) in items.iter().enumerate() {
                if !item.is_string() {
                    return Err(mismatch(&format!("{path}[{i}]"), "string", item));
                }
            }
            Ok(())
        }
        Shape::Array(inner) => {
            let Some(items) = value.as_array() else {
                return Err(mismatch(path, "array", value));
            };
            for (i, item) in items.iter().enumerate() {
                validate(item, inner, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        Shape::Object(fields) => {
            let Some(map) = value.as_object() else {
                return Err(mismatch(path, "object", value));
            };
            for (name, field_shape, required) in fields {
                match map.get(*name) {
                    Some(v) if v.is_null() && !required => {}
                    Some(v) => validate(v, field_shape, &format!("{path}.{name}"))?,
                    None if *required => {
                        return Err(GatewayError::SchemaMismatch(format!(
                            "missing required field '{name}' at {path}"
                        )))
                    }
                    None => {}
                }
            }
            Ok(())
        }
        Shape::MapOfNullableStr => {
            let Some(map) = value.as_object() else {
                return Err(mismatch(path, "object", value));
            };
            for (k, v) in map {
                if !(v.is_string() || v.is_null()) {
                    return Err(mismatch(&format!("{path}.{k}"), "string or null", v));
                }
            }
            Ok(())
        }
    }
}

fn mismatch(path: &str, expected: &str, got: &Value) -> GatewayError {
    let kind = match got {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    };
    GatewayError::SchemaMismatch(format!("expected {expected} at {path}, found {kind}"))
}
