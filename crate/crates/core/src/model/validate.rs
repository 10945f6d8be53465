//! Structural validation of endpoints against the model invariants.
//!
//! Violations are data, not errors: `validate_endpoint` is pure and returns
//! every violation it finds, with a machine-readable code.

use super::types::{ConstraintKind, Endpoint, EndpointId, IpdRelation, ParamKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Machine-readable violation codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    /// A `{placeholder}` in the path has no parameter with kind = path.
    PathParamUnbound,
    /// A `{placeholder}` is bound by more than one path parameter.
    PathParamDuplicateBinding,
    /// A path-kind parameter does not appear as a placeholder in the path.
    PathParamOrphan,
    /// Unbalanced `{`/`}` in the path.
    PathMalformed,
    /// Two parameters share the same (name, kind).
    DuplicateParam,
    /// Stored endpoint_id disagrees with the derivation from (path, verb).
    EndpointIdMismatch,
    /// Enumeration constraint with no allowed values.
    EnumValuesEmpty,
    /// Range constraint with min > max.
    RangeInverted,
    /// Pattern constraint whose regex does not compile.
    RegexInvalid,
    /// IPD names a parameter that does not exist on the endpoint.
    IpdUnknownParam,
    /// IPD parameter list empty, or Requires with fewer than two entries.
    IpdArity,
    /// Database operation with line number 0.
    DbLineInvalid,
}

/// One invariant violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

/// Check every model invariant on one endpoint. Empty report iff all hold.
pub fn validate_endpoint(e: &Endpoint) -> Vec<Violation> {
    let mut out = Vec::new();

    if e.path.chars().filter(|c| *c == '{').count() != e.path.chars().filter(|c| *c == '}').count()
    {
        out.push(Violation::new(
            ViolationCode::PathMalformed,
            format!("unbalanced braces in path '{}'", e.path),
        ));
    }

    let placeholders = super::types::path_placeholders(&e.path);
    for name in &placeholders {
        let bindings = e
            .parameters
            .iter()
            .filter(|p| p.kind == ParamKind::Path && &p.name == name)
            .count();
        match bindings {
            0 => out.push(Violation::new(
                ViolationCode::PathParamUnbound,
                format!("path placeholder '{{{name}}}' has no bound path parameter"),
            )),
            1 => {}
            _ => out.push(Violation::new(
                ViolationCode::PathParamDuplicateBinding,
                format!("path placeholder '{{{name}}}' bound by {bindings} parameters"),
            )),
        }
    }
    for p in e.path_parameters() {
        if !placeholders.contains(&p.name) {
            out.push(Violation::new(
                ViolationCode::PathParamOrphan,
                format!("path parameter '{}' does not appear in '{}'", p.name, e.path),
            ));
        }
    }

    let mut seen: BTreeMap<(String, ParamKind), usize> = BTreeMap::new();
    for p in &e.parameters {
        *seen.entry((p.name.clone(), p.kind)).or_insert(0) += 1;
    }
    for ((name, kind), n) in seen {
        if n > 1 {
            out.push(Violation::new(
                ViolationCode::DuplicateParam,
                format!("{n} parameters named '{name}' with kind {kind}"),
            ));
        }
    }

    if EndpointId::derive(e.http_method, &e.path) != e.endpoint_id {
        out.push(Violation::new(
            ViolationCode::EndpointIdMismatch,
            format!("endpoint_id '{}' is not derived from (path, verb)", e.endpoint_id),
        ));
    }

    for p in &e.parameters {
        for vc in &p.value_constraints {
            match vc.kind {
                ConstraintKind::Enumeration => {
                    if vc.allowed_values.as_ref().map(|v| v.is_empty()).unwrap_or(true) {
                        out.push(Violation::new(
                            ViolationCode::EnumValuesEmpty,
                            format!("enumeration constraint on '{}' has no values", p.name),
                        ));
                    }
                }
                ConstraintKind::Range => {
                    if let (Some(min), Some(max)) = (vc.min, vc.max) {
                        if min > max {
                            out.push(Violation::new(
                                ViolationCode::RangeInverted,
                                format!("range on '{}' has min {min} > max {max}", p.name),
                            ));
                        }
                    }
                }
                ConstraintKind::Pattern => {
                    let compiles = vc
                        .regex
                        .as_deref()
                        .map(|r| regex::Regex::new(r).is_ok())
                        .unwrap_or(false);
                    if !compiles {
                        out.push(Violation::new(
                            ViolationCode::RegexInvalid,
                            format!("pattern constraint on '{}' does not compile", p.name),
                        ));
                    }
                }
                ConstraintKind::FreeText => {}
            }
        }
    }

    for (i, ipd) in e.ipds.iter().enumerate() {
        if ipd.parameters.is_empty()
            || (ipd.relation == IpdRelation::Requires && ipd.parameters.len() < 2)
        {
            out.push(Violation::new(
                ViolationCode::IpdArity,
                format!("IPD #{i} ({:?}) has too few parameters", ipd.relation),
            ));
        }
        for name in &ipd.parameters {
            if e.parameter(name).is_none() {
                out.push(Violation::new(
                    ViolationCode::IpdUnknownParam,
                    format!("IPD #{i} references unknown parameter '{name}'"),
                ));
            }
        }
    }

    for op in &e.db_ops {
        if op.line == 0 {
            out.push(Violation::new(
                ViolationCode::DbLineInvalid,
                format!("database operation in {} has line 0", op.enclosing_class),
            ));
        }
    }

    out
}
