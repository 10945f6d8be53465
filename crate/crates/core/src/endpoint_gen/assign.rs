//! Initial parameter-assignment generation for one endpoint.

use super::EndpointGenError;
use crate::diag::Diagnostic;
use crate::gateway::Gateway;
use crate::model::{request_satisfies_all, Assignment, Endpoint};
use serde_json::Value;
use std::collections::BTreeMap;

pub(crate) fn assignment_from_json(item: &Value) -> Assignment {
    item.as_object()
        .map(|map| {
            map.iter()
                .map(|(k, v)| (k.clone(), v.as_str().map(String::from)))
                .collect()
        })
        .unwrap_or_default()
}

fn endpoint_prompt_details(e: &Endpoint) -> BTreeMap<String, String> {
    let params: Vec<String> = e
        .parameters
        .iter()
        .map(|p| {
            let constraints: Vec<String> = p
                .value_constraints
                .iter()
                .map(|vc| match vc.kind {
                    crate::model::ConstraintKind::Enumeration => format!(
                        "one of {:?}",
                        vc.allowed_values.clone().unwrap_or_default()
                    ),
                    crate::model::ConstraintKind::Range => {
                        format!("range {:?}..{:?}", vc.min, vc.max)
                    }
                    crate::model::ConstraintKind::Pattern => {
                        format!("pattern {}", vc.regex.clone().unwrap_or_default())
                    }
                    crate::model::ConstraintKind::FreeText => vc.note.clone(),
                })
                .collect();
            format!(
                "{} ({}, {}){}",
                p.name,
                p.datatype,
                p.kind,
                if constraints.is_empty() {
                    String::new()
                } else {
                    format!(" constraints: {}", constraints.join("; "))
                }
            )
        })
        .collect();
    let ipds: Vec<String> = e
        .ipds
        .iter()
        .map(|i| {
            format!(
                "{:?} over {:?}{}",
                i.relation,
                i.parameters,
                if i.constraint_logic.is_empty() {
                    String::new()
                } else {
                    format!(" where {}", i.constraint_logic)
                }
            )
        })
        .collect();
    let mut slots = BTreeMap::new();
    slots.insert("endpoint".to_string(), e.label());
    slots.insert(
        "parameters".to_string(),
        if params.is_empty() {
            "(none)".to_string()
        } else {
            params.join("\n")
        },
    );
    slots.insert(
        "ipds".to_string(),
        if ipds.is_empty() {
            "(none)".to_string()
        } else {
            ipds.join("\n")
        },
    );
    slots
}

/// Ask the gateway for parameter-to-value mappings for an endpoint and keep
/// only assignments that satisfy the extracted model (violating ones are
/// dropped with diagnostics and the prompt is retried once). A parameterless
/// endpoint yields a single empty assignment without a gateway call.
pub fn generate_initial_assignments(
    endpoint: &Endpoint,
    odg_context: &str,
    gateway: &Gateway,
) -> Result<(Vec<Assignment>, Vec<Diagnostic>), EndpointGenError> {
    if endpoint.parameters.is_empty() {
        return Ok((vec![Assignment::new()], Vec::new()));
    }
    let mut diagnostics = Vec::new();
    for attempt in 1..=2u32 {
        let mut slots = endpoint_prompt_details(endpoint);
        slots.insert("odg_context".to_string(), odg_context.to_string());
        slots.insert("attempt".to_string(), attempt.to_string());
        let (value, _) = gateway.complete_structured("generate-assignments", &slots, "assignments")?;
        let mut valid = Vec::new();
        for item in value.as_array().into_iter().flatten() {
            let assignment = assignment_from_json(item);
            match request_satisfies_all(endpoint, &assignment) {
                Ok(true) => valid.push(assignment),
                Ok(false) => diagnostics.push(
                    Diagnostic::new(
                        "ASSIGNMENT_DROPPED",
                        format!("assignment violates the endpoint model: {item}"),
                    )
                    .with_subject(endpoint.endpoint_id.to_string()),
                ),
                Err(e) => return Err(e.into()),
            }
        }
        if !valid.is_empty() {
            return Ok((valid, diagnostics));
        }
        diagnostics.push(
            Diagnostic::new(
                "ASSIGNMENT_RETRY",
                format!("attempt {attempt} produced no valid assignment"),
            )
            .with_subject(endpoint.endpoint_id.to_string()),
        );
    }
    Err(EndpointGenError::NoValidAssignment(endpoint.label()))
}
