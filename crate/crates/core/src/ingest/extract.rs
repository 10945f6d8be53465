//! Gateway-backed semantic extraction: servlet-style parameters, value
//! constraints, and inter-parameter dependencies, plus the end-to-end
//! analysis pipeline that produces an endpoint-model document.

use super::{
    attach_db_operations, build_call_chain_slice, discover_endpoints, parse_units, CallChainSlice,
    IngestError, SourceUnit, DEFAULT_CALL_DEPTH,
};
use crate::diag::Diagnostic;
use crate::gateway::{default_registry, parse_structured, Gateway, GatewayError, LlmExchange};
use crate::model::{
    validate_endpoint, ConstraintKind, Endpoint, EndpointModelDocument, InterParamDependency,
    IpdRelation, ParamKind, Parameter, ValueConstraint,
};
use serde_json::Value;
use std::collections::BTreeMap;

fn slots(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

/// Complete a template and parse the response, retrying once with a
/// reformat prompt. On success returns the parsed value; on failure returns
/// the last raw response so callers can decide between erroring and
/// downgrading.
fn structured_with_retry(
    gateway: &Gateway,
    template_id: &str,
    slot_values: &BTreeMap<String, String>,
    schema_id: &str,
) -> Result<Result<(Value, LlmExchange), String>, IngestError> {
    let registry = default_registry();
    let first = gateway.complete(template_id, slot_values)?;
    match parse_structured(&first.response, schema_id, &registry) {
        Ok(v) => Ok(Ok((v, first))),
        Err(GatewayError::NoBlock | GatewayError::SchemaMismatch(_)) => {
            let mut retry_slots = BTreeMap::new();
            retry_slots.insert("original_prompt".to_string(), first.rendered_prompt.clone());
            retry_slots.insert("error".to_string(), "output could not be parsed".to_string());
            let second = match gateway.complete("reformat-structured", &retry_slots) {
                Ok(second) => second,
                // No scripted reformat rule: downgrade on the first answer.
                Err(GatewayError::StubUnmatched { .. }) => return Ok(Err(first.response)),
                Err(e) => return Err(e.into()),
            };
            match parse_structured(&second.response, schema_id, &registry) {
                Ok(v) => Ok(Ok((v, second))),
                Err(GatewayError::NoBlock | GatewayError::SchemaMismatch(_)) => {
                    Ok(Err(second.response))
                }
                Err(e) => Err(e.into()),
            }
        }
        Err(e) => Err(e.into()),
    }
}

fn slice_context(slice: &CallChainSlice) -> String {
    slice
        .reachable_method_bodies
        .iter()
        .map(|(sig, body)| format!("// {sig}\n{body}"))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Recover servlet-style parameters (request-object reads) from a call-chain
/// slice via the gateway.
pub fn extract_servlet_parameters(
    slice: &CallChainSlice,
    gateway: &Gateway,
) -> Result<Vec<Parameter>, IngestError> {
    let slot_values = slots(&[
        ("root_method", slice.root_method.clone()),
        ("code_context", slice_context(slice)),
    ]);
    let outcome =
        structured_with_retry(gateway, "extract-servlet-parameters", &slot_values, "parameters")?;
    let (value, _) = outcome.map_err(|raw| {
        IngestError::LlmFormat(format!(
            "servlet parameter extraction for {} unparseable: {}",
            slice.root_method,
            truncate(&raw, 120)
        ))
    })?;

    let mut out = Vec::new();
    for item in value.as_array().into_iter().flatten() {
        let name = item["name"].as_str().unwrap_or_default().to_string();
        let datatype = item["datatype"].as_str().unwrap_or("string").to_string();
        if name.is_empty() {
            continue;
        }
        let (class, method) = split_site(
            item["enclosing_class"].as_str(),
            item["enclosing_method"].as_str(),
            &slice.root_method,
        );
        // Request-object reads arrive in the query string unless stated.
        let kind = match item["kind"].as_str() {
            Some("path") => ParamKind::Path,
            Some("body") => ParamKind::Body,
            Some("header") => ParamKind::Header,
            _ => ParamKind::Query,
        };
        if out
            .iter()
            .any(|p: &Parameter| p.name == name && p.kind == kind)
        {
            continue;
        }
        out.push(Parameter::new(name, datatype, kind).located(class, method));
    }
    Ok(out)
}

fn split_site(class: Option<&str>, method: Option<&str>, root: &str) -> (String, String) {
    let (root_class, root_method) = root.rsplit_once('.').unwrap_or(("", root));
    (
        class.unwrap_or(root_class).to_string(),
        method.unwrap_or(root_method).to_string(),
    )
}

fn truncate(s: &str, max: usize) -> String {
    if s.len() <= max {
        s.to_string()
    } else {
        format!("{}...", &s[..max])
    }
}

fn parameter_summary(p: &Parameter) -> String {
    format!(
        "{} ({}, {}){}",
        p.name,
        p.datatype,
        p.kind,
        if p.annotations.is_empty() {
            String::new()
        } else {
            format!(" annotations: {}", p.annotations.join(" "))
        }
    )
}

/// Extract value constraints for every parameter of an endpoint. One gateway
/// call per parameter; unparseable output downgrades to a free-text
/// constraint carrying the raw response.
pub fn extract_value_constraints(
    endpoint: &Endpoint,
    code_context: &str,
    gateway: &Gateway,
) -> Result<(BTreeMap<String, Vec<ValueConstraint>>, Vec<Diagnostic>), IngestError> {
    let mut constraints: BTreeMap<String, Vec<ValueConstraint>> = BTreeMap::new();
    let mut diagnostics = Vec::new();

    for param in &endpoint.parameters {
        let slot_values = slots(&[
            ("endpoint", endpoint.label()),
            ("parameter", parameter_summary(param)),
            ("code_context", code_context.to_string()),
        ]);
        let outcome = structured_with_retry(
            gateway,
            "extract-value-constraints",
            &slot_values,
            "value-constraints",
        )?;
        match outcome {
            Ok((value, _)) => {
                for item in value.as_array().into_iter().flatten() {
                    let target = item["parameter"].as_str().unwrap_or_default();
                    if target != param.name {
                        diagnostics.push(
                            Diagnostic::new(
                                "CONSTRAINT_PARAM_MISMATCH",
                                format!(
                                    "constraint for '{target}' returned while extracting '{}'",
                                    param.name
                                ),
                            )
                            .with_subject(endpoint.endpoint_id.to_string()),
                        );
                        continue;
                    }
                    match constraint_from_json(item) {
                        Some(vc) => constraints.entry(param.name.clone()).or_default().push(vc),
                        None => diagnostics.push(
                            Diagnostic::new(
                                "CONSTRAINT_KIND_UNKNOWN",
                                format!("unrecognized constraint kind for '{}'", param.name),
                            )
                            .with_subject(endpoint.endpoint_id.to_string()),
                        ),
                    }
                }
            }
            Err(raw) => {
                diagnostics.push(
                    Diagnostic::new(
                        "CONSTRAINT_DOWNGRADED",
                        format!(
                            "unparseable constraint output for '{}' kept as free text",
                            param.name
                        ),
                    )
                    .with_subject(endpoint.endpoint_id.to_string()),
                );
                constraints
                    .entry(param.name.clone())
                    .or_default()
                    .push(ValueConstraint::free_text(truncate(&raw, 400)));
            }
        }
    }
    Ok((constraints, diagnostics))
}

fn constraint_from_json(item: &Value) -> Option<ValueConstraint> {
    let kind = match item["kind"].as_str()? {
        "enumeration" => ConstraintKind::Enumeration,
        "range" => ConstraintKind::Range,
        "pattern" => ConstraintKind::Pattern,
        "free_text" => ConstraintKind::FreeText,
        _ => return None,
    };
    Some(ValueConstraint {
        kind,
        allowed_values: item["allowed_values"].as_array().map(|vals| {
            vals.iter()
                .filter_map(|v| v.as_str().map(String::from))
                .collect()
        }),
        min: item["min"].as_f64(),
        max: item["max"].as_f64(),
        regex: item["regex"].as_str().map(String::from),
        note: item["note"].as_str().unwrap_or_default().to_string(),
    })
}

/// Extract inter-parameter dependencies for an endpoint. Records referencing
/// unknown parameters or unknown relations are dropped with diagnostics.
pub fn extract_ipds(
    endpoint: &Endpoint,
    code_context: &str,
    gateway: &Gateway,
) -> Result<(Vec<InterParamDependency>, Vec<Diagnostic>), IngestError> {
    let mut diagnostics = Vec::new();
    if endpoint.parameters.len() < 2 {
        // Presence relations need at least two parameters; nothing to ask.
        return Ok((Vec::new(), diagnostics));
    }
    let params: Vec<String> = endpoint.parameters.iter().map(parameter_summary).collect();
    let slot_values = slots(&[
        ("endpoint", endpoint.label()),
        ("parameters", params.join("\n")),
        ("code_context", code_context.to_string()),
    ]);
    let outcome = structured_with_retry(gateway, "extract-ipds", &slot_values, "ipds")?;
    let value = match outcome {
        Ok((value, _)) => value,
        Err(raw) => {
            diagnostics.push(
                Diagnostic::new(
                    "IPD_OUTPUT_UNPARSEABLE",
                    format!("IPD output dropped: {}", truncate(&raw, 120)),
                )
                .with_subject(endpoint.endpoint_id.to_string()),
            );
            return Ok((Vec::new(), diagnostics));
        }
    };

    let mut out = Vec::new();
    for item in value.as_array().into_iter().flatten() {
        let relation_name = item["relation"].as_str().unwrap_or_default();
        let Some(relation) = IpdRelation::parse(relation_name) else {
            diagnostics.push(
                Diagnostic::new(
                    "IPD_RELATION_UNKNOWN",
                    format!("unknown IPD relation '{relation_name}' dropped"),
                )
                .with_subject(endpoint.endpoint_id.to_string()),
            );
            continue;
        };
        let names: Vec<String> = item["parameters"]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(|v| v.as_str().map(String::from))
            .collect();
        let unknown: Vec<&String> = names
            .iter()
            .filter(|n| endpoint.parameter(n).is_none())
            .collect();
        if !unknown.is_empty() {
            diagnostics.push(
                Diagnostic::new(
                    "IPD_UNKNOWN_PARAM",
                    format!(
                        "IPD ({relation_name}) references unknown parameter(s) {:?}; dropped",
                        unknown
                    ),
                )
                .with_subject(endpoint.endpoint_id.to_string()),
            );
            continue;
        }
        let ipd = InterParamDependency::new(relation, names).with_logic(
            item["constraint_logic"].as_str().unwrap_or_default(),
        );
        out.push(ipd);
    }
    Ok((out, diagnostics))
}

/// Options for the end-to-end analysis pipeline.
#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub application: String,
    pub call_depth: u32,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            application: "application".to_string(),
            call_depth: DEFAULT_CALL_DEPTH,
        }
    }
}

/// Run the full model-construction pipeline over a source corpus: discovery,
/// servlet-parameter recovery, constraint and IPD extraction, database
/// operations, and validation. Per-endpoint extraction failures degrade to
/// diagnostics; only parse errors abort.
pub fn analyze_application(
    units: &[SourceUnit],
    gateway: &Gateway,
    opts: &AnalyzeOptions,
) -> Result<EndpointModelDocument, IngestError> {
    let discovery = discover_endpoints(units)?;
    let mut endpoints = discovery.endpoints;
    let mut diagnostics = discovery.diagnostics;

    let parsed = parse_units(units)?;
    let servlet_roots: Vec<String> = parsed
        .iter()
        .flat_map(|u| {
            u.methods
                .iter()
                .filter(|m| {
                    m.params
                        .iter()
                        .any(|p| p.datatype.ends_with("HttpServletRequest"))
                })
                .map(move |m| format!("{}.{}", u.qualified_class(), m.signature()))
        })
        .collect();

    for endpoint in endpoints.iter_mut() {
        let root = format!("{}.{}", endpoint.class_name, endpoint.method_signature);
        let slice = match build_call_chain_slice(&root, units, opts.call_depth) {
            Ok(slice) => slice,
            Err(IngestError::MethodNotFound(_)) => {
                diagnostics.push(
                    Diagnostic::new("SLICE_MISSING", format!("no slice for {root}"))
                        .with_subject(endpoint.endpoint_id.to_string()),
                );
                continue;
            }
            Err(e) => return Err(e),
        };
        let context = slice_context(&slice);

        if servlet_roots.contains(&root) {
            match extract_servlet_parameters(&slice, gateway) {
                Ok(params) => {
                    for p in params {
                        let exists = endpoint
                            .parameters
                            .iter()
                            .any(|q| q.name == p.name && q.kind == p.kind);
                        if !exists {
                            endpoint.parameters.push(p);
                        }
                    }
                }
                Err(e @ IngestError::LlmFormat(_)) => {
                    diagnostics.push(
                        Diagnostic::new("LLM_FORMAT_ERROR", e.to_string())
                            .with_subject(endpoint.endpoint_id.to_string()),
                    );
                }
                Err(e) => return Err(e),
            }
        }

        let (constraints, diags) = extract_value_constraints(endpoint, &context, gateway)?;
        diagnostics.extend(diags);
        for param in endpoint.parameters.iter_mut() {
            if let Some(vcs) = constraints.get(&param.name) {
                param.value_constraints.extend(vcs.iter().cloned());
            }
        }

        let (ipds, diags) = extract_ipds(endpoint, &context, gateway)?;
        diagnostics.extend(diags);
        endpoint.ipds = ipds;
    }

    attach_db_operations(&mut endpoints, units, opts.call_depth)?;

    for endpoint in &endpoints {
        for violation in validate_endpoint(endpoint) {
            diagnostics.push(
                Diagnostic::new("MODEL_VIOLATION", violation.message)
                    .with_subject(endpoint.endpoint_id.to_string()),
            );
        }
    }

    let mut doc = EndpointModelDocument::new(opts.application.clone(), endpoints);
    doc.diagnostics = diagnostics;
    Ok(doc)
}
