//! The six agent tools. All tools except `extract_code_context` yield new
//! requests; model mutations (`modify_ipd`, `update_value_constraint`,
//! `modify_param_type`) apply to the run-scoped endpoint copy only, never to
//! the persisted extraction.

use super::{EndpointGenError, ToolInvocation, ToolKind};
use crate::diag::Diagnostic;
use crate::gateway::Gateway;
use crate::harness::{build_request, HttpRequestSpec, RequestOrigin};
use crate::ingest::{run_code_query, SourceUnit};
use crate::model::{
    ConstraintKind, Endpoint, InterParamDependency, IpdRelation, ValueConstraint,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

/// Payload of one tool execution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ToolResult {
    pub requests: Vec<HttpRequestSpec>,
    pub context: Vec<String>,
    /// Human-readable description of a run-scoped model change.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_mutation: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
}

fn str_arg(args: &Value, key: &str) -> Option<String> {
    args.get(key).and_then(|v| v.as_str()).map(String::from)
}

fn require_arg(args: &Value, key: &str, tool: &str) -> Result<String, EndpointGenError> {
    str_arg(args, key).ok_or_else(|| {
        EndpointGenError::InvalidToolArgs(format!("{tool} requires string argument '{key}'"))
    })
}

fn requests_from_assignments(
    endpoint: &Endpoint,
    value: &Value,
    origin: RequestOrigin,
    result: &mut ToolResult,
) {
    for item in value.as_array().into_iter().flatten() {
        let assignment = super::assign::assignment_from_json(item);
        match build_request(endpoint, &assignment, origin) {
            Ok(req) => result.requests.push(req),
            Err(e) => result.diagnostics.push(
                Diagnostic::new("REQUEST_SKIPPED", format!("{e}: {item}"))
                    .with_subject(endpoint.endpoint_id.to_string()),
            ),
        }
    }
}

fn assignments_via(
    gateway: &Gateway,
    template: &str,
    slots: &BTreeMap<String, String>,
) -> Result<Value, EndpointGenError> {
    let (value, _) = gateway.complete_structured(template, slots, "assignments")?;
    Ok(value)
}

fn slots(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

/// Execute one tool chosen by the planner. `endpoint` is the run-scoped
/// copy; `all_endpoints` lets `generate_requests` target a prerequisite
/// endpoint by label.
#[allow(clippy::too_many_arguments)]
pub fn apply_tool(
    tool_name: &str,
    arguments: &Value,
    endpoint: &mut Endpoint,
    all_endpoints: &[Endpoint],
    open_context: &[String],
    origin: RequestOrigin,
    gateway: &Gateway,
    units: &[SourceUnit],
) -> Result<ToolInvocation, EndpointGenError> {
    let tool = ToolKind::parse(tool_name)
        .ok_or_else(|| EndpointGenError::InvalidToolArgs(format!("unknown tool '{tool_name}'")))?;
    let context_text = if open_context.is_empty() {
        "(none)".to_string()
    } else {
        open_context.join("\n\n")
    };
    let mut result = ToolResult::default();

    match tool {
        ToolKind::ModifyParamValue => {
            let parameter = require_arg(arguments, "parameter", tool_name)?;
            if endpoint.parameter(&parameter).is_none() {
                return Err(EndpointGenError::InvalidToolArgs(format!(
                    "'{parameter}' is not a parameter of {}",
                    endpoint.label()
                )));
            }
            let guidance = str_arg(arguments, "guidance").unwrap_or_default();
            let value = assignments_via(
                gateway,
                "tool-modify-param-value",
                &slots(&[
                    ("endpoint", endpoint.label()),
                    ("parameter", parameter),
                    ("guidance", guidance),
                    ("context", context_text),
                ]),
            )?;
            requests_from_assignments(endpoint, &value, origin, &mut result);
        }
        ToolKind::ModifyParamType => {
            let parameter = require_arg(arguments, "parameter", tool_name)?;
            let new_type = require_arg(arguments, "new_type", tool_name)?;
            let Some(param) = endpoint.parameters.iter_mut().find(|p| p.name == parameter)
            else {
                return Err(EndpointGenError::InvalidToolArgs(format!(
                    "'{parameter}' is not a parameter of {}",
                    endpoint.label()
                )));
            };
            let old = std::mem::replace(&mut param.datatype, new_type.clone());
            result.model_mutation = Some(format!(
                "parameter '{parameter}' datatype {old} -> {new_type} (run-scoped)"
            ));
            let value = assignments_via(
                gateway,
                "tool-modify-param-type",
                &slots(&[
                    ("endpoint", endpoint.label()),
                    ("parameter", parameter),
                    ("new_type", new_type),
                    ("context", context_text),
                ]),
            )?;
            requests_from_assignments(endpoint, &value, origin, &mut result);
        }
        ToolKind::ModifyIpd => {
            let relation_name = require_arg(arguments, "relation", tool_name)?;
            let relation = IpdRelation::parse(&relation_name).ok_or_else(|| {
                EndpointGenError::InvalidToolArgs(format!("unknown relation '{relation_name}'"))
            })?;
            let parameters: Vec<String> = arguments["parameters"]
                .as_array()
                .into_iter()
                .flatten()
                .filter_map(|v| v.as_str().map(String::from))
                .collect();
            if parameters.is_empty() {
                return Err(EndpointGenError::InvalidToolArgs(
                    "modify_ipd requires a non-empty 'parameters' array".to_string(),
                ));
            }
            for name in &parameters {
                if endpoint.parameter(name).is_none() {
                    return Err(EndpointGenError::InvalidToolArgs(format!(
                        "'{name}' is not a parameter of {}",
                        endpoint.label()
                    )));
                }
            }
            let ipd = InterParamDependency::new(relation, parameters.clone())
                .with_logic(str_arg(arguments, "constraint_logic").unwrap_or_default());
            // Replace any IPD over the same parameter set, else append.
            let mut sorted_new = parameters.clone();
            sorted_new.sort();
            endpoint.ipds.retain(|existing| {
                let mut sorted = existing.parameters.clone();
                sorted.sort();
                sorted != sorted_new
            });
            let description = format!("{:?} over {:?}", ipd.relation, ipd.parameters);
            endpoint.ipds.push(ipd);
            result.model_mutation = Some(format!("IPD replaced with {description} (run-scoped)"));
            let value = assignments_via(
                gateway,
                "tool-modify-ipd",
                &slots(&[
                    ("endpoint", endpoint.label()),
                    ("ipd", description),
                    ("context", context_text),
                ]),
            )?;
            requests_from_assignments(endpoint, &value, origin, &mut result);
        }
        ToolKind::UpdateValueConstraint => {
            let parameter = require_arg(arguments, "parameter", tool_name)?;
            let kind = match str_arg(arguments, "kind").as_deref() {
                Some("enumeration") => ConstraintKind::Enumeration,
                Some("range") => ConstraintKind::Range,
                Some("pattern") => ConstraintKind::Pattern,
                Some("free_text") | None => ConstraintKind::FreeText,
                Some(other) => {
                    return Err(EndpointGenError::InvalidToolArgs(format!(
                        "unknown constraint kind '{other}'"
                    )))
                }
            };
            let constraint = ValueConstraint {
                kind,
                allowed_values: arguments["allowed_values"].as_array().map(|vals| {
                    vals.iter()
                        .filter_map(|v| v.as_str().map(String::from))
                        .collect()
                }),
                min: arguments["min"].as_f64(),
                max: arguments["max"].as_f64(),
                regex: str_arg(arguments, "regex"),
                note: str_arg(arguments, "note").unwrap_or_default(),
            };
            let Some(param) = endpoint.parameters.iter_mut().find(|p| p.name == parameter)
            else {
                return Err(EndpointGenError::InvalidToolArgs(format!(
                    "'{parameter}' is not a parameter of {}",
                    endpoint.label()
                )));
            };
            let description = format!("{:?} on '{parameter}'", constraint.kind);
            param.value_constraints = vec![constraint];
            result.model_mutation =
                Some(format!("value constraint replaced: {description} (run-scoped)"));
            let value = assignments_via(
                gateway,
                "tool-update-value-constraint",
                &slots(&[
                    ("endpoint", endpoint.label()),
                    ("parameter", parameter),
                    ("constraint", description),
                    ("context", context_text),
                ]),
            )?;
            requests_from_assignments(endpoint, &value, origin, &mut result);
        }
        ToolKind::GenerateRequests => {
            let target_owned;
            let target: &Endpoint = match str_arg(arguments, "endpoint") {
                Some(label) => {
                    let found = all_endpoints.iter().find(|e| e.label() == label);
                    match found {
                        Some(e) => {
                            target_owned = e.clone();
                            &target_owned
                        }
                        None => {
                            return Err(EndpointGenError::InvalidToolArgs(format!(
                                "unknown endpoint label '{label}'"
                            )))
                        }
                    }
                }
                None => endpoint,
            };
            let guidance = str_arg(arguments, "guidance").unwrap_or_default();
            let value = assignments_via(
                gateway,
                "tool-generate-requests",
                &slots(&[
                    ("endpoint", target.label()),
                    ("guidance", guidance),
                    ("context", context_text),
                ]),
            )?;
            requests_from_assignments(target, &value, origin, &mut result);
        }
        ToolKind::ExtractCodeContext => {
            let query = require_arg(arguments, "query", tool_name)?;
            let method = str_arg(arguments, "method").unwrap_or_else(|| {
                format!("{}.{}", endpoint.class_name, endpoint.method_signature)
            });
            let context = run_code_query(&query, &method, units)?;
            if context.is_empty() {
                result.diagnostics.push(
                    Diagnostic::new(
                        "EMPTY_CONTEXT",
                        format!("code query '{query}' on '{method}' returned nothing"),
                    )
                    .with_subject(endpoint.endpoint_id.to_string()),
                );
            }
            result.context = context;
        }
    }

    Ok(ToolInvocation {
        tool,
        arguments: arguments.clone(),
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{StubRule, StubScript, TemplateCatalog};
    use crate::model::{HttpMethod, ParamKind, Parameter};

    fn gateway(rules: Vec<StubRule>) -> Gateway {
        Gateway::stub(TemplateCatalog::bundled().unwrap(), StubScript::from_rules(rules))
    }

    fn trade() -> Endpoint {
        Endpoint::new("c.Trade", "trade(String)", "/trade", HttpMethod::Post).with_parameter(
            Parameter::new("action", "string", ParamKind::Query)
                .with_constraint(ValueConstraint::enumeration(["buy", "sell"])),
        )
    }

    #[test]
    fn modify_param_value_produces_requests() {
        let gw = gateway(vec![StubRule::new(
            "tool-modify-param-value",
            "```json\n[{\"action\": \"sell\"}]\n```",
        )]);
        let mut e = trade();
        let inv = apply_tool(
            "modify_param_value",
            &serde_json::json!({"parameter": "action"}),
            &mut e,
            &[],
            &[],
            RequestOrigin::Repair,
            &gw,
            &[],
        )
        .unwrap();
        assert_eq!(inv.tool, ToolKind::ModifyParamValue);
        assert_eq!(inv.result.requests.len(), 1);
        assert_eq!(inv.result.requests[0].query[0].1, "sell");
    }

    #[test]
    fn modify_param_type_mutates_run_copy() {
        let gw = gateway(vec![StubRule::new(
            "tool-modify-param-type",
            "```json\n[{\"action\": \"2\"}]\n```",
        )]);
        let mut e = trade();
        e.parameters[0].value_constraints.clear();
        let inv = apply_tool(
            "modify_param_type",
            &serde_json::json!({"parameter": "action", "new_type": "int"}),
            &mut e,
            &[],
            &[],
            RequestOrigin::Repair,
            &gw,
            &[],
        )
        .unwrap();
        assert_eq!(e.parameters[0].datatype, "int");
        assert!(inv.result.model_mutation.is_some());
        assert_eq!(inv.result.requests.len(), 1);
    }

    #[test]
    fn invalid_args_are_rejected() {
        let gw = gateway(vec![]);
        let mut e = trade();
        let err = apply_tool(
            "modify_param_value",
            &serde_json::json!({}),
            &mut e,
            &[],
            &[],
            RequestOrigin::Repair,
            &gw,
            &[],
        )
        .unwrap_err();
        assert_eq!(err.code(), "INVALID_TOOL_ARGS");

        let err = apply_tool(
            "paint_bikeshed",
            &serde_json::json!({}),
            &mut e,
            &[],
            &[],
            RequestOrigin::Repair,
            &gw,
            &[],
        )
        .unwrap_err();
        assert_eq!(err.code(), "INVALID_TOOL_ARGS");
    }

    #[test]
    fn extract_code_context_on_leaf_is_empty_and_flagged() {
        let gw = gateway(vec![]);
        let units = vec![SourceUnit::new(
            "S.java",
            "public class S {\n  public int leaf(int x) {\n    return x;\n  }\n}\n",
        )];
        let mut e = Endpoint::new("S", "leaf(int)", "/leaf", HttpMethod::Get);
        let inv = apply_tool(
            "extract_code_context",
            &serde_json::json!({"query": "callees-of", "method": "leaf"}),
            &mut e,
            &[],
            &[],
            RequestOrigin::Coverage,
            &gw,
            &units,
        )
        .unwrap();
        assert!(inv.result.context.is_empty());
        assert_eq!(inv.result.diagnostics[0].code, "EMPTY_CONTEXT");

        let err = apply_tool(
            "extract_code_context",
            &serde_json::json!({"query": "types-of", "method": "leaf"}),
            &mut e,
            &[],
            &[],
            RequestOrigin::Coverage,
            &gw,
            &units,
        )
        .unwrap_err();
        assert_eq!(err.code(), "UNKNOWN_CODE_QUERY");
    }

    #[test]
    fn modify_ipd_validates_and_replaces() {
        let gw = gateway(vec![StubRule::new(
            "tool-modify-ipd",
            "```json\n[{\"action\": \"buy\"}]\n```",
        )]);
        let mut e = trade();
        let err = apply_tool(
            "modify_ipd",
            &serde_json::json!({"relation": "Requires", "parameters": ["ghost", "action"]}),
            &mut e,
            &[],
            &[],
            RequestOrigin::Repair,
            &gw,
            &[],
        )
        .unwrap_err();
        assert_eq!(err.code(), "INVALID_TOOL_ARGS");

        let inv = apply_tool(
            "modify_ipd",
            &serde_json::json!({"relation": "Or", "parameters": ["action"]}),
            &mut e,
            &[],
            &[],
            RequestOrigin::Repair,
            &gw,
            &[],
        )
        .unwrap();
        assert_eq!(e.ipds.len(), 1);
        assert_eq!(e.ipds[0].relation, IpdRelation::Or);
        assert_eq!(inv.result.requests.len(), 1);
    }
}
