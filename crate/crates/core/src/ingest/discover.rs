//! Endpoint discovery from parsed units: route and verb resolution,
//! declared-parameter capture, and skeletal model assembly.

use super::java::{Annotation, ParsedMethod, ParsedUnit};
use super::{parse_units, IngestError, SourceUnit};
use crate::diag::Diagnostic;
use crate::model::{
    normalize_path, Endpoint, HttpMethod, ParamKind, Parameter, ResponseSchema, ValueConstraint,
};

#[derive(Debug, Clone, Default)]
pub struct DiscoveryOutput {
    pub endpoints: Vec<Endpoint>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Map a verb-mapping annotation to an HTTP method and its route value.
fn route_of(ann: &Annotation) -> Option<(HttpMethod, String)> {
    let method = match ann.name.as_str() {
        "GetMapping" => HttpMethod::Get,
        "PostMapping" => HttpMethod::Post,
        "PutMapping" => HttpMethod::Put,
        "DeleteMapping" => HttpMethod::Delete,
        "PatchMapping" => HttpMethod::Patch,
        "RequestMapping" => HttpMethod::parse(ann.method_arg.as_deref()?)?,
        _ => return None,
    };
    Some((method, ann.value.clone().unwrap_or_default()))
}

fn datatype_tag(java_type: &str) -> String {
    let simple = java_type.rsplit('.').next().unwrap_or(java_type);
    match simple {
        "String" | "CharSequence" => "string".into(),
        "int" | "Integer" | "long" | "Long" | "short" | "Short" => "int".into(),
        "float" | "Float" | "double" | "Double" | "BigDecimal" => "number".into(),
        "boolean" | "Boolean" => "bool".into(),
        "LocalDate" | "Date" | "LocalDateTime" => "date".into(),
        other => other.to_lowercase(),
    }
}

/// Parameter-binding annotations of the supported subset. The request object
/// itself is not a parameter; servlet-style reads are recovered later via
/// the gateway.
fn bind_parameter(method: &ParsedMethod, class: &str, p: &super::java::ParsedParam) -> Option<Parameter> {
    if p.datatype.ends_with("HttpServletRequest") || p.datatype.ends_with("HttpServletResponse") {
        return None;
    }
    let binding = p.annotations.iter().find_map(|a| {
        let kind = match a.name.as_str() {
            "PathVariable" => ParamKind::Path,
            "RequestParam" => ParamKind::Query,
            "RequestHeader" => ParamKind::Header,
            "RequestBody" | "ModelAttribute" => ParamKind::Body,
            _ => return None,
        };
        Some((kind, a))
    });
    let (kind, ann) = match binding {
        Some(b) => b,
        // Unannotated simple-typed parameters bind as query parameters.
        None => {
            let mut param = Parameter::new(&p.name, datatype_tag(&p.datatype), ParamKind::Query)
                .located(class, method.signature());
            for a in &p.annotations {
                param.annotations.push(annotation_text(a));
            }
            return Some(param);
        }
    };
    let name = ann.value.clone().unwrap_or_else(|| p.name.clone());
    let mut param = Parameter::new(name, datatype_tag(&p.datatype), kind)
        .located(class, method.signature());
    for a in &p.annotations {
        param.annotations.push(annotation_text(a));
    }
    if ann.name == "ModelAttribute" {
        // Model attributes are not expanded; carried as an opaque body value.
        param = param.with_constraint(ValueConstraint::free_text(format!(
            "model attribute of type {}",
            p.datatype
        )));
    }
    Some(param)
}

fn annotation_text(a: &Annotation) -> String {
    match &a.value {
        Some(v) => format!("@{}(\"{}\")", a.name, v),
        None => format!("@{}", a.name),
    }
}

fn discover_in_unit(unit: &ParsedUnit, out: &mut DiscoveryOutput) {
    let class_prefix = unit
        .class_annotations
        .iter()
        .find(|a| a.name == "RequestMapping" || a.name == "Path")
        .and_then(|a| a.value.clone())
        .unwrap_or_default();
    let qualified = unit.qualified_class();

    for method in &unit.methods {
        let Some((verb, route)) = method.annotations.iter().find_map(route_of) else {
            // No route annotation: not an endpoint method.
            continue;
        };
        let path = normalize_path(&format!("{class_prefix}/{route}"));
        let mut endpoint = Endpoint::new(&qualified, method.signature(), &path, verb);
        for p in &method.params {
            if let Some(param) = bind_parameter(method, &qualified, p) {
                endpoint.parameters.push(param);
            }
        }
        if method.return_type.is_empty() || method.return_type == "void" {
            out.diagnostics.push(
                Diagnostic::new(
                    "RESPONSE_SCHEMA_MISSING",
                    format!("no return-type declaration for {}", endpoint.label()),
                )
                .with_subject(endpoint.endpoint_id.to_string()),
            );
        } else {
            endpoint.response_schema = ResponseSchema::Text(method.return_type.clone());
        }
        out.endpoints.push(endpoint);
    }

    out.diagnostics.extend(unit.diagnostics.iter().cloned());
}

/// Discover skeletal endpoints across all units.
///
/// Deterministic and order-insensitive: units are processed in path order
/// and the result is sorted by (path, verb). Duplicate (route, verb) pairs
/// keep the first occurrence and record a diagnostic.
pub fn discover_endpoints(units: &[SourceUnit]) -> Result<DiscoveryOutput, IngestError> {
    let parsed = parse_units(units)?;
    let mut out = DiscoveryOutput::default();
    for unit in &parsed {
        discover_in_unit(unit, &mut out);
    }
    out.endpoints.sort_by(|a, b| {
        a.path
            .cmp(&b.path)
            .then_with(|| a.http_method.as_str().cmp(b.http_method.as_str()))
    });
    let mut seen = std::collections::BTreeSet::new();
    let mut kept = Vec::with_capacity(out.endpoints.len());
    for e in std::mem::take(&mut out.endpoints) {
        if seen.insert(e.endpoint_id.clone()) {
            kept.push(e);
        } else {
            out.diagnostics.push(
                Diagnostic::new(
                    "DUPLICATE_ROUTE",
                    format!("duplicate endpoint {} dropped", e.label()),
                )
                .with_subject(e.endpoint_id.to_string()),
            );
        }
    }
    out.endpoints = kept;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(path: &str, text: &str) -> SourceUnit {
        SourceUnit::new(path, text)
    }

    #[test]
    fn class_and_method_routes_concatenate() {
        let text = r#"package org.acme.clinic;
@RequestMapping("/owners/{ownerId}")
public class PetController {
    @PostMapping("/pets/{petId}/visits/new")
    public VisitCreated createVisit(@PathVariable("ownerId") int ownerId,
                                    @PathVariable("petId") int petId) {
        return helper.run(ownerId, petId);
    }
}
"#;
        let out = discover_endpoints(&[unit("PetController.java", text)]).unwrap();
        assert_eq!(out.endpoints.len(), 1);
        let e = &out.endpoints[0];
        assert_eq!(e.path, "/owners/{ownerId}/pets/{petId}/visits/new");
        assert_eq!(e.http_method, HttpMethod::Post);
        assert_eq!(e.parameters.len(), 2);
        assert_eq!(e.parameters[0].kind, ParamKind::Path);
        assert!(crate::model::validate_endpoint(e).is_empty());
    }

    #[test]
    fn method_without_route_annotation_is_not_an_endpoint() {
        let text = "public class Helper {\n  public int compute(int x) {\n    return x;\n  }\n}\n";
        let out = discover_endpoints(&[unit("Helper.java", text)]).unwrap();
        assert!(out.endpoints.is_empty());
    }

    #[test]
    fn discovery_is_order_insensitive() {
        let a = unit(
            "A.java",
            "@RequestMapping(\"/a\")\npublic class A {\n  @GetMapping\n  public String f() {\n    return \"x\";\n  }\n}\n",
        );
        let b = unit(
            "B.java",
            "@RequestMapping(\"/b\")\npublic class B {\n  @GetMapping\n  public String g() {\n    return \"y\";\n  }\n}\n",
        );
        let fwd = discover_endpoints(&[a.clone(), b.clone()]).unwrap();
        let rev = discover_endpoints(&[b, a]).unwrap();
        assert_eq!(fwd.endpoints, rev.endpoints);
    }

    #[test]
    fn void_handler_gets_flagged_response_schema() {
        let text = "@RequestMapping(\"/x\")\npublic class X {\n  @GetMapping\n  public void ping() {\n    int a = 1;\n  }\n}\n";
        let out = discover_endpoints(&[unit("X.java", text)]).unwrap();
        assert!(out.endpoints[0].response_schema.is_empty());
        assert!(out
            .diagnostics
            .iter()
            .any(|d| d.code == "RESPONSE_SCHEMA_MISSING"));
    }
}
