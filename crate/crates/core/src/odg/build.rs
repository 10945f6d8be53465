//! Graph construction: resource edges from path analysis, semantic edges
//! and node summaries via the gateway.

use super::{OdgEdge, OdgError, OdgRelation, OperationDependencyGraph};
use crate::diag::Diagnostic;
use crate::gateway::{Gateway, GatewayError};
use crate::model::{CrudKind, Endpoint, EndpointId, HttpMethod};
use std::collections::BTreeMap;

fn segments(path: &str) -> Vec<&str> {
    path.split('/').filter(|s| !s.is_empty()).collect()
}

fn is_placeholder(segment: &str) -> bool {
    segment.starts_with('{') && segment.ends_with('}')
}

/// Normalized name stem: lowercase with a trailing `id` stripped.
fn stem(name: &str) -> String {
    let lower = name.to_lowercase();
    lower.strip_suffix("id").unwrap_or(&lower).to_string()
}

/// Placeholder/collection match: exact stem equality, or one stem a prefix
/// of the other (covers plural collection segments like `owners`).
fn stems_match(placeholder: &str, collection: &str) -> bool {
    let p = stem(placeholder);
    let c = stem(collection);
    if p.is_empty() || c.is_empty() {
        return false;
    }
    p == c || c.starts_with(&p) || p.starts_with(&c)
}

/// The collection path of an endpoint: its segments with one trailing
/// literal `new` segment stripped (creation-form routes like
/// `/owners/new`).
fn collection_path<'a>(e: &'a Endpoint, segs: &[&'a str]) -> Vec<&'a str> {
    let _ = e;
    match segs.last() {
        Some(&"new") => segs[..segs.len() - 1].to_vec(),
        _ => segs.to_vec(),
    }
}

/// Does producer `a` supply the placeholder at index `i` of consumer `b`?
///
/// Conditions, checked literally:
/// (i) shared resource prefix: `a`'s collection path equals `b`'s path
///     prefix before the placeholder;
/// (ii) the placeholder names the resource of that collection segment
///      (stem match);
/// (iii) verb consistency: `a` creates members (POST on the collection) or
///       lists them (GET on exactly the collection path).
fn produces(a: &Endpoint, b_segs: &[&str], i: usize) -> bool {
    if i == 0 || !is_placeholder(b_segs[i]) {
        return false;
    }
    let prefix = &b_segs[..i];
    let collection_seg = b_segs[i - 1];
    if is_placeholder(collection_seg) {
        return false;
    }
    let placeholder = b_segs[i].trim_matches(['{', '}']);
    if !stems_match(placeholder, collection_seg) {
        return false;
    }
    let a_segs = segments(&a.path);
    let a_collection = collection_path(a, &a_segs);
    if a_collection != *prefix {
        return false;
    }
    match a.http_method {
        HttpMethod::Post => true,
        HttpMethod::Get => a_segs == *prefix,
        _ => false,
    }
}

/// Infer resource edges over all ordered endpoint pairs.
pub fn infer_resource_edges(endpoints: &[Endpoint]) -> Vec<OdgEdge> {
    let per_consumer = crate::par::map_collect(endpoints, |b| {
        let b_segs = segments(&b.path);
        let mut edges = Vec::new();
        for a in endpoints {
            if a.endpoint_id == b.endpoint_id {
                continue;
            }
            for i in 0..b_segs.len() {
                if produces(a, &b_segs, i) {
                    edges.push(OdgEdge {
                        src: a.endpoint_id.clone(),
                        dst: b.endpoint_id.clone(),
                        relation: OdgRelation::Resource,
                        evidence: format!(
                            "{} supplies {} consumed by {}",
                            a.label(),
                            b_segs[i],
                            b.label()
                        ),
                    });
                    break;
                }
            }
        }
        edges
    });
    per_consumer.into_iter().flatten().collect()
}

fn endpoint_details(e: &Endpoint) -> String {
    let params: Vec<String> = e
        .parameters
        .iter()
        .map(|p| format!("{} ({}, {})", p.name, p.datatype, p.kind))
        .collect();
    let db: Vec<String> = e
        .db_ops
        .iter()
        .map(|op| {
            format!(
                "{:?} in {}.{} line {}",
                op.crud, op.enclosing_class, op.method_signature, op.line
            )
        })
        .collect();
    let response = match &e.response_schema {
        s if s.is_empty() => "(none)".to_string(),
        crate::model::ResponseSchema::Text(t) => t.clone(),
        crate::model::ResponseSchema::Fields(m) => serde_json::to_string(m).unwrap_or_default(),
    };
    format!(
        "{}\n  parameters: {}\n  response: {}\n  database: {}",
        e.label(),
        if params.is_empty() { "(none)".to_string() } else { params.join("; ") },
        response,
        if db.is_empty() { "(none)".to_string() } else { db.join("; ") },
    )
}

/// Ask the gateway for producer-consumer and database edges, then validate
/// every proposal against the model. Unknown endpoints and structurally
/// unsupported proposals are dropped with diagnostics.
pub fn infer_semantic_edges(
    endpoints: &[Endpoint],
    gateway: &Gateway,
) -> Result<(Vec<OdgEdge>, Vec<Diagnostic>), GatewayError> {
    let mut diagnostics = Vec::new();
    let details: Vec<String> = endpoints.iter().map(endpoint_details).collect();
    let mut slot_values = BTreeMap::new();
    slot_values.insert("endpoints".to_string(), details.join("\n\n"));
    let (value, _) = gateway.complete_structured("infer-semantic-edges", &slot_values, "edges")?;

    let by_label: BTreeMap<String, &Endpoint> =
        endpoints.iter().map(|e| (e.label(), e)).collect();

    let mut edges: Vec<OdgEdge> = Vec::new();
    for item in value.as_array().into_iter().flatten() {
        let src_label = item["src"].as_str().unwrap_or_default();
        let dst_label = item["dst"].as_str().unwrap_or_default();
        let relation_name = item["relation"].as_str().unwrap_or_default();
        let evidence = item["evidence"].as_str().unwrap_or_default().to_string();

        let (Some(src), Some(dst)) = (by_label.get(src_label), by_label.get(dst_label)) else {
            diagnostics.push(Diagnostic::new(
                "EDGE_UNKNOWN_ENDPOINT",
                format!("proposed edge '{src_label}' -> '{dst_label}' names unknown endpoints"),
            ));
            continue;
        };
        let Some(relation) = OdgRelation::parse(relation_name) else {
            diagnostics.push(Diagnostic::new(
                "EDGE_RELATION_UNKNOWN",
                format!("proposed relation '{relation_name}' dropped"),
            ));
            continue;
        };
        let structurally_ok = match relation {
            OdgRelation::ProducerConsumer => {
                !src.response_schema.is_empty()
                    && dst.parameters.iter().any(|p| mentions_word(&evidence, &p.name))
            }
            OdgRelation::Database => {
                has_db_on(src, &evidence, true) && has_db_on(dst, &evidence, false)
            }
            OdgRelation::Resource => false, // resource edges come from path analysis only
        };
        if !structurally_ok {
            diagnostics.push(Diagnostic::new(
                "EDGE_UNSUPPORTED",
                format!(
                    "proposed {relation_name} edge {src_label} -> {dst_label} fails structural validation"
                ),
            ));
            continue;
        }
        if src.endpoint_id == dst.endpoint_id {
            diagnostics.push(Diagnostic::new(
                "EDGE_SELF_LOOP",
                format!("self-loop proposal on {src_label} dropped"),
            ));
            continue;
        }
        let duplicate = edges.iter().any(|e| {
            e.src == src.endpoint_id && e.dst == dst.endpoint_id && e.relation == relation
        });
        if !duplicate {
            edges.push(OdgEdge {
                src: src.endpoint_id.clone(),
                dst: dst.endpoint_id.clone(),
                relation,
                evidence,
            });
        }
    }
    Ok((edges, diagnostics))
}

fn mentions_word(text: &str, word: &str) -> bool {
    text.to_lowercase().contains(&word.to_lowercase())
}

fn has_db_on(e: &Endpoint, entity: &str, write: bool) -> bool {
    e.db_ops.iter().any(|op| {
        let matches_dir = if write {
            op.crud.is_write()
        } else {
            op.crud == CrudKind::Read
        };
        let site = format!("{} {}", op.enclosing_class, op.method_signature);
        matches_dir && mentions_word(&site, entity)
    })
}

/// Generate a functional summary per endpoint. An empty gateway response
/// falls back to a `VERB /path` summary and is flagged.
pub fn summarize_endpoints(
    endpoints: &[Endpoint],
    gateway: &Gateway,
) -> Result<(BTreeMap<EndpointId, String>, Vec<Diagnostic>), GatewayError> {
    let mut summaries = BTreeMap::new();
    let mut diagnostics = Vec::new();
    for e in endpoints {
        let mut slot_values = BTreeMap::new();
        slot_values.insert("endpoint".to_string(), e.label());
        slot_values.insert("details".to_string(), endpoint_details(e));
        let exchange = gateway.complete("summarize-endpoint", &slot_values)?;
        let summary = exchange.response.trim().to_string();
        if summary.is_empty() {
            diagnostics.push(
                Diagnostic::new(
                    "SUMMARY_FALLBACK",
                    format!("empty summary for {}; synthesized from verb and path", e.label()),
                )
                .with_subject(e.endpoint_id.to_string()),
            );
            summaries.insert(e.endpoint_id.clone(), e.label());
        } else {
            summaries.insert(e.endpoint_id.clone(), summary);
        }
    }
    Ok((summaries, diagnostics))
}

/// Build the full graph: resource edges, semantic edges, summaries.
pub fn build_graph(
    endpoints: &[Endpoint],
    gateway: &Gateway,
) -> Result<(OperationDependencyGraph, Vec<Diagnostic>), OdgError> {
    let mut graph = OperationDependencyGraph::from_endpoints(endpoints);
    let mut diagnostics = Vec::new();

    for edge in infer_resource_edges(endpoints) {
        graph.add_edge(edge)?;
    }
    let (semantic, diags) =
        infer_semantic_edges(endpoints, gateway).map_err(|e| OdgError::Document(e.to_string()))?;
    diagnostics.extend(diags);
    for edge in semantic {
        match graph.add_edge(edge) {
            Ok(()) | Err(OdgError::DuplicateEdge { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let (summaries, diags) =
        summarize_endpoints(endpoints, gateway).map_err(|e| OdgError::Document(e.to_string()))?;
    diagnostics.extend(diags);
    for (id, summary) in summaries {
        if let Some(node) = graph.nodes.get_mut(&id) {
            node.summary = summary;
        }
    }
    Ok((graph, diagnostics))
}
