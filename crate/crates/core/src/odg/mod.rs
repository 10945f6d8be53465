//! The operation dependency graph: endpoints as nodes, typed dependency
//! edges (resource, producer-consumer, database), and a functional summary
//! per node. The graph orders test generation: producers run before
//! consumers.

mod build;
mod layers;

pub use build::{build_graph, infer_resource_edges, infer_semantic_edges, summarize_endpoints};
pub use layers::topological_layers;

use crate::model::{Endpoint, EndpointId};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdgError {
    #[error("edge references unknown endpoint '{0}'")]
    UnknownEndpoint(String),
    #[error("self-loop edge on '{0}'")]
    SelfLoop(String),
    #[error("duplicate edge {src} -> {dst} ({relation:?})")]
    DuplicateEdge {
        src: String,
        dst: String,
        relation: OdgRelation,
    },
    #[error("edge without evidence: {src} -> {dst}")]
    EmptyEvidence { src: String, dst: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("graph document: {0}")]
    Document(String),
}

/// The three dependency relation types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OdgRelation {
    Resource,
    ProducerConsumer,
    Database,
}

impl OdgRelation {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "resource" => Some(OdgRelation::Resource),
            "producer_consumer" => Some(OdgRelation::ProducerConsumer),
            "database" => Some(OdgRelation::Database),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdgNode {
    pub endpoint_id: EndpointId,
    pub endpoint: Endpoint,
    /// Functional summary; non-empty after the summarization pass.
    #[serde(default)]
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OdgEdge {
    pub src: EndpointId,
    pub dst: EndpointId,
    pub relation: OdgRelation,
    pub evidence: String,
}

/// Directed graph over endpoints. Immutable once built; shareable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OperationDependencyGraph {
    pub nodes: BTreeMap<EndpointId, OdgNode>,
    pub edges: Vec<OdgEdge>,
}

impl OperationDependencyGraph {
    pub fn from_endpoints(endpoints: &[Endpoint]) -> Self {
        let mut graph = Self::default();
        for e in endpoints {
            graph.nodes.insert(
                e.endpoint_id.clone(),
                OdgNode {
                    endpoint_id: e.endpoint_id.clone(),
                    endpoint: e.clone(),
                    summary: String::new(),
                },
            );
        }
        graph
    }

    /// Add one edge, enforcing the graph invariants.
    pub fn add_edge(&mut self, edge: OdgEdge) -> Result<(), OdgError> {
        if !self.nodes.contains_key(&edge.src) {
            return Err(OdgError::UnknownEndpoint(edge.src.to_string()));
        }
        if !self.nodes.contains_key(&edge.dst) {
            return Err(OdgError::UnknownEndpoint(edge.dst.to_string()));
        }
        if edge.src == edge.dst {
            return Err(OdgError::SelfLoop(edge.src.to_string()));
        }
        if edge.evidence.is_empty() {
            return Err(OdgError::EmptyEvidence {
                src: edge.src.to_string(),
                dst: edge.dst.to_string(),
            });
        }
        let duplicate = self
            .edges
            .iter()
            .any(|e| e.src == edge.src && e.dst == edge.dst && e.relation == edge.relation);
        if duplicate {
            return Err(OdgError::DuplicateEdge {
                src: edge.src.to_string(),
                dst: edge.dst.to_string(),
                relation: edge.relation,
            });
        }
        self.edges.push(edge);
        Ok(())
    }

    pub fn endpoint(&self, id: &EndpointId) -> Option<&Endpoint> {
        self.nodes.get(id).map(|n| &n.endpoint)
    }

    /// Resolve a `VERB /path` label to an endpoint id.
    pub fn resolve_label(&self, label: &str) -> Option<EndpointId> {
        let label = label.trim();
        self.nodes
            .values()
            .find(|n| n.endpoint.label() == label)
            .map(|n| n.endpoint_id.clone())
    }

    pub fn edges_from<'a>(&'a self, id: &'a EndpointId) -> impl Iterator<Item = &'a OdgEdge> + 'a {
        self.edges.iter().filter(move |e| &e.src == id)
    }

    pub fn edges_into<'a>(&'a self, id: &'a EndpointId) -> impl Iterator<Item = &'a OdgEdge> + 'a {
        self.edges.iter().filter(move |e| &e.dst == id)
    }
}

/// Persisted graph document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdgDocument {
    pub schema: String,
    pub application: String,
    pub graph: OperationDependencyGraph,
    #[serde(default)]
    pub diagnostics: Vec<crate::diag::Diagnostic>,
}

impl OdgDocument {
    pub const SCHEMA: &'static str = "odg/1";

    pub fn new(application: impl Into<String>, graph: OperationDependencyGraph) -> Self {
        Self {
            schema: Self::SCHEMA.to_string(),
            application: application.into(),
            graph,
            diagnostics: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), OdgError> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, OdgError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| OdgError::Document(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HttpMethod;

    fn two_node_graph() -> OperationDependencyGraph {
        let a = Endpoint::new("c.A", "list()", "/owners", HttpMethod::Get);
        let b = Endpoint::new("c.B", "create()", "/owners/new", HttpMethod::Post);
        OperationDependencyGraph::from_endpoints(&[a, b])
    }

    #[test]
    fn edge_invariants_enforced() {
        let mut g = two_node_graph();
        let ids: Vec<EndpointId> = g.nodes.keys().cloned().collect();
        let edge = OdgEdge {
            src: ids[0].clone(),
            dst: ids[1].clone(),
            relation: OdgRelation::Resource,
            evidence: "e".into(),
        };
        g.add_edge(edge.clone()).unwrap();
        assert!(matches!(
            g.add_edge(edge.clone()),
            Err(OdgError::DuplicateEdge { .. })
        ));
        let selfloop = OdgEdge {
            src: ids[0].clone(),
            dst: ids[0].clone(),
            relation: OdgRelation::Database,
            evidence: "e".into(),
        };
        assert!(matches!(g.add_edge(selfloop), Err(OdgError::SelfLoop(_))));
        let ghost = OdgEdge {
            src: EndpointId::from_raw("feedfeedfeedfeed"),
            dst: ids[1].clone(),
            relation: OdgRelation::Database,
            evidence: "e".into(),
        };
        assert!(matches!(g.add_edge(ghost), Err(OdgError::UnknownEndpoint(_))));
    }

    #[test]
    fn document_round_trip_is_structural() {
        let g = two_node_graph();
        let doc = OdgDocument::new("clinic", g);
        let back: OdgDocument = serde_json::from_str(&doc.to_json()).unwrap();
        assert_eq!(doc, back);
    }
}
