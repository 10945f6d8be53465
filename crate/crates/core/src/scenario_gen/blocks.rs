//! Scenario decomposition into atomic blocks.
//!
//! Block structure is derived from the scenario itself (a clause with N
//! endpoint references yields N blocks, in clause order then label order
//! within the clause); the gateway supplies task text and link metadata.
//! When the gateway's decomposition does not line up with the scenario's
//! endpoint sequence, the structural decomposition wins and a diagnostic is
//! recorded.

use super::{AtomicBlock, ScenarioError, TestScenario};
use crate::diag::Diagnostic;
use crate::gateway::{Gateway, GatewayError};
use crate::model::EndpointId;
use crate::odg::OperationDependencyGraph;
use std::collections::BTreeMap;

/// Result of decomposing one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub blocks: Vec<AtomicBlock>,
    /// Clause texts with no executable endpoint, kept as assertion-only
    /// markers for assembly.
    pub assertion_markers: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
}

/// The structural skeleton: (clause text, endpoint) pairs in order, plus
/// assertion-only clause texts.
fn skeleton(scenario: &TestScenario) -> (Vec<(String, EndpointId)>, Vec<String>) {
    let mut steps = Vec::new();
    let mut markers = Vec::new();
    for (clause, _kind) in scenario.clauses_in_order() {
        if clause.endpoints.is_empty() {
            markers.push(clause.text.clone());
            continue;
        }
        for (i, id) in clause.endpoints.iter().enumerate() {
            let text = if clause.endpoints.len() == 1 {
                clause.text.clone()
            } else {
                format!("{} (step {})", clause.text, i + 1)
            };
            steps.push((text, id.clone()));
        }
    }
    (steps, markers)
}

/// Decompose a scenario into ordered atomic blocks, one endpoint each.
pub fn decompose(
    scenario: &TestScenario,
    graph: &OperationDependencyGraph,
    gateway: &Gateway,
) -> Result<Decomposition, ScenarioError> {
    let (structure, assertion_markers) = skeleton(scenario);
    let mut diagnostics = Vec::new();

    let labels: Vec<String> = graph
        .nodes
        .values()
        .map(|n| n.endpoint.label())
        .collect();
    let mut slots = BTreeMap::new();
    slots.insert("scenario".to_string(), scenario.to_gherkin());
    slots.insert("endpoints".to_string(), labels.join("\n"));

    // The gateway proposes tasks and links; validate its endpoint sequence
    // against the structural skeleton.
    let proposed: Option<Vec<(String, EndpointId, Vec<String>)>> =
        match gateway.complete_structured("decompose-scenario", &slots, "blocks") {
            Ok((value, _)) => {
                let mut out = Vec::new();
                let mut ok = true;
                for item in value.as_array().into_iter().flatten() {
                    let task = item["task"].as_str().unwrap_or_default().to_string();
                    let label = item["endpoint"].as_str().unwrap_or_default();
                    let links: Vec<String> = item["links"]
                        .as_array()
                        .into_iter()
                        .flatten()
                        .filter_map(|v| v.as_str().map(String::from))
                        .collect();
                    match graph.resolve_label(label) {
                        Some(id) => out.push((task, id, links)),
                        None => {
                            diagnostics.push(Diagnostic::new(
                                "BLOCK_UNKNOWN_ENDPOINT",
                                format!("decomposition names unknown endpoint '{label}'"),
                            ));
                            ok = false;
                        }
                    }
                }
                (ok && !out.is_empty()).then_some(out)
            }
            Err(GatewayError::NoBlock | GatewayError::SchemaMismatch(_)) => {
                diagnostics.push(Diagnostic::new(
                    "DECOMPOSITION_UNPARSEABLE",
                    "gateway decomposition unparseable; using structural decomposition",
                ));
                None
            }
            Err(e) => return Err(e.into()),
        };

    let accepted = proposed.filter(|p| {
        let proposed_seq: Vec<&EndpointId> = p.iter().map(|(_, id, _)| id).collect();
        let structural_seq: Vec<&EndpointId> = structure.iter().map(|(_, id)| id).collect();
        if proposed_seq == structural_seq {
            true
        } else {
            diagnostics.push(Diagnostic::new(
                "DECOMPOSITION_REORDERED",
                "gateway decomposition does not match the scenario's endpoint order; using structural decomposition",
            ));
            false
        }
    });

    let blocks: Vec<AtomicBlock> = match accepted {
        Some(proposal) => proposal
            .into_iter()
            .enumerate()
            .map(|(i, (task, id, links))| {
                let mut block = AtomicBlock::new(format!("b{}", i + 1), task, id);
                block.links = links;
                block
            })
            .collect(),
        None => structure
            .into_iter()
            .enumerate()
            .map(|(i, (task, id))| AtomicBlock::new(format!("b{}", i + 1), task, id))
            .collect(),
    };

    Ok(Decomposition {
        blocks,
        assertion_markers,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{StubRule, StubScript, TemplateCatalog};
    use crate::model::{Endpoint, HttpMethod};
    use crate::scenario_gen::parse_gherkin;

    fn graph() -> OperationDependencyGraph {
        OperationDependencyGraph::from_endpoints(&[
            Endpoint::new("c.Vets", "list()", "/vets", HttpMethod::Get),
            Endpoint::new("c.Visits", "create()", "/visits/new", HttpMethod::Post),
            Endpoint::new("c.Visits", "list()", "/visits", HttpMethod::Get),
        ])
    }

    fn stub(rules: Vec<StubRule>) -> Gateway {
        Gateway::stub(TemplateCatalog::bundled().unwrap(), StubScript::from_rules(rules))
    }

    #[test]
    fn multi_endpoint_clause_splits_into_one_block_per_endpoint() {
        let g = graph();
        let text = "Scenario: visit flow\n  When the visit is arranged [GET /vets] [GET /visits] [POST /visits/new]\n";
        let (scenarios, _) = parse_gherkin(text, &g);
        let gw = stub(vec![StubRule::new("decompose-scenario", "no json here")]);
        let d = decompose(&scenarios[0], &g, &gw).unwrap();
        assert_eq!(d.blocks.len(), 3);
        for block in &d.blocks {
            assert!(g.endpoint(&block.endpoint_id).is_some());
        }
        // Structural order: clause label order.
        assert_eq!(g.endpoint(&d.blocks[0].endpoint_id).unwrap().label(), "GET /vets");
        assert_eq!(g.endpoint(&d.blocks[2].endpoint_id).unwrap().label(), "POST /visits/new");
    }

    #[test]
    fn gateway_tasks_adopted_when_sequence_matches() {
        let g = graph();
        let text = "Scenario: simple\n  When the roster is read [GET /vets]\n";
        let (scenarios, _) = parse_gherkin(text, &g);
        let gw = stub(vec![StubRule::new(
            "decompose-scenario",
            "```json\n[{\"task\": \"fetch the vet roster\", \"endpoint\": \"GET /vets\", \"links\": []}]\n```",
        )]);
        let d = decompose(&scenarios[0], &g, &gw).unwrap();
        assert_eq!(d.blocks.len(), 1);
        assert_eq!(d.blocks[0].task, "fetch the vet roster");
    }

    #[test]
    fn assertion_only_clause_becomes_marker_not_block() {
        let g = graph();
        let text = "Scenario: check\n  When the roster is read [GET /vets]\n  Then the response lists two vets\n";
        let (scenarios, _) = parse_gherkin(text, &g);
        let gw = stub(vec![StubRule::new("decompose-scenario", "prose")]);
        let d = decompose(&scenarios[0], &g, &gw).unwrap();
        assert_eq!(d.blocks.len(), 1);
        assert_eq!(d.assertion_markers, vec!["the response lists two vets".to_string()]);
    }

    #[test]
    fn mismatched_gateway_sequence_falls_back_to_structure() {
        let g = graph();
        let text = "Scenario: s\n  When a [GET /vets]\n  And b [GET /visits]\n";
        let (scenarios, _) = parse_gherkin(text, &g);
        let gw = stub(vec![StubRule::new(
            "decompose-scenario",
            "```json\n[{\"task\": \"swap\", \"endpoint\": \"GET /visits\"}, {\"task\": \"other\", \"endpoint\": \"GET /vets\"}]\n```",
        )]);
        let d = decompose(&scenarios[0], &g, &gw).unwrap();
        assert_eq!(g.endpoint(&d.blocks[0].endpoint_id).unwrap().label(), "GET /vets");
        assert!(d
            .diagnostics
            .iter()
            .any(|x| x.code == "DECOMPOSITION_REORDERED"));
    }
}
