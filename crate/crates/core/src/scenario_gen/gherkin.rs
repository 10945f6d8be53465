//! The pinned Gherkin-like grammar:
//!
//! ```text
//! Scenario: <name>
//!   Given <text> [VERB /path]...
//!   When <text> [VERB /path]...
//!   And <text> [VERB /path]...     (continues the previous clause kind)
//!   Then <text> [VERB /path]...
//! ```
//!
//! Endpoint references ride in trailing bracketed labels per line; a line
//! may reference several endpoints.

use super::{Clause, ClauseKind, ScenarioError, TestScenario};
use crate::diag::Diagnostic;
use crate::gateway::Gateway;
use crate::odg::OperationDependencyGraph;
use std::collections::BTreeMap;

/// Split a scenario line into its text and trailing `[...]` labels.
fn split_labels(line: &str) -> (String, Vec<String>) {
    let mut labels = Vec::new();
    let mut rest = line.trim_end().to_string();
    while rest.ends_with(']') {
        let Some(open) = rest.rfind('[') else { break };
        labels.push(rest[open + 1..rest.len() - 1].trim().to_string());
        rest = rest[..open].trim_end().to_string();
    }
    labels.reverse();
    (rest, labels)
}

/// Parse Gherkin text against the known endpoints of the graph.
///
/// Unknown endpoint labels are dropped from the clause with a diagnostic;
/// scenarios ending up with no clauses at all are discarded.
pub fn parse_gherkin(
    text: &str,
    graph: &OperationDependencyGraph,
) -> (Vec<TestScenario>, Vec<Diagnostic>) {
    let mut scenarios = Vec::new();
    let mut diagnostics = Vec::new();
    let mut current: Option<TestScenario> = None;
    let mut current_kind: Option<ClauseKind> = None;

    let finish = |scenario: Option<TestScenario>,
                      diagnostics: &mut Vec<Diagnostic>,
                      scenarios: &mut Vec<TestScenario>| {
        if let Some(s) = scenario {
            if s.clause_count() == 0 {
                diagnostics.push(Diagnostic::new(
                    "SCENARIO_EMPTY",
                    format!("scenario '{}' has no clauses; skipped", s.name),
                ));
            } else {
                scenarios.push(s);
            }
        }
    };

    for raw_line in text.lines() {
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix("Scenario:") {
            finish(current.take(), &mut diagnostics, &mut scenarios);
            current = Some(TestScenario {
                name: name.trim().to_string(),
                given: Vec::new(),
                when: Vec::new(),
                then: Vec::new(),
                endpoint_sequence: Vec::new(),
            });
            current_kind = None;
            continue;
        }
        let Some(scenario) = current.as_mut() else {
            diagnostics.push(Diagnostic::new(
                "GHERKIN_LINE_SKIPPED",
                format!("line outside any scenario: {line}"),
            ));
            continue;
        };
        let (kind, text_part) = if let Some(rest) = line.strip_prefix("Given ") {
            (Some(ClauseKind::Given), rest)
        } else if let Some(rest) = line.strip_prefix("When ") {
            (Some(ClauseKind::When), rest)
        } else if let Some(rest) = line.strip_prefix("Then ") {
            (Some(ClauseKind::Then), rest)
        } else if let Some(rest) = line.strip_prefix("And ") {
            (current_kind, rest)
        } else {
            diagnostics.push(Diagnostic::new(
                "GHERKIN_LINE_SKIPPED",
                format!("unrecognized line in scenario '{}': {line}", scenario.name),
            ));
            continue;
        };
        let Some(kind) = kind else {
            diagnostics.push(Diagnostic::new(
                "GHERKIN_LINE_SKIPPED",
                format!("'And' before any clause in scenario '{}'", scenario.name),
            ));
            continue;
        };
        current_kind = Some(kind);

        let (clause_text, labels) = split_labels(text_part);
        let mut endpoints = Vec::new();
        for label in labels {
            match graph.resolve_label(&label) {
                Some(id) => {
                    endpoints.push(id.clone());
                    scenario.endpoint_sequence.push(id);
                }
                None => diagnostics.push(Diagnostic::new(
                    "SCENARIO_UNKNOWN_ENDPOINT",
                    format!(
                        "scenario '{}' references unknown endpoint '{label}'; reference dropped",
                        scenario.name
                    ),
                )),
            }
        }
        let clause = Clause {
            text: clause_text,
            endpoints,
        };
        match kind {
            ClauseKind::Given => scenario.given.push(clause),
            ClauseKind::When => scenario.when.push(clause),
            ClauseKind::Then => scenario.then.push(clause),
        }
    }
    finish(current.take(), &mut diagnostics, &mut scenarios);
    (scenarios, diagnostics)
}

/// Ask the gateway for scenarios over the summarized graph and parse them.
/// `NO_SCENARIOS` when nothing usable comes back (the expected outcome for
/// single-endpoint applications).
pub fn extract_scenarios(
    graph: &OperationDependencyGraph,
    gateway: &Gateway,
    count: usize,
) -> Result<(Vec<TestScenario>, Vec<Diagnostic>), ScenarioError> {
    let summary: Vec<String> = graph
        .nodes
        .values()
        .map(|n| format!("{} - {}", n.endpoint.label(), n.summary))
        .collect();
    let ordering: Vec<String> = graph
        .edges
        .iter()
        .map(|e| {
            format!(
                "{} before {} ({:?})",
                graph.nodes[&e.src].endpoint.label(),
                graph.nodes[&e.dst].endpoint.label(),
                e.relation
            )
        })
        .collect();
    let mut slots = BTreeMap::new();
    slots.insert(
        "endpoints_summary".to_string(),
        format!("{}\n\nOrdering:\n{}", summary.join("\n"), ordering.join("\n")),
    );
    slots.insert("count".to_string(), count.to_string());
    let exchange = gateway.complete("extract-scenarios", &slots)?;
    let (mut scenarios, diagnostics) = parse_gherkin(&exchange.response, graph);
    scenarios.truncate(count);
    if scenarios.is_empty() {
        return Err(ScenarioError::NoScenarios);
    }
    Ok((scenarios, diagnostics))
}
