//! Shared plan-act-reflect machinery for the repair, coverage-augmentation,
//! and scenario agents: step records, plan parsing with the two-action cap,
//! and the deterministic reflection rubric.

use crate::coverage::CoverageDelta;
use crate::diag::Diagnostic;
use crate::harness::{HttpRequestSpec, ResponseClass};
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Hard cap on actions per iteration.
pub const MAX_ACTIONS_PER_STEP: usize = 2;

/// What the agents optimize for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentGoal {
    Repair,
    Coverage,
}

/// One executed request inside a step outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutedRequest {
    pub request: HttpRequestSpec,
    pub status: u16,
    pub class: ResponseClass,
    pub summary: Option<String>,
}

/// Everything one action execution produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub requests: Vec<ExecutedRequest>,
    pub context_gained: Vec<String>,
    /// Coverage gained during this step (coverage agent only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage_delta: Option<CoverageDelta>,
}

/// One plan-act-reflect iteration. Invariants: 1 or 2 chosen actions, score
/// in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentStep<A> {
    pub chosen_actions: Vec<A>,
    pub rationale: String,
    pub reflection_score: f64,
    pub reflection_comment: String,
    pub outcome: StepOutcome,
}

/// A parsed plan: tool names with raw arguments, capped at two actions.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedActions {
    pub actions: Vec<(String, Value)>,
    pub rationale: String,
    pub truncated: bool,
}

/// Parse a `plan` structured value. Proposals beyond the cap keep the first
/// two in proposal order; the truncation is logged by the caller.
pub fn parse_plan(value: &Value) -> (PlannedActions, Vec<Diagnostic>) {
    let mut diagnostics = Vec::new();
    let rationale = value["rationale"].as_str().unwrap_or_default().to_string();
    let mut actions: Vec<(String, Value)> = value["actions"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|a| {
            a["tool"]
                .as_str()
                .map(|tool| (tool.to_string(), a.get("arguments").cloned().unwrap_or(Value::Null)))
        })
        .collect();
    let truncated = actions.len() > MAX_ACTIONS_PER_STEP;
    if truncated {
        diagnostics.push(Diagnostic::new(
            "PLAN_TRUNCATED",
            format!(
                "planner proposed {} actions; keeping the first {MAX_ACTIONS_PER_STEP}",
                actions.len()
            ),
        ));
        actions.truncate(MAX_ACTIONS_PER_STEP);
    }
    (
        PlannedActions {
            actions,
            rationale,
            truncated,
        },
        diagnostics,
    )
}

pub fn clamp_score(score: f64) -> f64 {
    if score.is_nan() {
        0.0
    } else {
        score.clamp(0.0, 1.0)
    }
}

/// Deterministic repair-reflection rubric:
/// - any response reached the valid class: 1.0
/// - the failure status changed (a different failure mode): 0.6
/// - same status but a new error summary: 0.3
/// - context-only step that gained context: 0.5
/// - otherwise: 0.0
pub fn repair_score(
    before_status: u16,
    before_summary: &str,
    outcome: &StepOutcome,
) -> (f64, String) {
    if outcome
        .requests
        .iter()
        .any(|r| r.class == ResponseClass::Valid)
    {
        return (1.0, "request now succeeds".to_string());
    }
    let best = outcome.requests.iter().find(|r| r.class != ResponseClass::Transport);
    if let Some(best) = best {
        if best.status != before_status {
            return (
                0.6,
                format!("failure status changed from {} to {}", before_status, best.status),
            );
        }
        let after_summary = best.summary.as_deref().unwrap_or("");
        if !after_summary.is_empty() && after_summary != before_summary {
            return (0.3, "same status but a new error summary".to_string());
        }
        return (0.0, "no observable change".to_string());
    }
    if !outcome.context_gained.is_empty()
        && outcome.context_gained.iter().any(|c| !c.is_empty())
    {
        return (0.5, "gained code context for the next iteration".to_string());
    }
    (0.0, "action produced neither requests nor context".to_string())
}

/// Deterministic coverage-reflection rubric: fraction of the previously
/// uncovered scope lines that the step newly covered; context-only steps
/// score 0.5 when they gained context.
pub fn coverage_score(uncovered_before: usize, outcome: &StepOutcome) -> (f64, String) {
    let newly = outcome
        .coverage_delta
        .as_ref()
        .map(|d| d.new_lines.len())
        .unwrap_or(0);
    if newly > 0 && uncovered_before > 0 {
        let score = clamp_score(newly as f64 / uncovered_before as f64);
        return (
            score,
            format!("covered {newly} of {uncovered_before} remaining lines"),
        );
    }
    if outcome.requests.is_empty()
        && outcome.context_gained.iter().any(|c| !c.is_empty())
    {
        return (0.5, "gained code context for the next iteration".to_string());
    }
    (0.0, "no new coverage".to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn executed(status: u16, summary: &str) -> ExecutedRequest {
        ExecutedRequest {
            request: HttpRequestSpec {
                endpoint_id: crate::model::EndpointId::from_raw("x"),
                method: crate::model::HttpMethod::Get,
                resolved_path: "/x".into(),
                query: vec![],
                headers: vec![],
                body: None,
                origin: crate::harness::RequestOrigin::Repair,
            },
            status,
            class: crate::harness::classify_status(status),
            summary: (!summary.is_empty()).then(|| summary.to_string()),
        }
    }

    #[test]
    fn plan_cap_keeps_first_two_in_order() {
        let value = json!({
            "rationale": "try several things",
            "actions": [
                {"tool": "modify_param_value", "arguments": {"parameter": "type"}},
                {"tool": "generate_requests"},
                {"tool": "modify_ipd"},
            ],
        });
        let (plan, diags) = parse_plan(&value);
        assert_eq!(plan.actions.len(), 2);
        assert_eq!(plan.actions[0].0, "modify_param_value");
        assert_eq!(plan.actions[1].0, "generate_requests");
        assert!(plan.truncated);
        assert_eq!(diags[0].code, "PLAN_TRUNCATED");
    }

    #[test]
    fn repair_rubric_tiers() {
        let success = StepOutcome {
            requests: vec![executed(200, "")],
            ..Default::default()
        };
        assert_eq!(repair_score(400, "bad enum", &success).0, 1.0);

        let status_change = StepOutcome {
            requests: vec![executed(404, "not found")],
            ..Default::default()
        };
        assert_eq!(repair_score(400, "bad enum", &status_change).0, 0.6);

        let new_summary = StepOutcome {
            requests: vec![executed(400, "missing telephone")],
            ..Default::default()
        };
        assert_eq!(repair_score(400, "bad enum", &new_summary).0, 0.3);

        let no_change = StepOutcome {
            requests: vec![executed(400, "bad enum")],
            ..Default::default()
        };
        assert_eq!(repair_score(400, "bad enum", &no_change).0, 0.0);

        let context_only = StepOutcome {
            context_gained: vec!["// body".to_string()],
            ..Default::default()
        };
        assert_eq!(repair_score(400, "bad enum", &context_only).0, 0.5);
    }

    #[test]
    fn coverage_rubric_is_proportional() {
        let mut delta = CoverageDelta::default();
        delta.new_lines.insert(("f".to_string(), 1));
        delta.new_lines.insert(("f".to_string(), 2));
        let outcome = StepOutcome {
            coverage_delta: Some(delta),
            ..Default::default()
        };
        let (score, _) = coverage_score(4, &outcome);
        assert!((score - 0.5).abs() < 1e-12);
        assert_eq!(coverage_score(0, &StepOutcome::default()).0, 0.0);
    }

    #[test]
    fn scores_always_clamped() {
        assert_eq!(clamp_score(1.7), 1.0);
        assert_eq!(clamp_score(-0.2), 0.0);
        assert_eq!(clamp_score(f64::NAN), 0.0);
    }
}
