//! The repair and coverage-augmentation agents: plan, act (via the six
//! tools), and reflect, iterating to a hard upper bound.

use super::pipeline::PipelineCtx;
use super::{apply_tool, EndpointGenError, ToolInvocation};
use crate::agent::{
    clamp_score, coverage_score, parse_plan, repair_score, AgentGoal, AgentStep, ExecutedRequest,
    StepOutcome,
};
use crate::coverage::{delta as coverage_delta, LineKey, ReachabilityScope};
use crate::gateway::ProviderMode;
use crate::harness::{HttpResponseRecord, RequestOrigin, ResponseClass};
use crate::model::{Endpoint, EndpointId};
use crate::runlog::RunRecord;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Loop bounds for both agents. The default upper bound is 5 iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub max_iterations: u32,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self { max_iterations: 5 }
    }
}

/// State of one agent loop over one endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub goal: AgentGoal,
    pub endpoint_id: EndpointId,
    pub iteration: u32,
    pub max_iterations: u32,
    pub history: Vec<AgentStep<ToolInvocation>>,
    pub open_context: Vec<String>,
    pub succeeded: bool,
}

impl AgentState {
    fn new(goal: AgentGoal, endpoint_id: EndpointId, config: AgentConfig) -> Self {
        Self {
            goal,
            endpoint_id,
            iteration: 0,
            max_iterations: config.max_iterations,
            history: Vec::new(),
            open_context: Vec::new(),
            succeeded: false,
        }
    }

    fn history_text(&self) -> String {
        if self.history.is_empty() {
            return "(none)".to_string();
        }
        self.history
            .iter()
            .enumerate()
            .map(|(i, step)| {
                let tools: Vec<&str> = step
                    .chosen_actions
                    .iter()
                    .map(|a| a.tool.as_str())
                    .collect();
                format!(
                    "iteration {}: tools {:?}, score {:.2}, {}",
                    i + 1,
                    tools,
                    step.reflection_score,
                    step.reflection_comment
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn slots(pairs: &[(&str, String)]) -> std::collections::BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

/// Run the planned actions: execute tools, run every produced request, and
/// fold context gains into the state.
fn act(
    ctx: &mut PipelineCtx,
    run_endpoint: &mut Endpoint,
    state: &mut AgentState,
    plan_actions: &[(String, serde_json::Value)],
    origin: RequestOrigin,
) -> Result<(Vec<ToolInvocation>, Vec<ExecutedRequest>), EndpointGenError> {
    let mut invocations = Vec::new();
    let mut executed = Vec::new();
    for (tool_name, arguments) in plan_actions {
        let invocation = match apply_tool(
            tool_name,
            arguments,
            run_endpoint,
            &ctx.all_endpoints,
            &state.open_context,
            origin,
            ctx.gateway,
            ctx.units,
        ) {
            Ok(inv) => inv,
            Err(
                e @ (EndpointGenError::InvalidToolArgs(_)
                | EndpointGenError::Ingest(crate::ingest::IngestError::UnknownCodeQuery(_))
                | EndpointGenError::Ingest(crate::ingest::IngestError::MethodNotFound(_))),
            ) => {
                ctx.log.push(RunRecord::Note {
                    text: format!("tool '{tool_name}' skipped: {e}"),
                });
                continue;
            }
            Err(other) => return Err(other),
        };
        for request in &invocation.result.requests {
            if let Some(record) = ctx.execute_logged(request)? {
                executed.push(record);
            }
        }
        state
            .open_context
            .extend(invocation.result.context.iter().cloned());
        invocations.push(invocation);
    }
    Ok((invocations, executed))
}

fn live_reflection(
    ctx: &PipelineCtx,
    template: &str,
    slot_values: &std::collections::BTreeMap<String, String>,
) -> Result<Option<(f64, String)>, EndpointGenError> {
    if ctx.gateway.mode() != ProviderMode::Live {
        return Ok(None);
    }
    let (value, _) = ctx
        .gateway
        .complete_structured(template, slot_values, "reflection")?;
    let score = clamp_score(value["score"].as_f64().unwrap_or(0.0));
    let comment = value["comment"].as_str().unwrap_or_default().to_string();
    Ok(Some((score, comment)))
}

/// Fix an invalid request: plan with the summarized server complaint,
/// execute up to two tools, and reflect by comparing the summarized
/// responses before and after. Stops on the first valid response or at the
/// iteration bound.
pub fn repair_agent(
    ctx: &mut PipelineCtx,
    run_endpoint: &mut Endpoint,
    failed: &HttpResponseRecord,
    config: AgentConfig,
) -> Result<AgentState, EndpointGenError> {
    assert_eq!(
        crate::harness::classify(failed),
        ResponseClass::Invalid,
        "repair agent precondition: the failed response must classify as invalid"
    );
    let mut state = AgentState::new(AgentGoal::Repair, run_endpoint.endpoint_id.clone(), config);
    let mut current_status = failed.status;
    let mut current_summary = failed
        .summary
        .clone()
        .unwrap_or_else(|| format!("HTTP {}", failed.status));
    let request_line = format!(
        "{} {}",
        failed.request.method,
        failed.request.path_and_query()
    );

    while state.iteration < state.max_iterations {
        let slot_values = slots(&[
            ("endpoint", run_endpoint.label()),
            ("request", request_line.clone()),
            ("error_summary", current_summary.clone()),
            ("history", state.history_text()),
            ("iteration", (state.iteration + 1).to_string()),
        ]);
        let (plan_value, _) = ctx
            .gateway
            .complete_structured("repair-plan", &slot_values, "plan")?;
        let (plan, diags) = parse_plan(&plan_value);
        for d in diags {
            ctx.log.push(RunRecord::Note {
                text: format!("{}: {}", d.code, d.message),
            });
        }

        let (invocations, executed) = act(
            ctx,
            run_endpoint,
            &mut state,
            &plan.actions,
            RequestOrigin::Repair,
        )?;
        let context_gained: Vec<String> = invocations
            .iter()
            .flat_map(|i| i.result.context.iter().cloned())
            .collect();
        let outcome = StepOutcome {
            requests: executed,
            context_gained,
            coverage_delta: None,
        };

        let (score, comment) = match live_reflection(
            ctx,
            "reflect-repair",
            &slots(&[
                ("endpoint", run_endpoint.label()),
                ("before", current_summary.clone()),
                (
                    "after",
                    outcome
                        .requests
                        .iter()
                        .filter_map(|r| r.summary.clone())
                        .next()
                        .unwrap_or_else(|| "no response".to_string()),
                ),
            ]),
        )? {
            Some(live) => live,
            None => repair_score(current_status, &current_summary, &outcome),
        };

        let step = AgentStep {
            chosen_actions: invocations,
            rationale: plan.rationale,
            reflection_score: clamp_score(score),
            reflection_comment: comment,
            outcome,
        };
        ctx.log.push(RunRecord::AgentStep {
            endpoint_id: state.endpoint_id.clone(),
            goal: AgentGoal::Repair,
            iteration: state.iteration,
            step: step.clone(),
        });
        let succeeded = step
            .outcome
            .requests
            .iter()
            .any(|r| r.class == ResponseClass::Valid);
        if let Some(best) = step
            .outcome
            .requests
            .iter()
            .find(|r| r.class != ResponseClass::Transport)
        {
            current_status = best.status;
            if let Some(summary) = &best.summary {
                current_summary = summary.clone();
            }
        }
        state.history.push(step);
        state.iteration += 1;
        if succeeded {
            state.succeeded = true;
            break;
        }
    }

    ctx.log.push(RunRecord::AgentFinished {
        endpoint_id: state.endpoint_id.clone(),
        goal: AgentGoal::Repair,
        iterations: state.iteration,
        succeeded: state.succeeded,
    });
    Ok(state)
}

fn format_lines(lines: &BTreeSet<LineKey>) -> String {
    if lines.is_empty() {
        return "(none)".to_string();
    }
    lines
        .iter()
        .map(|(f, l)| format!("{f}:{l}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Generate requests targeting uncovered reachable code. Database
/// interaction lines are listed first in the planning context; uncovered
/// branches are presented as secondary goals. Stops when the scope is fully
/// covered or at the iteration bound.
pub fn coverage_agent(
    ctx: &mut PipelineCtx,
    run_endpoint: &mut Endpoint,
    scope: &ReachabilityScope,
    config: AgentConfig,
) -> Result<AgentState, EndpointGenError> {
    let mut state = AgentState::new(AgentGoal::Coverage, run_endpoint.endpoint_id.clone(), config);

    let snapshot = ctx.poller_snapshot()?;
    let mut uncovered: BTreeSet<LineKey> = scope
        .reachable_lines
        .difference(&snapshot.covered_lines)
        .cloned()
        .collect();
    assert!(
        !uncovered.is_empty(),
        "coverage agent precondition: uncovered reachable lines must remain"
    );

    while state.iteration < state.max_iterations && !uncovered.is_empty() {
        // Database interaction points first, then the rest of the scope.
        let db_first: BTreeSet<LineKey> =
            scope.db_lines.intersection(&uncovered).cloned().collect();
        let others: BTreeSet<LineKey> = uncovered.difference(&db_first).cloned().collect();
        let mut listing = String::new();
        if !db_first.is_empty() {
            listing.push_str(&format!("database: {}\n", format_lines(&db_first)));
        }
        listing.push_str(&format_lines(&others));
        let uncovered_branches: BTreeSet<String> = scope
            .reachable_branches
            .iter()
            .filter(|b| !snapshot.covered_branches.contains(*b))
            .map(|(f, l, i)| format!("{f}:{l}#{i}"))
            .collect();

        let slot_values = slots(&[
            ("endpoint", run_endpoint.label()),
            ("uncovered_lines", listing),
            (
                "uncovered_branches",
                if uncovered_branches.is_empty() {
                    "(none)".to_string()
                } else {
                    uncovered_branches.into_iter().collect::<Vec<_>>().join(", ")
                },
            ),
            ("history", state.history_text()),
            ("iteration", (state.iteration + 1).to_string()),
        ]);
        let (plan_value, _) = ctx
            .gateway
            .complete_structured("coverage-plan", &slot_values, "plan")?;
        let (plan, diags) = parse_plan(&plan_value);
        for d in diags {
            ctx.log.push(RunRecord::Note {
                text: format!("{}: {}", d.code, d.message),
            });
        }

        let before = ctx.poller_snapshot()?;
        let (invocations, executed) = act(
            ctx,
            run_endpoint,
            &mut state,
            &plan.actions,
            RequestOrigin::Coverage,
        )?;
        let after = ctx.poller_snapshot()?;
        let step_delta = coverage_delta(&before, &after);

        let context_gained: Vec<String> = invocations
            .iter()
            .flat_map(|i| i.result.context.iter().cloned())
            .collect();
        let outcome = StepOutcome {
            requests: executed,
            context_gained,
            coverage_delta: Some(step_delta.clone()),
        };

        let (score, comment) = match live_reflection(
            ctx,
            "reflect-coverage",
            &slots(&[
                ("endpoint", run_endpoint.label()),
                ("newly_covered", format_lines(&step_delta.new_lines)),
                ("remaining", format_lines(&uncovered)),
            ]),
        )? {
            Some(live) => live,
            None => coverage_score(uncovered.len(), &outcome),
        };

        let step = AgentStep {
            chosen_actions: invocations,
            rationale: plan.rationale,
            reflection_score: clamp_score(score),
            reflection_comment: comment,
            outcome,
        };
        ctx.log.push(RunRecord::AgentStep {
            endpoint_id: state.endpoint_id.clone(),
            goal: AgentGoal::Coverage,
            iteration: state.iteration,
            step: step.clone(),
        });
        state.history.push(step);
        state.iteration += 1;

        uncovered = scope
            .reachable_lines
            .difference(&after.covered_lines)
            .cloned()
            .collect();
    }

    state.succeeded = uncovered.is_empty();
    ctx.log.push(RunRecord::AgentFinished {
        endpoint_id: state.endpoint_id.clone(),
        goal: AgentGoal::Coverage,
        iterations: state.iteration,
        succeeded: state.succeeded,
    });
    Ok(state)
}
