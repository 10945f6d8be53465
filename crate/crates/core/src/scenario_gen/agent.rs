//! The test-generation agent: reifies each atomic block into concrete
//! requests, carrying the outcomes of preceding blocks, and rewriting later
//! block descriptions when discoveries require it.

use super::{AtomicBlock, BlockStatus, ScenarioError, ScenarioToolInvocation, TestScenario};
use crate::agent::{clamp_score, parse_plan, AgentStep, ExecutedRequest, StepOutcome};
use crate::endpoint_gen::PipelineCtx;
use crate::gateway::{GatewayError, ProviderMode};
use crate::harness::{build_request, RequestOrigin, ResponseClass};
use crate::model::Endpoint;
use crate::runlog::RunRecord;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

/// Per-block iteration cap (default 4) and the alignment threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioAgentConfig {
    pub max_iterations_per_block: u32,
    /// Reflection score at or above which a block counts as aligned.
    pub alignment_threshold: f64,
}

impl Default for ScenarioAgentConfig {
    fn default() -> Self {
        Self {
            max_iterations_per_block: 4,
            alignment_threshold: 0.5,
        }
    }
}

/// The three scenario tools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioToolKind {
    GenerateRequests,
    FixRequest,
    ModifySubsequentBlocks,
}

impl ScenarioToolKind {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "generate_requests" => Some(ScenarioToolKind::GenerateRequests),
            "fix_request" => Some(ScenarioToolKind::FixRequest),
            "modify_subsequent_blocks" => Some(ScenarioToolKind::ModifySubsequentBlocks),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioToolKind::GenerateRequests => "generate_requests",
            ScenarioToolKind::FixRequest => "fix_request",
            ScenarioToolKind::ModifySubsequentBlocks => "modify_subsequent_blocks",
        }
    }
}

/// One applied rewrite of a later block's task text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRewrite {
    /// 1-based position in the scenario's block list.
    pub block: usize,
    pub task: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioToolResult {
    pub requests: Vec<crate::harness::HttpRequestSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rewrites: Vec<BlockRewrite>,
}

fn slots(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn outcomes_text(requests: &[ExecutedRequest]) -> String {
    if requests.is_empty() {
        return "(none yet)".to_string();
    }
    requests
        .iter()
        .map(|r| {
            format!(
                "{} {} -> {}{}",
                r.request.method,
                r.request.path_and_query(),
                r.status,
                r.summary
                    .as_deref()
                    .map(|s| format!(" ({s})"))
                    .unwrap_or_default()
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn assignments_to_requests(
    endpoint: &Endpoint,
    value: &Value,
    ctx: &mut PipelineCtx,
    result: &mut ScenarioToolResult,
    executed: &mut Vec<ExecutedRequest>,
) -> Result<(), ScenarioError> {
    for item in value.as_array().into_iter().flatten() {
        let assignment = item
            .as_object()
            .map(|map| {
                map.iter()
                    .map(|(k, v)| (k.clone(), v.as_str().map(String::from)))
                    .collect()
            })
            .unwrap_or_default();
        match build_request(endpoint, &assignment, RequestOrigin::Scenario) {
            Ok(request) => {
                result.requests.push(request.clone());
                if let Some(record) = ctx.execute_logged(&request)? {
                    executed.push(record);
                }
            }
            Err(e) => ctx.log.push(RunRecord::Note {
                text: format!("scenario request dropped: {e}"),
            }),
        }
    }
    Ok(())
}

/// Reflection: scripted/live via the gateway when a rule exists, otherwise
/// the deterministic fallback (aligned iff any request reached the valid
/// class).
fn reflect(
    ctx: &PipelineCtx,
    block: &AtomicBlock,
    executed: &[ExecutedRequest],
) -> Result<(f64, String), ScenarioError> {
    let slot_values = slots(&[
        ("block", block.task.clone()),
        ("outcomes", outcomes_text(executed)),
    ]);
    match ctx
        .gateway
        .complete_structured("scenario-reflect", &slot_values, "reflection")
    {
        Ok((value, _)) => Ok((
            clamp_score(value["score"].as_f64().unwrap_or(0.0)),
            value["comment"].as_str().unwrap_or_default().to_string(),
        )),
        Err(GatewayError::StubUnmatched { .. }) if ctx.gateway.mode() != ProviderMode::Live => {
            let aligned = executed.iter().any(|r| r.class == ResponseClass::Valid);
            Ok((
                if aligned { 1.0 } else { 0.0 },
                if aligned {
                    "request succeeded against the block's endpoint".to_string()
                } else {
                    "no successful request yet".to_string()
                },
            ))
        }
        Err(e) => Err(e.into()),
    }
}

/// Process every block in order with the plan-act-reflect loop. Failed
/// blocks mark the scenario partially reified; later blocks still run.
pub fn scenario_agent(
    ctx: &mut PipelineCtx,
    scenario: &TestScenario,
    blocks: &mut Vec<AtomicBlock>,
    config: ScenarioAgentConfig,
) -> Result<(), ScenarioError> {
    let mut prior_outcomes: Vec<ExecutedRequest> = Vec::new();

    for index in 0..blocks.len() {
        let block_id = blocks[index].block_id.clone();
        let mut history: Vec<AgentStep<ScenarioToolInvocation>> = Vec::new();
        let mut done = false;

        for iteration in 0..config.max_iterations_per_block {
            let history_text = if history.is_empty() {
                "(none)".to_string()
            } else {
                history
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        format!(
                            "iteration {}: score {:.2}, {}",
                            i + 1,
                            s.reflection_score,
                            s.reflection_comment
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            let plan_slots = slots(&[
                ("scenario", scenario.name.clone()),
                ("block", blocks[index].task.clone()),
                ("prior_outcomes", outcomes_text(&prior_outcomes)),
                ("history", history_text),
                ("iteration", (iteration + 1).to_string()),
            ]);
            let (plan_value, _) =
                ctx.gateway
                    .complete_structured("scenario-plan", &plan_slots, "plan")?;
            let (plan, diags) = parse_plan(&plan_value);
            for d in diags {
                ctx.log.push(RunRecord::Note {
                    text: format!("{}: {}", d.code, d.message),
                });
            }

            let mut invocations: Vec<ScenarioToolInvocation> = Vec::new();
            let mut executed: Vec<ExecutedRequest> = Vec::new();
            for (tool_name, arguments) in &plan.actions {
                let Some(tool) = ScenarioToolKind::parse(tool_name) else {
                    ctx.log.push(RunRecord::Note {
                        text: format!("scenario tool '{tool_name}' unknown; skipped"),
                    });
                    continue;
                };
                let mut result = ScenarioToolResult::default();
                match tool {
                    ScenarioToolKind::GenerateRequests => {
                        let endpoint = ctx
                            .all_endpoints
                            .iter()
                            .find(|e| e.endpoint_id == blocks[index].endpoint_id)
                            .cloned();
                        let Some(endpoint) = endpoint else { continue };
                        let guidance = arguments["guidance"].as_str().unwrap_or_default();
                        let (value, _) = ctx.gateway.complete_structured(
                            "scenario-generate-requests",
                            &slots(&[
                                ("block", blocks[index].task.clone()),
                                ("endpoint", endpoint.label()),
                                ("prior_outcomes", outcomes_text(&prior_outcomes)),
                                ("guidance", guidance.to_string()),
                            ]),
                            "assignments",
                        )?;
                        assignments_to_requests(&endpoint, &value, ctx, &mut result, &mut executed)?;
                    }
                    ScenarioToolKind::FixRequest => {
                        let endpoint = ctx
                            .all_endpoints
                            .iter()
                            .find(|e| e.endpoint_id == blocks[index].endpoint_id)
                            .cloned();
                        let Some(endpoint) = endpoint else { continue };
                        let last = blocks[index]
                            .requests
                            .last()
                            .or_else(|| executed.last())
                            .map(|r| {
                                (
                                    format!("{} {}", r.request.method, r.request.path_and_query()),
                                    format!("{}", r.status),
                                )
                            })
                            .unwrap_or_else(|| ("(no previous request)".into(), "-".into()));
                        let guidance = arguments["guidance"].as_str().unwrap_or_default();
                        let (value, _) = ctx.gateway.complete_structured(
                            "scenario-fix-request",
                            &slots(&[
                                ("block", blocks[index].task.clone()),
                                ("request", last.0),
                                ("response", last.1),
                                ("guidance", guidance.to_string()),
                            ]),
                            "assignments",
                        )?;
                        assignments_to_requests(&endpoint, &value, ctx, &mut result, &mut executed)?;
                    }
                    ScenarioToolKind::ModifySubsequentBlocks => {
                        let subsequent: Vec<String> = blocks[index + 1..]
                            .iter()
                            .enumerate()
                            .map(|(j, b)| format!("{}. {}", index + j + 2, b.task))
                            .collect();
                        let (value, _) = ctx.gateway.complete_structured(
                            "scenario-modify-blocks",
                            &slots(&[
                                ("scenario", scenario.to_gherkin()),
                                ("current_block", blocks[index].task.clone()),
                                ("outcomes", outcomes_text(&executed)),
                                ("subsequent", subsequent.join("\n")),
                            ]),
                            "block-rewrites",
                        )?;
                        for item in value.as_array().into_iter().flatten() {
                            let position = item["block"].as_u64().unwrap_or(0) as usize;
                            let task = item["task"].as_str().unwrap_or_default().to_string();
                            if position <= index + 1 || position > blocks.len() || task.is_empty() {
                                ctx.log.push(RunRecord::Note {
                                    text: format!(
                                        "block rewrite to position {position} rejected (current block {})",
                                        index + 1
                                    ),
                                });
                                continue;
                            }
                            let target = &mut blocks[position - 1];
                            let endpoint_before = target.endpoint_id.clone();
                            target.rewrite_task(task.clone());
                            // A rewrite may never re-bind the block.
                            assert_eq!(target.endpoint_id, endpoint_before);
                            result.rewrites.push(BlockRewrite {
                                block: position,
                                task,
                            });
                        }
                    }
                }
                invocations.push(ScenarioToolInvocation {
                    tool,
                    arguments: arguments.clone(),
                    result,
                });
            }

            let (score, comment) = reflect(ctx, &blocks[index], &executed)?;
            let step = AgentStep {
                chosen_actions: invocations,
                rationale: plan.rationale,
                reflection_score: score,
                reflection_comment: comment,
                outcome: StepOutcome {
                    requests: executed.clone(),
                    context_gained: Vec::new(),
                    coverage_delta: None,
                },
            };
            ctx.log.push(RunRecord::BlockStep {
                scenario: scenario.name.clone(),
                block_id: block_id.clone(),
                step: step.clone(),
            });
            blocks[index].requests.extend(executed.iter().cloned());
            let aligned = step.reflection_score >= config.alignment_threshold;
            history.push(step);
            if aligned {
                done = true;
                break;
            }
        }

        blocks[index].status = if done { BlockStatus::Done } else { BlockStatus::Failed };
        ctx.log.push(RunRecord::BlockFinished {
            scenario: scenario.name.clone(),
            block_id,
            status: blocks[index].status,
        });
        prior_outcomes.extend(blocks[index].requests.iter().cloned());
    }
    Ok(())
}
