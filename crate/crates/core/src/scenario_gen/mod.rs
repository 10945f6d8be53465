//! The scenario pipeline: extract Gherkin-style scenarios mapped to
//! endpoint sequences, decompose them into atomic blocks (one endpoint
//! each), reify each block with the test-generation agent, and assemble the
//! final executable scenario test.

mod agent;
mod assemble;
mod blocks;
mod gherkin;
mod metrics;
mod pipeline;

pub use agent::{scenario_agent, ScenarioAgentConfig, ScenarioToolKind, ScenarioToolResult};
pub use assemble::assemble_test;
pub use blocks::{decompose, Decomposition};
pub use gherkin::{parse_gherkin, extract_scenarios};
pub use metrics::{scenario_metrics, ScenarioMetrics, ScenarioRow};
pub use pipeline::{
    run_scenario_pipeline, ScenarioDocument, ScenarioOutcome, ScenarioPipelineConfig,
    ScenarioRunOutput,
};

use crate::agent::ExecutedRequest;
use crate::model::EndpointId;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("NO_SCENARIOS: the gateway produced no usable scenarios")]
    NoScenarios,
    #[error(transparent)]
    Gateway(#[from] crate::gateway::GatewayError),
    #[error(transparent)]
    EndpointGen(#[from] crate::endpoint_gen::EndpointGenError),
    #[error(transparent)]
    Template(#[from] crate::template::TemplateError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ScenarioError {
    pub fn code(&self) -> &'static str {
        match self {
            ScenarioError::NoScenarios => "NO_SCENARIOS",
            ScenarioError::Gateway(e) => e.code(),
            ScenarioError::EndpointGen(e) => e.code(),
            ScenarioError::Template(e) => e.code(),
            ScenarioError::Io(_) => "IO_ERROR",
        }
    }
}

/// Which Gherkin clause a line belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClauseKind {
    Given,
    When,
    Then,
}

/// One scenario line with its endpoint references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub text: String,
    pub endpoints: Vec<EndpointId>,
}

/// A parsed Gherkin-like scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestScenario {
    pub name: String,
    pub given: Vec<Clause>,
    pub when: Vec<Clause>,
    pub then: Vec<Clause>,
    /// All referenced endpoints in clause order.
    pub endpoint_sequence: Vec<EndpointId>,
}

impl TestScenario {
    pub fn clause_count(&self) -> usize {
        self.given.len() + self.when.len() + self.then.len()
    }

    pub fn clauses_in_order(&self) -> impl Iterator<Item = (&Clause, ClauseKind)> {
        self.given
            .iter()
            .map(|c| (c, ClauseKind::Given))
            .chain(self.when.iter().map(|c| (c, ClauseKind::When)))
            .chain(self.then.iter().map(|c| (c, ClauseKind::Then)))
    }

    /// Render the scenario back to its Gherkin text form.
    pub fn to_gherkin(&self) -> String {
        let mut out = format!("Scenario: {}\n", self.name);
        let mut write = |keyword: &str, clauses: &[Clause]| {
            for (i, clause) in clauses.iter().enumerate() {
                let kw = if i == 0 { keyword } else { "And" };
                out.push_str(&format!("  {kw} {}\n", clause.text));
            }
        };
        write("Given", &self.given);
        write("When", &self.when);
        write("Then", &self.then);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockStatus {
    Pending,
    Done,
    Failed,
}

/// The smallest scenario step: one task bound to exactly one endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicBlock {
    pub block_id: String,
    pub task: String,
    pub endpoint_id: EndpointId,
    /// References to earlier blocks whose outputs this block consumes.
    pub links: Vec<String>,
    pub status: BlockStatus,
    /// Requests executed while reifying this block, with outcomes.
    pub requests: Vec<ExecutedRequest>,
    /// Earlier task texts, oldest first, when the agent rewrote this block.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub task_versions: Vec<String>,
}

impl AtomicBlock {
    pub fn new(block_id: impl Into<String>, task: impl Into<String>, endpoint_id: EndpointId) -> Self {
        Self {
            block_id: block_id.into(),
            task: task.into(),
            endpoint_id,
            links: Vec::new(),
            status: BlockStatus::Pending,
            requests: Vec::new(),
            task_versions: Vec::new(),
        }
    }

    /// Rewrite the task text, keeping the version history. The endpoint
    /// binding never changes.
    pub fn rewrite_task(&mut self, new_task: String) {
        self.task_versions.push(std::mem::replace(&mut self.task, new_task));
    }
}

/// A scenario tool invocation recorded in agent traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioToolInvocation {
    pub tool: agent::ScenarioToolKind,
    pub arguments: serde_json::Value,
    pub result: agent::ScenarioToolResult,
}
