//! The endpoint-focused test generation pipeline: ODG-ordered request
//! generation, classification-routed repair and coverage-augmentation
//! agents, and emission of executable tests for coverage-contributing and
//! fault-revealing requests.

mod agents;
mod assign;
mod emit;
mod pipeline;
mod tools;

pub use agents::{coverage_agent, repair_agent, AgentConfig, AgentState};
pub use assign::generate_initial_assignments;
pub use emit::{emit_endpoint_tests, parse_replay_steps, replay_test_file, ReplayStep};
pub use pipeline::{run_endpoint_pipeline, EndpointRunOutput, PipelineConfig, PipelineCtx};
pub use tools::{apply_tool, ToolResult};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The six tools available to the repair and coverage agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolKind {
    ModifyParamValue,
    ModifyParamType,
    ModifyIpd,
    UpdateValueConstraint,
    GenerateRequests,
    ExtractCodeContext,
}

impl ToolKind {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "modify_param_value" => Some(ToolKind::ModifyParamValue),
            "modify_param_type" => Some(ToolKind::ModifyParamType),
            "modify_ipd" => Some(ToolKind::ModifyIpd),
            "update_value_constraint" => Some(ToolKind::UpdateValueConstraint),
            "generate_requests" => Some(ToolKind::GenerateRequests),
            "extract_code_context" => Some(ToolKind::ExtractCodeContext),
        _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ToolKind::ModifyParamValue => "modify_param_value",
            ToolKind::ModifyParamType => "modify_param_type",
            ToolKind::ModifyIpd => "modify_ipd",
            ToolKind::UpdateValueConstraint => "update_value_constraint",
            ToolKind::GenerateRequests => "generate_requests",
            ToolKind::ExtractCodeContext => "extract_code_context",
        }
    }
}

/// One executed tool with its arguments and payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInvocation {
    pub tool: ToolKind,
    pub arguments: serde_json::Value,
    pub result: ToolResult,
}

#[derive(Debug, Error)]
pub enum EndpointGenError {
    #[error("NO_VALID_ASSIGNMENT: no structurally valid assignment for {0} after retry")]
    NoValidAssignment(String),
    #[error("INVALID_TOOL_ARGS: {0}")]
    InvalidToolArgs(String),
    #[error(transparent)]
    Gateway(#[from] crate::gateway::GatewayError),
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
    #[error(transparent)]
    Harness(#[from] crate::harness::HarnessError),
    #[error(transparent)]
    Coverage(#[from] crate::coverage::CoverageError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Template(#[from] crate::template::TemplateError),
    #[error(transparent)]
    Fault(#[from] crate::faults::FaultError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EndpointGenError {
    pub fn code(&self) -> &'static str {
        match self {
            EndpointGenError::NoValidAssignment(_) => "NO_VALID_ASSIGNMENT",
            EndpointGenError::InvalidToolArgs(_) => "INVALID_TOOL_ARGS",
            EndpointGenError::Gateway(e) => e.code(),
            EndpointGenError::Ingest(e) => e.code(),
            EndpointGenError::Harness(e) => e.code(),
            EndpointGenError::Coverage(e) => e.code(),
            EndpointGenError::Model(e) => e.code(),
            EndpointGenError::Template(e) => e.code(),
            EndpointGenError::Fault(_) => "PATTERN_COMPILE_ERROR",
            EndpointGenError::Io(_) => "IO_ERROR",
        }
    }
}
