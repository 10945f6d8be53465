//! The append-only run log: every request, classification, coverage delta,
//! agent step, and scenario event of a generation run. All reports are
//! recomputable from this log plus the persisted model documents.

use crate::agent::{AgentGoal, AgentStep};
use crate::coverage::{CoverageDelta, CoverageSnapshot};
use crate::harness::{HttpRequestSpec, HttpResponseRecord, ResponseClass};
use crate::model::EndpointId;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum RunRecord {
    RunStarted {
        application: String,
        pipeline: String,
    },
    EndpointStarted {
        endpoint_id: EndpointId,
        label: String,
        layer: usize,
    },
    RequestExecuted {
        response: HttpResponseRecord,
        class: ResponseClass,
        delta: CoverageDelta,
    },
    TransportFailed {
        endpoint_id: EndpointId,
        request: HttpRequestSpec,
        error: String,
    },
    AgentStep {
        endpoint_id: EndpointId,
        goal: AgentGoal,
        iteration: u32,
        step: AgentStep<crate::endpoint_gen::ToolInvocation>,
    },
    AgentFinished {
        endpoint_id: EndpointId,
        goal: AgentGoal,
        iterations: u32,
        succeeded: bool,
    },
    FaultRecorded {
        endpoint_id: EndpointId,
        fault_id: String,
        pattern_id: String,
    },
    ScenarioStarted {
        name: String,
        endpoint_sequence: Vec<EndpointId>,
    },
    BlockStep {
        scenario: String,
        block_id: String,
        step: AgentStep<crate::scenario_gen::ScenarioToolInvocation>,
    },
    BlockFinished {
        scenario: String,
        block_id: String,
        status: crate::scenario_gen::BlockStatus,
    },
    ScenarioFinished {
        name: String,
        good_path: bool,
        bad_path: bool,
        blocks_done: usize,
        blocks_total: usize,
    },
    CoverageFinal {
        snapshot: CoverageSnapshot,
    },
    Note {
        text: String,
    },
}

/// In-memory log that persists as one JSON object per line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub records: Vec<RunRecord>,
}

impl RunLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: RunRecord) {
        self.records.push(record);
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let mut out = Vec::new();
        for record in &self.records {
            serde_json::to_writer(&mut out, record)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
            out.push(b'\n');
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(&out)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: RunRecord = serde_json::from_str(line).map_err(|e| {
                std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("{} line {}: {e}", path.display(), i + 1),
                )
            })?;
            records.push(record);
        }
        Ok(Self { records })
    }

    /// Accumulated coverage: union of all request deltas. Matches the final
    /// snapshot because runs start from an empty provider and coverage only
    /// grows.
    pub fn accumulated_coverage(&self) -> CoverageSnapshot {
        let mut snapshot = CoverageSnapshot::default();
        for record in &self.records {
            if let RunRecord::RequestExecuted { delta, .. } = record {
                snapshot.covered_lines.extend(delta.new_lines.iter().cloned());
                snapshot
                    .covered_branches
                    .extend(delta.new_branches.iter().cloned());
            }
        }
        snapshot
    }

    /// Endpoints with at least one executed request.
    pub fn operations_hit(&self) -> std::collections::BTreeSet<EndpointId> {
        self.records
            .iter()
            .filter_map(|r| match r {
                RunRecord::RequestExecuted { response, .. } => {
                    Some(response.request.endpoint_id.clone())
                }
                _ => None,
            })
            .collect()
    }
}
