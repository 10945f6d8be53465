//! The endpoint pipeline driver: ODG-ordered execution, classification
//! routing, and run logging. Per-endpoint failures are isolated; the
//! pipeline continues with the next endpoint.

use super::agents::{coverage_agent, repair_agent, AgentConfig};
use super::assign::generate_initial_assignments;
use super::EndpointGenError;
use crate::agent::ExecutedRequest;
use crate::coverage::{
    delta as coverage_delta, CoverageProvider, CoverageSnapshot, ReachabilityScope, SnapshotPoller,
};
use crate::faults::FaultDetector;
use crate::gateway::Gateway;
use crate::harness::{
    build_request, classify, summarize_failure, Executor, HarnessError, HttpRequestSpec,
    RequestOrigin, ResponseClass,
};
use crate::ingest::SourceUnit;
use crate::model::{Endpoint, EndpointId};
use crate::odg::{topological_layers, OperationDependencyGraph};
use crate::runlog::{RunLog, RunRecord};
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub application: String,
    pub agent: AgentConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            application: "application".to_string(),
            agent: AgentConfig::default(),
        }
    }
}

/// Shared machinery handed to the agents.
pub struct PipelineCtx<'a> {
    pub gateway: &'a Gateway,
    pub executor: &'a Executor,
    pub units: &'a [SourceUnit],
    pub all_endpoints: Vec<Endpoint>,
    pub faults: FaultDetector,
    pub log: RunLog,
    poller: SnapshotPoller<'a>,
}

impl<'a> PipelineCtx<'a> {
    pub fn new(
        gateway: &'a Gateway,
        executor: &'a Executor,
        provider: &'a dyn CoverageProvider,
        units: &'a [SourceUnit],
        all_endpoints: Vec<Endpoint>,
        faults: FaultDetector,
    ) -> Self {
        Self {
            gateway,
            executor,
            units,
            all_endpoints,
            faults,
            log: RunLog::new(),
            poller: SnapshotPoller::new(provider),
        }
    }

    pub fn poller_snapshot(&self) -> Result<CoverageSnapshot, EndpointGenError> {
        Ok(self.poller.snapshot()?)
    }

    /// Execute one request with coverage bracketing, failure summarization,
    /// fault ingestion, and logging. Transport failures are logged and
    /// return `None`.
    pub fn execute_logged(
        &mut self,
        request: &HttpRequestSpec,
    ) -> Result<Option<ExecutedRequest>, EndpointGenError> {
        let before = self.poller.snapshot()?;
        let mut record = match self.executor.execute(request) {
            Ok(record) => record,
            Err(HarnessError::Transport(error)) => {
                self.log.push(RunRecord::TransportFailed {
                    endpoint_id: request.endpoint_id.clone(),
                    request: request.clone(),
                    error,
                });
                return Ok(None);
            }
            Err(other) => return Err(other.into()),
        };
        let after = self.poller.snapshot()?;
        let delta = coverage_delta(&before, &after);
        let class = classify(&record);

        if matches!(class, ResponseClass::Invalid | ResponseClass::Fault) {
            let (summary, diags) = summarize_failure(&record, self.gateway);
            record.summary = Some(summary);
            for d in diags {
                self.log.push(RunRecord::Note {
                    text: format!("{}: {}", d.code, d.message),
                });
            }
        }
        if class == ResponseClass::Fault {
            let (fault_id, _) = self.faults.ingest(&record)?;
            let pattern_id = fault_id.trim_start_matches("fault:").to_string();
            self.log.push(RunRecord::FaultRecorded {
                endpoint_id: request.endpoint_id.clone(),
                fault_id,
                pattern_id,
            });
        }
        self.log.push(RunRecord::RequestExecuted {
            response: record.clone(),
            class,
            delta,
        });
        Ok(Some(ExecutedRequest {
            request: record.request.clone(),
            status: record.status,
            class,
            summary: record.summary.clone(),
        }))
    }
}

/// Everything a pipeline run produces.
pub struct EndpointRunOutput {
    pub log: RunLog,
    pub faults: FaultDetector,
    pub final_snapshot: CoverageSnapshot,
}

fn odg_context(graph: &OperationDependencyGraph, id: &EndpointId) -> String {
    let mut lines: Vec<String> = graph
        .edges_into(id)
        .filter_map(|edge| {
            graph.nodes.get(&edge.src).map(|node| {
                format!(
                    "{} ({:?}: {}) - {}",
                    node.endpoint.label(),
                    edge.relation,
                    edge.evidence,
                    node.summary
                )
            })
        })
        .collect();
    if lines.is_empty() {
        lines.push("(no prerequisite endpoints)".to_string());
    }
    lines.join("\n")
}

/// Run the endpoint-focused pipeline over all endpoints in topological
/// layer order.
pub fn run_endpoint_pipeline(
    graph: &OperationDependencyGraph,
    scopes: &BTreeMap<EndpointId, ReachabilityScope>,
    gateway: &Gateway,
    executor: &Executor,
    provider: &dyn CoverageProvider,
    units: &[SourceUnit],
    config: &PipelineConfig,
) -> Result<EndpointRunOutput, EndpointGenError> {
    let all_endpoints: Vec<Endpoint> =
        graph.nodes.values().map(|n| n.endpoint.clone()).collect();
    let mut ctx = PipelineCtx::new(
        gateway,
        executor,
        provider,
        units,
        all_endpoints,
        FaultDetector::new(),
    );
    ctx.log.push(RunRecord::RunStarted {
        application: config.application.clone(),
        pipeline: "endpoint".to_string(),
    });

    let layers = topological_layers(graph);
    for (layer_idx, layer) in layers.iter().enumerate() {
        for endpoint_id in layer {
            let endpoint = graph
                .endpoint(endpoint_id)
                .expect("layered id exists in graph")
                .clone();
            ctx.log.push(RunRecord::EndpointStarted {
                endpoint_id: endpoint_id.clone(),
                label: endpoint.label(),
                layer: layer_idx,
            });
            if let Err(e) = run_one_endpoint(&mut ctx, endpoint, graph, scopes, config) {
                // Isolate the failure; the log keeps the full error text.
                ctx.log.push(RunRecord::Note {
                    text: format!("endpoint {endpoint_id} failed: {e}"),
                });
            }
        }
    }

    let final_snapshot = ctx.poller_snapshot()?;
    ctx.log.push(RunRecord::CoverageFinal {
        snapshot: final_snapshot.clone(),
    });
    Ok(EndpointRunOutput {
        log: ctx.log,
        faults: ctx.faults,
        final_snapshot,
    })
}

fn run_one_endpoint(
    ctx: &mut PipelineCtx,
    endpoint: Endpoint,
    graph: &OperationDependencyGraph,
    scopes: &BTreeMap<EndpointId, ReachabilityScope>,
    config: &PipelineConfig,
) -> Result<(), EndpointGenError> {
    // Run-scoped copy: agent tools may mutate it, the stored model stays.
    let mut run_endpoint = endpoint;
    let context = odg_context(graph, &run_endpoint.endpoint_id);
    let (assignments, _diags) =
        generate_initial_assignments(&run_endpoint, &context, ctx.gateway)?;

    let mut executed: Vec<ExecutedRequest> = Vec::new();
    for assignment in &assignments {
        let request = match build_request(&run_endpoint, assignment, RequestOrigin::Initial) {
            Ok(request) => request,
            Err(e) => {
                ctx.log.push(RunRecord::Note {
                    text: format!("initial request dropped for {}: {e}", run_endpoint.label()),
                });
                continue;
            }
        };
        if let Some(record) = ctx.execute_logged(&request)? {
            executed.push(record);
        }
    }

    // Routing: 4xx -> repair agent; all-valid with uncovered reachable
    // lines -> coverage agent; 5xx was already ingested by the executor.
    let first_invalid = executed.iter().find(|r| r.class == ResponseClass::Invalid);
    if let Some(invalid) = first_invalid {
        let failed = crate::harness::HttpResponseRecord {
            status: invalid.status,
            headers: Vec::new(),
            body: String::new(),
            latency_ms: 0.0,
            request: invalid.request.clone(),
            summary: invalid.summary.clone(),
        };
        repair_agent(ctx, &mut run_endpoint, &failed, config.agent)?;
        return Ok(());
    }

    let any_valid = executed.iter().any(|r| r.class == ResponseClass::Valid);
    if any_valid {
        if let Some(scope) = scopes.get(&run_endpoint.endpoint_id) {
            let snapshot = ctx.poller_snapshot()?;
            let uncovered = scope
                .reachable_lines
                .difference(&snapshot.covered_lines)
                .count();
            if uncovered > 0 {
                coverage_agent(ctx, &mut run_endpoint, scope, config.agent)?;
            }
        }
    }
    Ok(())
}
