//! The scenario pipeline driver: extraction, decomposition, per-block
//! reification, and assembly, with everything persisted.

use super::{
    assemble_test, decompose, extract_scenarios, scenario_agent, AtomicBlock, BlockStatus,
    ScenarioAgentConfig, ScenarioError, TestScenario,
};
use super::metrics::classify_scenario;
use crate::coverage::CoverageProvider;
use crate::diag::Diagnostic;
use crate::endpoint_gen::PipelineCtx;
use crate::faults::FaultDetector;
use crate::gateway::Gateway;
use crate::harness::Executor;
use crate::ingest::SourceUnit;
use crate::model::Endpoint;
use crate::odg::OperationDependencyGraph;
use crate::runlog::{RunLog, RunRecord};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// One fully processed scenario, persisted in the scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub raw_text: String,
    pub scenario: TestScenario,
    pub blocks: Vec<AtomicBlock>,
    pub assertion_markers: Vec<String>,
    pub good_path: bool,
    pub bad_path: bool,
}

/// Persisted scenario document: raw Gherkin, parsed structure, and block
/// versions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    pub schema: String,
    pub application: String,
    pub scenarios: Vec<ScenarioOutcome>,
    #[serde(default)]
    pub diagnostics: Vec<Diagnostic>,
}

impl ScenarioDocument {
    pub const SCHEMA: &'static str = "scenarios/1";

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(
            path,
            serde_json::to_string_pretty(self).expect("scenario doc serializes") + "\n",
        )
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

pub struct ScenarioRunOutput {
    pub log: RunLog,
    pub document: ScenarioDocument,
    pub emitted: Vec<PathBuf>,
    pub faults: FaultDetector,
}

#[derive(Debug, Clone)]
pub struct ScenarioPipelineConfig {
    pub application: String,
    pub scenario_target: usize,
    pub agent: ScenarioAgentConfig,
}

impl Default for ScenarioPipelineConfig {
    fn default() -> Self {
        Self {
            application: "application".to_string(),
            scenario_target: 10,
            agent: ScenarioAgentConfig::default(),
        }
    }
}

/// Run the scenario pipeline end to end. Scenarios execute sequentially:
/// state mutations from one scenario are visible to the next, matching the
/// stateful behavior of real deployments.
#[allow(clippy::too_many_arguments)]
pub fn run_scenario_pipeline(
    graph: &OperationDependencyGraph,
    gateway: &Gateway,
    executor: &Executor,
    provider: &dyn CoverageProvider,
    units: &[SourceUnit],
    template_dir: &Path,
    out_dir: &Path,
    config: &ScenarioPipelineConfig,
) -> Result<ScenarioRunOutput, ScenarioError> {
    let endpoints: Vec<Endpoint> = graph.nodes.values().map(|n| n.endpoint.clone()).collect();
    let mut ctx = PipelineCtx::new(
        gateway,
        executor,
        provider,
        units,
        endpoints.clone(),
        FaultDetector::new(),
    );
    ctx.log.push(RunRecord::RunStarted {
        application: config.application.clone(),
        pipeline: "scenario".to_string(),
    });

    let (scenarios, diagnostics) = extract_scenarios(graph, gateway, config.scenario_target)?;

    let mut outcomes = Vec::new();
    let mut emitted = Vec::new();
    for scenario in scenarios {
        ctx.log.push(RunRecord::ScenarioStarted {
            name: scenario.name.clone(),
            endpoint_sequence: scenario.endpoint_sequence.clone(),
        });
        let decomposition = decompose(&scenario, graph, gateway)?;
        let mut blocks = decomposition.blocks;
        scenario_agent(&mut ctx, &scenario, &mut blocks, config.agent)?;
        let (good_path, bad_path) = classify_scenario(&blocks);
        ctx.log.push(RunRecord::ScenarioFinished {
            name: scenario.name.clone(),
            good_path,
            bad_path,
            blocks_done: blocks.iter().filter(|b| b.status == BlockStatus::Done).count(),
            blocks_total: blocks.len(),
        });
        if let Some(path) = assemble_test(
            &scenario,
            &blocks,
            &decomposition.assertion_markers,
            &endpoints,
            gateway,
            template_dir,
            out_dir,
        )? {
            emitted.push(path);
        }
        outcomes.push(ScenarioOutcome {
            raw_text: scenario.to_gherkin(),
            scenario,
            blocks,
            assertion_markers: decomposition.assertion_markers,
            good_path,
            bad_path,
        });
    }

    let final_snapshot = ctx
        .poller_snapshot()
        .map_err(ScenarioError::EndpointGen)?;
    ctx.log.push(RunRecord::CoverageFinal {
        snapshot: final_snapshot,
    });

    let document = ScenarioDocument {
        schema: ScenarioDocument::SCHEMA.to_string(),
        application: config.application.clone(),
        scenarios: outcomes,
        diagnostics,
    };
    Ok(ScenarioRunOutput {
        log: ctx.log,
        document,
        emitted,
        faults: ctx.faults,
    })
}
