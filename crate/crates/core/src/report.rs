//! The consolidated report: coverage metrics, scenario metrics, fault
//! table, and cost accounting, all recomputed from persisted logs so a
//! re-run of reporting is a pure re-derivation.

use crate::coverage::{metrics, CoverageReport, ReachabilityScope, Universe};
use crate::faults::{FaultDetector, FaultTable};
use crate::gateway::{accumulate_cost, CostReport, LlmExchange, PriceTable};
use crate::model::EndpointModelDocument;
use crate::runlog::{RunLog, RunRecord};
use crate::scenario_gen::{scenario_metrics, ScenarioDocument, ScenarioMetrics};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("MISSING_LOG: {0}")]
    MissingLog(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("report: {0}")]
    Other(String),
}

impl ReportError {
    pub fn code(&self) -> &'static str {
        match self {
            ReportError::MissingLog(_) => "MISSING_LOG",
            ReportError::Io(_) => "IO_ERROR",
            ReportError::Other(_) => "REPORT_ERROR",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsolidatedReport {
    pub schema: String,
    pub application: String,
    pub coverage: CoverageReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenarios: Option<ScenarioMetrics>,
    pub faults: FaultTable,
    pub cost: CostReport,
}

impl ConsolidatedReport {
    pub const SCHEMA: &'static str = "report/1";

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable table form.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("application: {}\n\n", self.application));
        out.push_str("coverage\n");
        out.push_str(&format!(
            "  line       {:>8}  ({}/{})\n",
            self.coverage.line.display(),
            self.coverage.covered_lines,
            self.coverage.universe_lines
        ));
        out.push_str(&format!(
            "  branch     {:>8}  ({}/{})\n",
            self.coverage.branch.display(),
            self.coverage.covered_branches,
            self.coverage.universe_branches
        ));
        out.push_str(&format!(
            "  db line    {:>8}  ({}/{})\n",
            self.coverage.db_line.display(),
            self.coverage.covered_db_lines,
            self.coverage.universe_db_lines
        ));
        out.push_str(&format!(
            "  operation  {:>8}  ({}/{})\n",
            self.coverage.operation.display(),
            self.coverage.operations_hit,
            self.coverage.operations_total
        ));
        if let Some(s) = &self.scenarios {
            out.push_str("\nscenarios\n");
            out.push_str(&format!("  count               {}\n", s.count));
            out.push_str(&format!(
                "  mean sequence len   {:.1}\n",
                s.mean_sequence_length
            ));
            out.push_str(&format!(
                "  multi-class         {:.1}%\n",
                s.multi_class_percent
            ));
            out.push_str(&format!(
                "  good/bad path       {:.1}% / {:.1}%\n",
                s.good_path_percent, s.bad_path_percent
            ));
        }
        out.push_str(&format!("\nfaults: {} unique\n", self.faults.unique_faults));
        for row in &self.faults.rows {
            out.push_str(&format!(
                "  {} x{} [{}]\n",
                row.fault_id,
                row.occurrences,
                row.endpoints.join(", ")
            ));
        }
        out.push_str(&format!(
            "\ncost: {} calls, {} tokens in, {} tokens out\n",
            self.cost.total.calls, self.cost.total.tokens_in, self.cost.total.tokens_out
        ));
        out
    }
}

/// Inputs for report recomputation, loaded from an output directory laid
/// out by the CLI.
pub struct ReportInputs {
    pub model: EndpointModelDocument,
    pub log: RunLog,
    pub scenario_doc: Option<ScenarioDocument>,
    pub exchanges: Vec<LlmExchange>,
    pub scopes: Vec<ReachabilityScope>,
    pub universe: Universe,
    pub fault_detector: FaultDetector,
}

/// Recompute the consolidated report from persisted inputs only.
pub fn consolidate(inputs: &ReportInputs, prices: &PriceTable) -> ConsolidatedReport {
    let snapshot = inputs.log.accumulated_coverage();
    let operations_hit = inputs.log.operations_hit();
    let coverage = metrics(
        &snapshot,
        &inputs.scopes,
        &operations_hit,
        inputs.model.endpoints.len(),
        &inputs.universe,
    );
    let scenarios = inputs.scenario_doc.as_ref().map(|doc| {
        let outcomes: Vec<_> = doc
            .scenarios
            .iter()
            .map(|o| (o.scenario.clone(), o.blocks.clone()))
            .collect();
        scenario_metrics(&outcomes, &inputs.model.endpoints)
    });
    // Replay every fault-classified response through a fresh detector; the
    // count equals the live run because ingestion is order-deterministic
    // over the same log order.
    let mut detector = inputs.fault_detector.clone();
    for record in &inputs.log.records {
        if let RunRecord::RequestExecuted {
            response,
            class: crate::harness::ResponseClass::Fault,
            ..
        } = record
        {
            let _ = detector.ingest(response);
        }
    }
    ConsolidatedReport {
        schema: ConsolidatedReport::SCHEMA.to_string(),
        application: inputs.model.application.clone(),
        coverage,
        scenarios,
        faults: crate::faults::report(&detector),
        cost: accumulate_cost(&inputs.exchanges, prices),
    }
}

/// Load the exchange log (JSON lines of `LlmExchange`).
pub fn load_exchanges(path: &Path) -> Result<Vec<LlmExchange>, ReportError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let exchange: LlmExchange = serde_json::from_str(line)
            .map_err(|e| ReportError::Other(format!("{} line {}: {e}", path.display(), i + 1)))?;
        out.push(exchange);
    }
    Ok(out)
}
