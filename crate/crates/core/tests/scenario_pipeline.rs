//! The scenario pipeline against the toy service in stub mode: extraction,
//! decomposition structure, the block agent (including the task-rewrite
//! path), assembly, replay, and metrics — checked against the manifest.

mod common;

use std::collections::BTreeSet;
use std::sync::Arc;
use testweaver_core::endpoint_gen::{parse_replay_steps, replay_test_file};
use testweaver_core::gateway::{Gateway, StubRule, StubScript, TemplateCatalog};
use testweaver_core::harness::{Executor, InProcessTransport};
use testweaver_core::scenario_gen::{
    extract_scenarios, run_scenario_pipeline, scenario_metrics, BlockStatus, ScenarioError,
    ScenarioPipelineConfig,
};
use testweaver_core::toyservice::ToyService;

fn run_pipeline(fx: &common::PipelineFixture, out_dir: &std::path::Path) -> testweaver_core::scenario_gen::ScenarioRunOutput {
    run_scenario_pipeline(
        &fx.graph,
        &fx.gateway,
        &fx.executor,
        &*fx.provider,
        &fx.units,
        &common::template_dir(),
        out_dir,
        &ScenarioPipelineConfig {
            application: "clinic".to_string(),
            ..ScenarioPipelineConfig::default()
        },
    )
    .unwrap()
}

#[test]
fn scenario_structure_matches_manifest() {
    let fx = common::PipelineFixture::new();
    let out = tempfile::tempdir().unwrap();
    let output = run_pipeline(&fx, out.path());
    let manifest = common::manifest();
    let run = &manifest["scenario_run"];

    assert_eq!(output.document.scenarios.len(), run["count"].as_u64().unwrap() as usize);
    let block_counts: Vec<usize> = output
        .document
        .scenarios
        .iter()
        .map(|s| s.blocks.len())
        .collect();
    let expected_counts: Vec<usize> = run["block_counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap() as usize)
        .collect();
    assert_eq!(block_counts, expected_counts);

    for outcome in &output.document.scenarios {
        // Every atomic block is bound to exactly one known endpoint.
        for block in &outcome.blocks {
            assert!(fx.graph.nodes.contains_key(&block.endpoint_id));
        }
        // Block order is a linear extension of clause order.
        let clause_sequence: Vec<_> = outcome.scenario.endpoint_sequence.clone();
        let block_sequence: Vec<_> = outcome.blocks.iter().map(|b| b.endpoint_id.clone()).collect();
        assert_eq!(clause_sequence, block_sequence);
    }
}

#[test]
fn block_rewrite_changes_task_text_but_never_endpoint() {
    let fx = common::PipelineFixture::new();
    let out = tempfile::tempdir().unwrap();
    let output = run_pipeline(&fx, out.path());
    let manifest = common::manifest();
    let rewrite = &manifest["scenario_run"]["rewritten_block"];

    let scenario = output
        .document
        .scenarios
        .iter()
        .find(|s| s.scenario.name == rewrite["scenario"].as_str().unwrap())
        .unwrap();
    let position = rewrite["position"].as_u64().unwrap() as usize;
    let block = &scenario.blocks[position - 1];
    assert_eq!(block.task, rewrite["task"].as_str().unwrap());
    assert_eq!(block.task_versions.len(), 1, "original task kept as a version");
    // The rewritten block still targets the visit-creation endpoint.
    let endpoint = fx.graph.endpoint(&block.endpoint_id).unwrap();
    assert_eq!(endpoint.label(), "POST /owners/{ownerId}/pets/{petId}/visits/new");
}

#[test]
fn good_and_bad_path_split_matches_the_status_definition() {
    let fx = common::PipelineFixture::new();
    let out = tempfile::tempdir().unwrap();
    let output = run_pipeline(&fx, out.path());
    let manifest = common::manifest();
    let run = &manifest["scenario_run"];

    let outcomes: Vec<_> = output
        .document
        .scenarios
        .iter()
        .map(|o| (o.scenario.clone(), o.blocks.clone()))
        .collect();
    let metrics = scenario_metrics(&outcomes, &fx.model.endpoints);
    assert_eq!(metrics.count, run["count"].as_u64().unwrap() as usize);
    assert_eq!(metrics.mean_sequence_length, run["mean_sequence_length"].as_f64().unwrap());
    assert_eq!(metrics.multi_class_percent, run["multi_class_percent"].as_f64().unwrap());
    assert_eq!(metrics.good_path_percent, run["good_path_percent"].as_f64().unwrap());
    assert_eq!(metrics.bad_path_percent, run["bad_path_percent"].as_f64().unwrap());

    // Cross-check the definition directly on the recorded statuses.
    for outcome in &output.document.scenarios {
        let statuses: Vec<u16> = outcome
            .blocks
            .iter()
            .flat_map(|b| b.requests.iter().map(|r| r.status))
            .collect();
        assert_eq!(outcome.good_path, statuses.iter().all(|s| (200..300).contains(s)));
        assert_eq!(outcome.bad_path, statuses.iter().any(|s| (500..600).contains(s)));
    }

    let faults = output.faults.unique_fault_count();
    assert_eq!(faults, run["unique_faults"].as_u64().unwrap() as usize);
}

#[test]
fn assembled_tests_have_one_step_per_done_block_and_replay_cleanly() {
    let fx = common::PipelineFixture::new();
    let out = tempfile::tempdir().unwrap();
    let output = run_pipeline(&fx, out.path());
    let manifest = common::manifest();
    assert_eq!(
        output.emitted.len(),
        manifest["scenario_run"]["emitted_files"].as_u64().unwrap() as usize
    );

    for (outcome, path) in output.document.scenarios.iter().zip(&output.emitted) {
        let text = std::fs::read_to_string(path).unwrap();
        let steps = parse_replay_steps(&text);
        let done = outcome
            .blocks
            .iter()
            .filter(|b| b.status == BlockStatus::Done)
            .count();
        assert_eq!(steps.len(), done, "one HTTP step per done block in {path:?}");
        // Steps in block order.
        let expected_order: Vec<_> = outcome
            .blocks
            .iter()
            .filter(|b| b.status == BlockStatus::Done)
            .map(|b| b.endpoint_id.clone())
            .collect();
        let got_order: Vec<_> = steps.iter().map(|s| s.request.endpoint_id.clone()).collect();
        assert_eq!(got_order, expected_order);
    }

    // Replay against a fresh toy service reproduces the status classes.
    let replay_service = Arc::new(ToyService::bundled().unwrap());
    let replay_exec = Executor::new(Box::new(InProcessTransport::new(replay_service)));
    for path in &output.emitted {
        for (step, status, class) in replay_test_file(path, &replay_exec).unwrap() {
            assert_eq!(class, step.class, "replaying {path:?}");
            assert_eq!(status, step.status, "replaying {path:?}");
        }
    }
}

#[test]
fn scenario_pipeline_is_replay_deterministic() {
    let run = || {
        let fx = common::PipelineFixture::new();
        let out = tempfile::tempdir().unwrap();
        let output = run_pipeline(&fx, out.path());
        let mut emitted_bytes = Vec::new();
        for path in &output.emitted {
            emitted_bytes.push(std::fs::read_to_string(path).unwrap());
        }
        (
            serde_json::to_string(&output.document).unwrap(),
            serde_json::to_string(&output.log.records).unwrap(),
            emitted_bytes,
        )
    };
    assert_eq!(run(), run());
}

#[test]
fn single_endpoint_application_yields_no_scenarios() {
    // An app with one endpoint: the stub returns prose with no scenario
    // lines, so extraction reports NO_SCENARIOS (a valid outcome).
    let gateway = Gateway::stub(
        TemplateCatalog::bundled().unwrap(),
        StubScript::from_rules(vec![StubRule::new(
            "extract-scenarios",
            "This application exposes a single endpoint; no multi-step use cases exist.",
        )]),
    );
    let endpoint = testweaver_core::model::Endpoint::new(
        "c.Only",
        "only()",
        "/only",
        testweaver_core::model::HttpMethod::Get,
    );
    let graph =
        testweaver_core::odg::OperationDependencyGraph::from_endpoints(&[endpoint]);
    let err = extract_scenarios(&graph, &gateway, 10).unwrap_err();
    assert!(matches!(err, ScenarioError::NoScenarios));
    assert_eq!(err.code(), "NO_SCENARIOS");
}

#[test]
fn scenario_coverage_hits_manifest_operation_count() {
    let fx = common::PipelineFixture::new();
    let out = tempfile::tempdir().unwrap();
    let output = run_pipeline(&fx, out.path());
    let manifest = common::manifest();
    let hit: BTreeSet<_> = output.log.operations_hit();
    assert_eq!(
        hit.len(),
        manifest["scenario_run"]["operations_hit"].as_u64().unwrap() as usize
    );
}
