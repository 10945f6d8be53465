//! The endpoint-focused pipeline against the toy service, in stub mode:
//! routing, agent contracts, coverage math, emission, and replay, all
//! checked against the hand-built manifest.

mod common;

use std::collections::BTreeSet;
use std::sync::Arc;
use testweaver_core::agent::AgentGoal;
use testweaver_core::coverage::{delta, metrics, CoverageProvider, CoverageSnapshot};
use testweaver_core::endpoint_gen::{
    emit_endpoint_tests, repair_agent, replay_test_file, AgentConfig, PipelineCtx,
};
use testweaver_core::faults::FaultDetector;
use testweaver_core::gateway::{Gateway, StubRule, StubScript, TemplateCatalog};
use testweaver_core::harness::{Executor, InProcessTransport, ResponseClass};
use testweaver_core::runlog::RunRecord;
use testweaver_core::toyservice::ToyService;

#[test]
fn full_run_touches_every_endpoint_and_matches_manifest_counts() {
    let fx = common::PipelineFixture::new();
    let output = fx.run_endpoint_pipeline();
    let manifest = common::manifest();
    let run = &manifest["endpoint_run"];

    let hit = output.log.operations_hit();
    assert_eq!(hit.len(), run["operations_hit"].as_u64().unwrap() as usize);
    assert_eq!(fx.model.endpoints.len(), run["operations_total"].as_u64().unwrap() as usize);

    let universe = fx.provider.universe();
    let snapshot = &output.final_snapshot;
    assert_eq!(snapshot.covered_lines.len(), run["covered_lines"].as_u64().unwrap() as usize);
    assert_eq!(universe.lines.len(), run["universe_lines"].as_u64().unwrap() as usize);
    assert_eq!(
        snapshot.covered_branches.len(),
        run["covered_branches"].as_u64().unwrap() as usize
    );
    assert_eq!(
        universe.branches.len(),
        run["universe_branches"].as_u64().unwrap() as usize
    );

    // The exact uncovered remainder.
    let uncovered: BTreeSet<(String, u32)> = universe
        .lines
        .difference(&snapshot.covered_lines)
        .cloned()
        .collect();
    let expected_uncovered: BTreeSet<(String, u32)> = run["uncovered_lines"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| (l[0].as_str().unwrap().to_string(), l[1].as_u64().unwrap() as u32))
        .collect();
    assert_eq!(uncovered, expected_uncovered);

    assert_eq!(output.faults.unique_fault_count(), 0);
}

#[test]
fn coverage_report_matches_manifest_percentages_exactly() {
    let fx = common::PipelineFixture::new();
    let output = fx.run_endpoint_pipeline();
    let manifest = common::manifest();
    let run = &manifest["endpoint_run"];

    let scopes: Vec<_> = fx.scopes.values().cloned().collect();
    let report = metrics(
        &output.final_snapshot,
        &scopes,
        &output.log.operations_hit(),
        fx.model.endpoints.len(),
        &fx.provider.universe(),
    );
    let expect = |n: u64, d: u64| Some(n as f64 * 100.0 / d as f64);
    assert_eq!(
        report.line.value(),
        expect(run["covered_lines"].as_u64().unwrap(), run["universe_lines"].as_u64().unwrap())
    );
    assert_eq!(
        report.branch.value(),
        expect(
            run["covered_branches"].as_u64().unwrap(),
            run["universe_branches"].as_u64().unwrap()
        )
    );
    assert_eq!(
        report.db_line.value(),
        expect(
            run["covered_db_lines"].as_u64().unwrap(),
            run["universe_db_lines"].as_u64().unwrap()
        )
    );
    assert_eq!(report.operation.value(), Some(100.0));

    // db_lines are a subset of reachable lines in every scope.
    for scope in &scopes {
        assert!(scope.db_lines.is_subset(&scope.reachable_lines));
    }

    // Recomputing coverage from the run log equals the live snapshot.
    assert_eq!(output.log.accumulated_coverage().covered_lines, output.final_snapshot.covered_lines);
    assert_eq!(
        output.log.accumulated_coverage().covered_branches,
        output.final_snapshot.covered_branches
    );
}

#[test]
fn agent_contracts_hold_across_the_whole_log() {
    let fx = common::PipelineFixture::new();
    let output = fx.run_endpoint_pipeline();
    let mut steps = 0;
    for record in &output.log.records {
        if let RunRecord::AgentStep { step, .. } = record {
            steps += 1;
            assert!(
                (1..=2).contains(&step.chosen_actions.len()),
                "step has {} actions",
                step.chosen_actions.len()
            );
            assert!(
                (0.0..=1.0).contains(&step.reflection_score),
                "score {} outside [0,1]",
                step.reflection_score
            );
            assert!(!step.rationale.is_empty());
        }
    }
    assert!(steps >= 7, "expected agent activity, saw {steps} steps");
}

#[test]
fn repair_and_coverage_agents_match_manifest_outcomes() {
    let fx = common::PipelineFixture::new();
    let output = fx.run_endpoint_pipeline();
    let manifest = common::manifest();
    let run = &manifest["endpoint_run"];

    let finished: Vec<(String, AgentGoal, u32, bool)> = output
        .log
        .records
        .iter()
        .filter_map(|r| match r {
            RunRecord::AgentFinished {
                endpoint_id,
                goal,
                iterations,
                succeeded,
            } => {
                let label = fx
                    .model
                    .endpoints
                    .iter()
                    .find(|e| &e.endpoint_id == endpoint_id)
                    .unwrap()
                    .label();
                Some((label, *goal, *iterations, *succeeded))
            }
            _ => None,
        })
        .collect();

    let repair = run["repair"].as_object().unwrap();
    let repair_got = finished
        .iter()
        .find(|(_, goal, _, _)| *goal == AgentGoal::Repair)
        .expect("repair agent ran");
    assert_eq!(repair_got.0, repair["endpoint"].as_str().unwrap());
    assert_eq!(repair_got.2, repair["iterations"].as_u64().unwrap() as u32);
    assert_eq!(repair_got.3, repair["succeeded"].as_bool().unwrap());

    for expected in run["coverage_agents"].as_array().unwrap() {
        let label = expected["endpoint"].as_str().unwrap();
        let got = finished
            .iter()
            .find(|(l, goal, _, _)| l == label && *goal == AgentGoal::Coverage)
            .unwrap_or_else(|| panic!("coverage agent for {label}"));
        assert_eq!(got.2, expected["iterations"].as_u64().unwrap() as u32, "{label}");
        assert_eq!(got.3, expected["succeeded"].as_bool().unwrap(), "{label}");
    }
}

#[test]
fn coverage_agent_reflection_delta_equals_coverage_module_delta() {
    let fx = common::PipelineFixture::new();
    let output = fx.run_endpoint_pipeline();
    // Reconstruct each coverage step's delta from the per-request deltas in
    // the log (the coverage module's own arithmetic) and compare bit for
    // bit with what the agent recorded in its reflection outcome.
    let mut checked = 0;
    for record in &output.log.records {
        if let RunRecord::AgentStep {
            goal: AgentGoal::Coverage,
            step,
            ..
        } = record
        {
            let recorded = step.outcome.coverage_delta.as_ref().expect("delta recorded");
            let mut union_before = CoverageSnapshot::default();
            let mut union_after = CoverageSnapshot {
                taken_at: 1,
                ..Default::default()
            };
            // The union of the step's per-request deltas equals
            // delta(before, after) because coverage only grows.
            for executed in &step.outcome.requests {
                let matching = output.log.records.iter().find_map(|r| match r {
                    RunRecord::RequestExecuted {
                        response, delta, ..
                    } if response.request == executed.request
                        && response.status == executed.status =>
                    {
                        Some(delta.clone())
                    }
                    _ => None,
                });
                if let Some(d) = matching {
                    union_after.covered_lines.extend(d.new_lines);
                    union_after.covered_branches.extend(d.new_branches);
                }
            }
            let expected = delta(&union_before, &union_after);
            union_before.taken_at = 0;
            assert_eq!(recorded.new_lines, expected.new_lines);
            assert_eq!(recorded.new_branches, expected.new_branches);
            checked += 1;
        }
    }
    assert!(checked >= 5, "checked {checked} coverage steps");
}

#[test]
fn no_agent_when_first_request_covers_full_scope() {
    let fx = common::PipelineFixture::new();
    let output = fx.run_endpoint_pipeline();
    // GET /ping: one 200 covering its whole scope; no agent may run on it.
    let ping = fx.endpoint_by_label("GET /ping");
    for record in &output.log.records {
        if let RunRecord::AgentFinished { endpoint_id, .. } = record {
            assert_ne!(endpoint_id, &ping.endpoint_id, "no agent expected for /ping");
        }
    }
}

#[test]
fn no_fix_scenario_exhausts_at_exactly_max_iterations() {
    // A dedicated stub that never fixes the request: the repair agent must
    // run exactly max_iterations times and report failure.
    let rules = vec![
        StubRule::new(
            "repair-plan",
            "```json\n{\"actions\": [{\"tool\": \"modify_param_value\", \"arguments\": {\"parameter\": \"ownerId\"}}], \"rationale\": \"retry the lookup\"}\n```",
        ),
        StubRule::new("tool-modify-param-value", "```json\n[{\"ownerId\": \"7\"}]\n```"),
        StubRule::new("summarize-failure", "The requested owner id does not exist."),
    ];
    let gateway = Gateway::stub(TemplateCatalog::bundled().unwrap(), StubScript::from_rules(rules));
    let service = Arc::new(ToyService::bundled().unwrap());
    let provider = service.coverage();
    let executor = Executor::new(Box::new(InProcessTransport::new(service)));
    let fx_model = common::analyzed_model(&common::stub_gateway("pipeline.json"));
    let endpoint = fx_model
        .endpoints
        .iter()
        .find(|e| e.label() == "GET /owners/{ownerId}")
        .unwrap()
        .clone();

    let mut ctx = PipelineCtx::new(
        &gateway,
        &executor,
        &*provider,
        &[],
        fx_model.endpoints.clone(),
        FaultDetector::new(),
    );
    // Produce the initial 404.
    let assignment: testweaver_core::model::Assignment =
        [("ownerId".to_string(), Some("7".to_string()))].into_iter().collect();
    let request = testweaver_core::harness::build_request(
        &endpoint,
        &assignment,
        testweaver_core::harness::RequestOrigin::Initial,
    )
    .unwrap();
    let failed = ctx.execute_logged(&request).unwrap().unwrap();
    assert_eq!(failed.class, ResponseClass::Invalid);

    let failed_record = testweaver_core::harness::HttpResponseRecord {
        status: failed.status,
        headers: vec![],
        body: String::new(),
        latency_ms: 0.0,
        request: failed.request.clone(),
        summary: failed.summary.clone(),
    };
    let mut run_endpoint = endpoint.clone();
    let state = repair_agent(
        &mut ctx,
        &mut run_endpoint,
        &failed_record,
        AgentConfig { max_iterations: 5 },
    )
    .unwrap();
    assert_eq!(state.iteration, 5, "exhausts at exactly max_iterations");
    assert!(!state.succeeded);
    assert_eq!(state.history.len(), 5);
    for step in &state.history {
        assert!((0.0..=1.0).contains(&step.reflection_score));
        // Re-fetching the same missing owner never changes the outcome.
        assert_eq!(step.reflection_score, 0.0);
    }
}

#[test]
fn emitted_tests_replay_to_identical_status_classes() {
    let fx = common::PipelineFixture::new();
    let output = fx.run_endpoint_pipeline();
    let manifest = common::manifest();
    let run = &manifest["endpoint_run"];

    let out_dir = tempfile::tempdir().unwrap();
    let written = emit_endpoint_tests(
        &output.log,
        &fx.model.endpoints,
        &common::template_dir(),
        out_dir.path(),
    )
    .unwrap();
    assert_eq!(written.len(), run["emitted_files"].as_u64().unwrap() as usize);

    // Replay against a fresh toy service.
    let replay_service = Arc::new(ToyService::bundled().unwrap());
    let replay_exec = Executor::new(Box::new(InProcessTransport::new(replay_service)));
    let mut steps = 0;
    for path in &written {
        for (step, status, class) in replay_test_file(path, &replay_exec).unwrap() {
            assert_eq!(class, step.class, "class mismatch replaying {path:?}");
            assert_eq!(status, step.status, "status drift replaying {path:?}");
            steps += 1;
        }
    }
    assert_eq!(steps, run["selected_requests"].as_u64().unwrap() as usize);
}

#[test]
fn selection_is_exactly_coverage_contributing_or_fault() {
    let fx = common::PipelineFixture::new();
    let output = fx.run_endpoint_pipeline();
    let selected: usize = output
        .log
        .records
        .iter()
        .filter(|r| {
            matches!(r, RunRecord::RequestExecuted { delta, class, .. }
                if !delta.is_empty() || *class == ResponseClass::Fault)
        })
        .count();
    let manifest = common::manifest();
    assert_eq!(
        selected,
        manifest["endpoint_run"]["selected_requests"].as_u64().unwrap() as usize
    );
}

#[test]
fn stub_pipeline_is_replay_deterministic() {
    let run = || {
        let fx = common::PipelineFixture::new();
        let output = fx.run_endpoint_pipeline();
        serde_json::to_string(&output.log.records).unwrap()
    };
    let first = run();
    let second = run();
    assert_eq!(first, second);
}
