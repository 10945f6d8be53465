//! Test emission: renders coverage-contributing and fault-revealing
//! requests into executable test files, one file per endpoint class,
//! organized to mirror the application's source package layout.
//!
//! Every emitted HTTP step carries a machine-readable marker line
//! (`// http-step: {...}`) used by the replay harness to re-execute the
//! file and check the recorded status class.

use super::EndpointGenError;
use crate::harness::{Executor, HttpRequestSpec, ResponseClass};
use crate::model::{Endpoint, EndpointId};
use crate::runlog::{RunLog, RunRecord};
use crate::template::render;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const STEP_MARKER: &str = "// http-step: ";

/// The replayable form of one emitted HTTP step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayStep {
    pub request: HttpRequestSpec,
    pub status: u16,
    pub class: ResponseClass,
}

fn sanitize_ident(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn escape_java(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

fn split_class(qualified: &str) -> (String, String) {
    match qualified.rsplit_once('.') {
        Some((package, simple)) => (package.to_string(), simple.to_string()),
        None => (String::new(), qualified.to_string()),
    }
}

/// Select the requests worth emitting: those that contributed coverage and
/// those that revealed faults.
fn select_steps(log: &RunLog) -> Vec<ReplayStep> {
    log.records
        .iter()
        .filter_map(|record| match record {
            RunRecord::RequestExecuted {
                response,
                class,
                delta,
            } if !delta.is_empty() || *class == ResponseClass::Fault => Some(ReplayStep {
                request: response.request.clone(),
                status: response.status,
                class: *class,
            }),
            _ => None,
        })
        .collect()
}

/// Emit one test file per endpoint class under `out_dir`, mirroring the
/// source package structure. Returns the written paths; an empty selection
/// writes nothing.
pub fn emit_endpoint_tests(
    log: &RunLog,
    endpoints: &[Endpoint],
    template_dir: &Path,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, EndpointGenError> {
    let template = std::fs::read_to_string(template_dir.join("endpoint_test.tmpl"))?;
    let by_id: BTreeMap<&EndpointId, &Endpoint> =
        endpoints.iter().map(|e| (&e.endpoint_id, e)).collect();

    let mut per_class: BTreeMap<String, Vec<ReplayStep>> = BTreeMap::new();
    for step in select_steps(log) {
        let Some(endpoint) = by_id.get(&step.request.endpoint_id) else {
            continue;
        };
        per_class
            .entry(endpoint.class_name.clone())
            .or_default()
            .push(step);
    }

    let mut written = Vec::new();
    for (class_name, steps) in per_class {
        let (package, simple) = split_class(&class_name);
        let test_class = format!("{simple}EndpointTest");
        let tests: Vec<serde_json::Value> = steps
            .iter()
            .enumerate()
            .map(|(i, step)| {
                let marker = serde_json::to_string(step).expect("step serializes");
                let name = format!(
                    "{}_{}_{}",
                    sanitize_ident(&step.request.method.to_string().to_lowercase()),
                    sanitize_ident(&step.request.resolved_path),
                    i + 1
                );
                let body = step.request.body.as_ref().map(|b| {
                    json!({
                        "content_type": b.content_type,
                        "body_escaped": escape_java(&b.content),
                    })
                });
                json!({
                    "name": name,
                    "marker": marker,
                    "method_lower": step.request.method.to_string().to_lowercase(),
                    "path_and_query": escape_java(&step.request.path_and_query()),
                    "status": step.status,
                    "body": body.map(|b| vec![b]).unwrap_or_default(),
                })
            })
            .collect();
        let context = json!({
            "package": package,
            "test_class": test_class,
            "class_simple": simple,
            "tests": tests,
        });
        let rendered = render(&template, &context)?;

        let mut path = out_dir.to_path_buf();
        for segment in package.split('.').filter(|s| !s.is_empty()) {
            path.push(segment);
        }
        std::fs::create_dir_all(&path)?;
        path.push(format!("{test_class}.java"));
        std::fs::write(&path, rendered)?;
        written.push(path);
    }
    Ok(written)
}

/// Parse the marker lines back out of an emitted test file.
pub fn parse_replay_steps(text: &str) -> Vec<ReplayStep> {
    text.lines()
        .filter_map(|line| {
            let idx = line.find(STEP_MARKER)?;
            serde_json::from_str(&line[idx + STEP_MARKER.len()..]).ok()
        })
        .collect()
}

/// Re-execute every step of an emitted test file and report
/// (step, replayed status, replayed class).
pub fn replay_test_file(
    path: &Path,
    executor: &Executor,
) -> Result<Vec<(ReplayStep, u16, ResponseClass)>, EndpointGenError> {
    let text = std::fs::read_to_string(path)?;
    let mut results = Vec::new();
    for step in parse_replay_steps(&text) {
        let record = executor.execute(&step.request)?;
        let class = crate::harness::classify(&record);
        results.push((step, record.status, class));
    }
    Ok(results)
}
