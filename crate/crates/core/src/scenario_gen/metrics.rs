//! Scenario quality metrics: counts, sequence lengths, endpoint-class
//! diversity, and the good-path / bad-path split.
//!
//! A scenario is good-path iff every executed block ended in 2xx, and
//! bad-path iff any block produced a 5xx.

use super::{AtomicBlock, TestScenario};
use crate::model::Endpoint;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub name: String,
    pub sequence_length: usize,
    pub endpoint_classes: usize,
    pub good_path: bool,
    pub bad_path: bool,
    pub blocks_done: usize,
    pub blocks_total: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    pub count: usize,
    pub mean_sequence_length: f64,
    pub multi_class_percent: f64,
    pub good_path_percent: f64,
    pub bad_path_percent: f64,
    pub rows: Vec<ScenarioRow>,
}

/// Classify one executed scenario.
pub fn classify_scenario(blocks: &[AtomicBlock]) -> (bool, bool) {
    let statuses: Vec<u16> = blocks
        .iter()
        .flat_map(|b| b.requests.iter().map(|r| r.status))
        .collect();
    if statuses.is_empty() {
        return (false, false);
    }
    let good = statuses.iter().all(|s| (200..300).contains(s));
    let bad = statuses.iter().any(|s| (500..600).contains(s));
    (good, bad)
}

/// Pure aggregation over executed scenarios.
pub fn scenario_metrics(
    outcomes: &[(TestScenario, Vec<AtomicBlock>)],
    endpoints: &[Endpoint],
) -> ScenarioMetrics {
    let rows: Vec<ScenarioRow> = outcomes
        .iter()
        .map(|(scenario, blocks)| {
            let classes: BTreeSet<&str> = blocks
                .iter()
                .filter_map(|b| {
                    endpoints
                        .iter()
                        .find(|e| e.endpoint_id == b.endpoint_id)
                        .map(|e| e.class_name.as_str())
                })
                .collect();
            let (good_path, bad_path) = classify_scenario(blocks);
            ScenarioRow {
                name: scenario.name.clone(),
                sequence_length: blocks.len(),
                endpoint_classes: classes.len(),
                good_path,
                bad_path,
                blocks_done: blocks
                    .iter()
                    .filter(|b| b.status == super::BlockStatus::Done)
                    .count(),
                blocks_total: blocks.len(),
            }
        })
        .collect();

    let count = rows.len();
    let percent = |n: usize| {
        if count == 0 {
            0.0
        } else {
            n as f64 * 100.0 / count as f64
        }
    };
    ScenarioMetrics {
        count,
        mean_sequence_length: if count == 0 {
            0.0
        } else {
            rows.iter().map(|r| r.sequence_length as f64).sum::<f64>() / count as f64
        },
        multi_class_percent: percent(rows.iter().filter(|r| r.endpoint_classes > 1).count()),
        good_path_percent: percent(rows.iter().filter(|r| r.good_path).count()),
        bad_path_percent: percent(rows.iter().filter(|r| r.bad_path).count()),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::ExecutedRequest;
    use crate::harness::{HttpRequestSpec, RequestOrigin};
    use crate::model::HttpMethod;
    use crate::scenario_gen::BlockStatus;

    fn executed(endpoint: &Endpoint, status: u16) -> ExecutedRequest {
        ExecutedRequest {
            request: HttpRequestSpec {
                endpoint_id: endpoint.endpoint_id.clone(),
                method: endpoint.http_method,
                resolved_path: endpoint.path.clone(),
                query: vec![],
                headers: vec![],
                body: None,
                origin: RequestOrigin::Scenario,
            },
            status,
            class: crate::harness::classify_status(status),
            summary: None,
        }
    }

    fn scenario_with_statuses(statuses: &[u16]) -> (TestScenario, Vec<AtomicBlock>, Vec<Endpoint>) {
        let endpoints: Vec<Endpoint> = (0..statuses.len())
            .map(|i| Endpoint::new(format!("c.K{i}"), "m()", &format!("/e{i}"), HttpMethod::Get))
            .collect();
        let blocks: Vec<AtomicBlock> = statuses
            .iter()
            .enumerate()
            .map(|(i, status)| {
                let mut b = AtomicBlock::new(
                    format!("b{i}"),
                    format!("step {i}"),
                    endpoints[i].endpoint_id.clone(),
                );
                b.status = BlockStatus::Done;
                b.requests.push(executed(&endpoints[i], *status));
                b
            })
            .collect();
        let scenario = TestScenario {
            name: "s".into(),
            given: vec![],
            when: vec![],
            then: vec![],
            endpoint_sequence: endpoints.iter().map(|e| e.endpoint_id.clone()).collect(),
        };
        (scenario, blocks, endpoints)
    }

    #[test]
    fn all_2xx_is_good_path() {
        let (s, b, e) = scenario_with_statuses(&[200, 201, 200]);
        let m = scenario_metrics(&[(s, b)], &e);
        assert_eq!(m.count, 1);
        assert_eq!(m.mean_sequence_length, 3.0);
        assert_eq!(m.good_path_percent, 100.0);
        assert_eq!(m.bad_path_percent, 0.0);
        assert_eq!(m.multi_class_percent, 100.0);
    }

    #[test]
    fn any_5xx_is_bad_path() {
        let (s, b, e) = scenario_with_statuses(&[200, 500]);
        let m = scenario_metrics(&[(s, b)], &e);
        assert_eq!(m.good_path_percent, 0.0);
        assert_eq!(m.bad_path_percent, 100.0);
    }

    #[test]
    fn a_4xx_is_neither_good_nor_bad() {
        let (s, b, e) = scenario_with_statuses(&[200, 404]);
        let m = scenario_metrics(&[(s, b)], &e);
        assert_eq!(m.good_path_percent, 0.0);
        assert_eq!(m.bad_path_percent, 0.0);
    }
}
