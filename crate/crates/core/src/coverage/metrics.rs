//! Coverage report computation. Pure: recomputing from a persisted run log
//! equals the live report exactly.

use super::{CoverageSnapshot, LineKey, ReachabilityScope, Universe};
use crate::model::EndpointId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// A percentage in [0, 100], or `n/a` when the denominator is empty.
/// Never NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Percent(pub Option<f64>);

impl Percent {
    pub fn ratio(numerator: usize, denominator: usize) -> Self {
        if denominator == 0 {
            Percent(None)
        } else {
            Percent(Some(numerator as f64 * 100.0 / denominator as f64))
        }
    }

    pub fn value(&self) -> Option<f64> {
        self.0
    }

    /// Table rendering: `n/a` for empty denominators.
    pub fn display(&self) -> String {
        match self.0 {
            Some(v) => format!("{:.1}", v),
            None => "n/a".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointCoverage {
    pub endpoint_id: EndpointId,
    pub reachability_line: Percent,
    pub reachability_branch: Percent,
    pub covered_lines: usize,
    pub scope_lines: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub line: Percent,
    pub branch: Percent,
    pub db_line: Percent,
    pub operation: Percent,
    pub per_endpoint: Vec<EndpointCoverage>,
    pub covered_lines: usize,
    pub universe_lines: usize,
    pub covered_branches: usize,
    pub universe_branches: usize,
    pub covered_db_lines: usize,
    pub universe_db_lines: usize,
    pub operations_hit: usize,
    pub operations_total: usize,
}

/// Compute the coverage report from a snapshot, the per-endpoint scopes, the
/// set of endpoints with at least one executed request, and the provider
/// universe.
pub fn metrics(
    snapshot: &CoverageSnapshot,
    scopes: &[ReachabilityScope],
    operations_hit: &BTreeSet<EndpointId>,
    operations_total: usize,
    universe: &Universe,
) -> CoverageReport {
    let covered_lines: BTreeSet<&LineKey> = snapshot
        .covered_lines
        .iter()
        .filter(|k| universe.lines.contains(*k))
        .collect();
    let covered_branches: usize = snapshot
        .covered_branches
        .iter()
        .filter(|k| universe.branches.contains(*k))
        .count();

    let db_universe: BTreeSet<&LineKey> = scopes.iter().flat_map(|s| s.db_lines.iter()).collect();
    let covered_db = db_universe
        .iter()
        .filter(|k| snapshot.covered_lines.contains(**k))
        .count();

    let per_endpoint = scopes
        .iter()
        .map(|scope| {
            let covered = scope
                .reachable_lines
                .iter()
                .filter(|k| snapshot.covered_lines.contains(*k))
                .count();
            let branch_covered = scope
                .reachable_branches
                .iter()
                .filter(|k| snapshot.covered_branches.contains(*k))
                .count();
            EndpointCoverage {
                endpoint_id: scope.endpoint_id.clone(),
                reachability_line: Percent::ratio(covered, scope.reachable_lines.len()),
                reachability_branch: Percent::ratio(branch_covered, scope.reachable_branches.len()),
                covered_lines: covered,
                scope_lines: scope.reachable_lines.len(),
            }
        })
        .collect();

    CoverageReport {
        line: Percent::ratio(covered_lines.len(), universe.lines.len()),
        branch: Percent::ratio(covered_branches, universe.branches.len()),
        db_line: Percent::ratio(covered_db, db_universe.len()),
        operation: Percent::ratio(operations_hit.len(), operations_total),
        per_endpoint,
        covered_lines: covered_lines.len(),
        universe_lines: universe.lines.len(),
        covered_branches,
        universe_branches: universe.branches.len(),
        covered_db_lines: covered_db,
        universe_db_lines: db_universe.len(),
        operations_hit: operations_hit.len(),
        operations_total,
    }
}
