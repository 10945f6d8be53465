//! Coverage: snapshots over a pluggable provider, reachability scopes, and
//! the line / branch / database / operation metrics.
//!
//! Line identity is `(file basename, 1-based line)`; branch identity adds a
//! branch index (0 = condition true, 1 = condition false). The simulated
//! provider is a pure function of the executed (endpoint, input-class)
//! multiset, so replays reproduce coverage exactly. A live adapter can poll
//! an HTTP endpoint exposing the same identifiers.

mod metrics;
mod scope;

pub use metrics::{metrics, CoverageReport, EndpointCoverage, Percent};
pub use scope::{build_reachability_scope, build_scopes, executable_lines_of, ReachabilityScope};

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// `(file basename, line)`.
pub type LineKey = (String, u32);
/// `(file basename, line, branch index)`.
pub type BranchKey = (String, u32, u32);

#[derive(Debug, Error)]
pub enum CoverageError {
    #[error("PROVIDER_UNAVAILABLE: {0}")]
    ProviderUnavailable(String),
}

impl CoverageError {
    pub fn code(&self) -> &'static str {
        match self {
            CoverageError::ProviderUnavailable(_) => "PROVIDER_UNAVAILABLE",
        }
    }
}

/// Covered lines and branches at one instant.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageSnapshot {
    pub covered_lines: BTreeSet<LineKey>,
    pub covered_branches: BTreeSet<BranchKey>,
    /// Monotonic tick, not wall-clock time.
    pub taken_at: u64,
}

impl CoverageSnapshot {
    pub fn is_superset_of(&self, earlier: &CoverageSnapshot) -> bool {
        earlier.covered_lines.is_subset(&self.covered_lines)
            && earlier.covered_branches.is_subset(&self.covered_branches)
    }
}

/// Everything the provider could ever report covered.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Universe {
    pub lines: BTreeSet<LineKey>,
    pub branches: BTreeSet<BranchKey>,
}

/// A coverage source: the simulated provider, or a live adapter polling the
/// instrumented application.
pub trait CoverageProvider: Send + Sync {
    fn snapshot(&self) -> Result<CoverageSnapshot, CoverageError>;
    fn universe(&self) -> Universe;
}

/// Newly covered lines/branches between two snapshots.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageDelta {
    pub new_lines: BTreeSet<LineKey>,
    pub new_branches: BTreeSet<BranchKey>,
}

impl CoverageDelta {
    pub fn is_empty(&self) -> bool {
        self.new_lines.is_empty() && self.new_branches.is_empty()
    }
}

/// Set difference `after - before`. Requires `before` not newer than
/// `after`; snapshots within a run are monotone.
pub fn delta(before: &CoverageSnapshot, after: &CoverageSnapshot) -> CoverageDelta {
    assert!(
        before.taken_at <= after.taken_at,
        "delta arguments out of order"
    );
    CoverageDelta {
        new_lines: after
            .covered_lines
            .difference(&before.covered_lines)
            .cloned()
            .collect(),
        new_branches: after
            .covered_branches
            .difference(&before.covered_branches)
            .cloned()
            .collect(),
    }
}

/// A poller that serializes snapshots and asserts monotonicity within a run.
pub struct SnapshotPoller<'a> {
    provider: &'a dyn CoverageProvider,
    last: std::sync::Mutex<Option<CoverageSnapshot>>,
}

impl<'a> SnapshotPoller<'a> {
    pub fn new(provider: &'a dyn CoverageProvider) -> Self {
        Self {
            provider,
            last: std::sync::Mutex::new(None),
        }
    }

    pub fn snapshot(&self) -> Result<CoverageSnapshot, CoverageError> {
        let snapshot = self.provider.snapshot()?;
        let mut last = self.last.lock().expect("poller lock");
        if let Some(previous) = last.as_ref() {
            assert!(
                snapshot.is_superset_of(previous),
                "coverage snapshot shrank within a run"
            );
        }
        *last = Some(snapshot.clone());
        Ok(snapshot)
    }
}

/// Live adapter: polls an HTTP endpoint returning a JSON object
/// `{"lines": [[file, line], ...], "branches": [[file, line, idx], ...],
///   "universe": {...}}`.
pub struct HttpCoverageProvider {
    url: String,
    client: reqwest::blocking::Client,
}

impl HttpCoverageProvider {
    pub fn new(url: &str) -> Result<Self, CoverageError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(10))
            .build()
            .map_err(|e| CoverageError::ProviderUnavailable(e.to_string()))?;
        Ok(Self {
            url: url.to_string(),
            client,
        })
    }

    fn fetch(&self) -> Result<serde_json::Value, CoverageError> {
        self.client
            .get(&self.url)
            .send()
            .and_then(|r| r.json())
            .map_err(|e| CoverageError::ProviderUnavailable(format!("{}: {e}", self.url)))
    }
}

impl CoverageProvider for HttpCoverageProvider {
    fn snapshot(&self) -> Result<CoverageSnapshot, CoverageError> {
        let value = self.fetch()?;
        Ok(CoverageSnapshot {
            covered_lines: parse_lines(&value["lines"]),
            covered_branches: parse_branches(&value["branches"]),
            taken_at: value["tick"].as_u64().unwrap_or(0),
        })
    }

    fn universe(&self) -> Universe {
        match self.fetch() {
            Ok(value) => Universe {
                lines: parse_lines(&value["universe"]["lines"]),
                branches: parse_branches(&value["universe"]["branches"]),
            },
            Err(_) => Universe::default(),
        }
    }
}

fn parse_lines(value: &serde_json::Value) -> BTreeSet<LineKey> {
    value
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|item| {
            Some((
                item.get(0)?.as_str()?.to_string(),
                item.get(1)?.as_u64()? as u32,
            ))
        })
        .collect()
}

fn parse_branches(value: &serde_json::Value) -> BTreeSet<BranchKey> {
    value
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|item| {
            Some((
                item.get(0)?.as_str()?.to_string(),
                item.get(1)?.as_u64()? as u32,
                item.get(2)?.as_u64()? as u32,
            ))
        })
        .collect()
}
