//! White-box service-level test generation for HTTP APIs.
//!
//! The library analyzes annotated service source code (no OpenAPI document
//! required), builds an endpoint model and an operation dependency graph,
//! and drives plan-act-reflect agent loops that produce endpoint-focused
//! and scenario-based executable HTTP tests.
//!
//! Module map:
//! - [`model`] — endpoint model types, inter-parameter dependency semantics,
//!   and the constraint expression language
//! - [`ingest`] — endpoint discovery and extraction from source units or
//!   descriptor documents
//! - [`gateway`] — the single choke point for model interaction (live,
//!   replay, and scripted-stub providers)
//! - [`odg`] — operation dependency graph construction and layering
//! - [`harness`] — concrete HTTP request construction and execution
//! - [`coverage`] — coverage snapshots, reachability scopes, and metrics
//! - [`agent`] — shared plan-act-reflect loop machinery
//! - [`endpoint_gen`] — the endpoint-focused generation pipeline
//! - [`scenario_gen`] — the scenario extraction and reification pipeline
//! - [`faults`] — pattern-based deduplication of fault-revealing responses
//! - [`toyservice`] — the bundled deterministic in-process service used as a
//!   hermetic test target
//! - [`report`] — consolidated run reports recomputed from persisted logs

pub mod agent;
pub mod coverage;
pub mod diag;
pub mod endpoint_gen;
pub mod faults;
pub mod gateway;
pub mod harness;
pub mod ingest;
pub mod model;
pub mod odg;
pub mod par;
pub mod report;
pub mod runlog;
pub mod scenario_gen;
pub mod template;
pub mod toyservice;

/// Schema tag carried by every persisted document format.
pub const SCHEMA_VERSION: &str = "1";
