//! Endpoint discovery and model population from service source code.
//!
//! Two ingestion paths feed the endpoint model: parsing a directory of
//! source files under the supported annotation subset, or loading a neutral
//! descriptor document that bypasses parsing entirely. Semantic extraction
//! (value constraints, IPDs, servlet-style parameter recovery) goes through
//! the [gateway](crate::gateway).

mod callchain;
mod dbops;
mod discover;
mod extract;
pub mod java;

pub use callchain::{build_call_chain_slice, reachable_method_index, run_code_query, CodeQuery};
pub use dbops::{attach_db_operations, extract_db_operations, DbSite, DB_PATTERN_TABLE};
pub use discover::{discover_endpoints, DiscoveryOutput};
pub use extract::{
    analyze_application, extract_ipds, extract_servlet_parameters, extract_value_constraints,
    AnalyzeOptions,
};

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// Default call-resolution depth.
pub const DEFAULT_CALL_DEPTH: u32 = 3;

/// One source file handed to the analyzer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceUnit {
    pub file_path: String,
    pub text: String,
    /// Only `java-subset` is supported.
    pub language_tag: String,
}

impl SourceUnit {
    pub const LANGUAGE: &'static str = "java-subset";

    pub fn new(file_path: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            file_path: file_path.into(),
            text: text.into(),
            language_tag: Self::LANGUAGE.to_string(),
        }
    }
}

/// Bodies of methods reachable from one root via name+arity call resolution,
/// restricted to calls through which the request object or values derived
/// from endpoint parameters flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallChainSlice {
    /// Signature of the root method (`Class.name(Type,..)`).
    pub root_method: String,
    /// `(signature, body text)` in breadth-first order; the root is first.
    pub reachable_method_bodies: Vec<(String, String)>,
    /// Deepest level actually included (root = 0).
    pub depth: u32,
    /// True when the configured depth limit cut off further calls.
    pub truncated: bool,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("PARSE_ERROR: {file}:{line}: {message}")]
    Parse {
        file: String,
        line: u32,
        message: String,
    },
    #[error("METHOD_NOT_FOUND: {0}")]
    MethodNotFound(String),
    #[error("LLM_FORMAT_ERROR: {0}")]
    LlmFormat(String),
    #[error("UNKNOWN_CODE_QUERY: {0}")]
    UnknownCodeQuery(String),
    #[error("unsupported language tag '{0}' (only java-subset)")]
    UnsupportedLanguage(String),
    #[error(transparent)]
    Gateway(#[from] crate::gateway::GatewayError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::Parse { .. } => "PARSE_ERROR",
            IngestError::MethodNotFound(_) => "METHOD_NOT_FOUND",
            IngestError::LlmFormat(_) => "LLM_FORMAT_ERROR",
            IngestError::UnknownCodeQuery(_) => "UNKNOWN_CODE_QUERY",
            IngestError::UnsupportedLanguage(_) => "UNSUPPORTED_LANGUAGE",
            IngestError::Gateway(e) => e.code(),
            IngestError::Io(_) => "IO_ERROR",
        }
    }
}

/// Load every `.java` file under a directory as source units, sorted by path.
pub fn load_source_dir(dir: &Path) -> Result<Vec<SourceUnit>, IngestError> {
    let mut units = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            std::io::Error::new(std::io::ErrorKind::Other, format!("walk {}: {e}", dir.display()))
        })?;
        if entry.file_type().is_file()
            && entry.path().extension().map(|x| x == "java").unwrap_or(false)
        {
            let text = std::fs::read_to_string(entry.path())?;
            units.push(SourceUnit::new(entry.path().to_string_lossy(), text));
        }
    }
    units.sort_by(|a, b| a.file_path.cmp(&b.file_path));
    Ok(units)
}

/// Parse all units (in path order, independently and in parallel when the
/// `parallel` feature is on). The first parse failure aborts ingestion.
pub fn parse_units(units: &[SourceUnit]) -> Result<Vec<java::ParsedUnit>, IngestError> {
    let mut sorted: Vec<&SourceUnit> = units.iter().collect();
    sorted.sort_by(|a, b| a.file_path.cmp(&b.file_path));
    for unit in &sorted {
        if unit.language_tag != SourceUnit::LANGUAGE {
            return Err(IngestError::UnsupportedLanguage(unit.language_tag.clone()));
        }
    }
    let results = crate::par::map_collect(&sorted, |u| java::parse_unit(&u.file_path, &u.text));
    results.into_iter().collect()
}
