//! Database-operation detection via the published persistence-call pattern
//! table (see `docs/db-pattern-table.md`).
//!
//! A call site counts as a database operation when its name matches the
//! table and its receiver looks like a persistence component (name ending in
//! `repository`, `dao`, or `store`, case-insensitive). Unknown persistence
//! calls are ignored.

use super::java::ParsedUnit;
use super::{build_call_chain_slice, parse_units, IngestError, SourceUnit};
use crate::model::{CrudKind, DatabaseOperation, Endpoint};

/// (call name or prefix, is_prefix, crud, framework tag)
pub const DB_PATTERN_TABLE: &[(&str, bool, CrudKind, &str)] = &[
    ("save", false, CrudKind::Create, "jpa"),
    ("saveAll", false, CrudKind::Create, "jpa"),
    ("persist", false, CrudKind::Create, "jpa"),
    ("insert", false, CrudKind::Create, "jdbc"),
    ("findById", false, CrudKind::Read, "jpa"),
    ("findAll", false, CrudKind::Read, "jpa"),
    ("findBy", true, CrudKind::Read, "jpa"),
    ("getBy", true, CrudKind::Read, "jpa"),
    ("queryBy", true, CrudKind::Read, "jpa"),
    ("selectBy", true, CrudKind::Read, "jdbc"),
    ("load", false, CrudKind::Read, "jpa"),
    ("count", false, CrudKind::Read, "jpa"),
    ("merge", false, CrudKind::Update, "jpa"),
    ("update", false, CrudKind::Update, "jdbc"),
    ("updateBy", true, CrudKind::Update, "jdbc"),
    ("delete", false, CrudKind::Delete, "jpa"),
    ("deleteById", false, CrudKind::Delete, "jpa"),
    ("deleteBy", true, CrudKind::Delete, "jpa"),
    ("remove", false, CrudKind::Delete, "jpa"),
];

const PERSISTENCE_RECEIVER_SUFFIXES: [&str; 3] = ["repository", "dao", "store"];

fn lookup_pattern(call_name: &str) -> Option<(CrudKind, &'static str)> {
    // Exact names first, then prefix families.
    for (name, is_prefix, crud, framework) in DB_PATTERN_TABLE {
        if !is_prefix && call_name == *name {
            return Some((*crud, framework));
        }
    }
    for (name, is_prefix, crud, framework) in DB_PATTERN_TABLE {
        if *is_prefix && call_name.starts_with(name) {
            return Some((*crud, framework));
        }
    }
    None
}

fn is_persistence_receiver(receiver: &str) -> bool {
    let lower = receiver.to_lowercase();
    PERSISTENCE_RECEIVER_SUFFIXES
        .iter()
        .any(|s| lower.ends_with(s))
}

/// One detected database call site.
#[derive(Debug, Clone, PartialEq)]
pub struct DbSite {
    pub file_path: String,
    pub op: DatabaseOperation,
}

fn sites_in_unit(unit: &ParsedUnit) -> Vec<DbSite> {
    let mut out = Vec::new();
    for method in &unit.methods {
        for call in &method.calls {
            let Some(receiver) = &call.receiver else {
                continue;
            };
            if !is_persistence_receiver(receiver) {
                continue;
            }
            let Some((crud, framework)) = lookup_pattern(&call.name) else {
                continue;
            };
            out.push(DbSite {
                file_path: unit.file_path.clone(),
                op: DatabaseOperation {
                    framework: framework.to_string(),
                    enclosing_class: unit.qualified_class(),
                    method_signature: method.signature(),
                    line: call.line,
                    crud,
                },
            });
        }
    }
    out
}

/// All database call sites across the corpus, in (file, line) order.
pub fn extract_db_operations(units: &[SourceUnit]) -> Result<Vec<DbSite>, IngestError> {
    let parsed = parse_units(units)?;
    let mut sites: Vec<DbSite> = parsed.iter().flat_map(sites_in_unit).collect();
    sites.sort_by(|a, b| {
        a.file_path
            .cmp(&b.file_path)
            .then_with(|| a.op.line.cmp(&b.op.line))
    });
    Ok(sites)
}

/// Attach each detected site to every endpoint whose call-chain slice
/// reaches the enclosing method.
pub fn attach_db_operations(
    endpoints: &mut [Endpoint],
    units: &[SourceUnit],
    depth: u32,
) -> Result<(), IngestError> {
    let sites = extract_db_operations(units)?;
    for endpoint in endpoints.iter_mut() {
        let root = format!("{}.{}", endpoint.class_name, endpoint.method_signature);
        let slice = match build_call_chain_slice(&root, units, depth) {
            Ok(slice) => slice,
            Err(IngestError::MethodNotFound(_)) => continue,
            Err(e) => return Err(e),
        };
        let reached: Vec<&str> = slice
            .reachable_method_bodies
            .iter()
            .map(|(sig, _)| sig.as_str())
            .collect();
        endpoint.db_ops = sites
            .iter()
            .filter(|site| {
                let sig = format!("{}.{}", site.op.enclosing_class, site.op.method_signature);
                reached.contains(&sig.as_str())
            })
            .map(|site| site.op.clone())
            .collect();
    }
    Ok(())
}
