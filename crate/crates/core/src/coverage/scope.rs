//! Reachability scopes: the lines and branches statically reachable from an
//! endpoint's handler method.

use super::{BranchKey, LineKey};
use crate::ingest::{reachable_method_index, IngestError, SourceUnit};
use crate::model::{Endpoint, EndpointId};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// The coverage-relevant slice of code for one endpoint.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReachabilityScope {
    pub endpoint_id: EndpointId,
    pub reachable_lines: BTreeSet<LineKey>,
    pub reachable_branches: BTreeSet<BranchKey>,
    /// Database call-site lines inside the scope; always a subset of
    /// `reachable_lines`.
    pub db_lines: BTreeSet<LineKey>,
}

fn basename(path: &str) -> String {
    path.rsplit(['/', '\\']).next().unwrap_or(path).to_string()
}

/// Executable lines of a method body: lines strictly between the opening and
/// closing braces whose trimmed text is neither empty nor a lone brace.
/// Branch lines (if/else/for/while/switch/case) contribute branch indices
/// 0 (condition true) and 1 (condition false).
pub fn executable_lines_of(
    body: &str,
    body_lines: (u32, u32),
) -> (BTreeSet<u32>, BTreeSet<(u32, u32)>) {
    let mut lines = BTreeSet::new();
    let mut branches = BTreeSet::new();
    let (start, end) = body_lines;
    for (offset, text) in body.lines().enumerate() {
        let line_no = start + offset as u32;
        if line_no <= start || line_no >= end {
            continue;
        }
        let trimmed = text.trim();
        if trimmed.is_empty() || trimmed == "{" || trimmed == "}" {
            continue;
        }
        lines.insert(line_no);
        if is_branch_line(trimmed) {
            branches.insert((line_no, 0));
            branches.insert((line_no, 1));
        }
    }
    (lines, branches)
}

fn is_branch_line(trimmed: &str) -> bool {
    ["if ", "if(", "} else", "else ", "for ", "for(", "while ", "while(", "switch ", "switch(", "case "]
        .iter()
        .any(|kw| trimmed.starts_with(kw))
}

/// Build the scope for one endpoint: all executable lines and branches of
/// methods reachable from its handler, plus the endpoint's database lines
/// intersected with the scope.
pub fn build_reachability_scope(
    endpoint: &Endpoint,
    units: &[SourceUnit],
) -> Result<ReachabilityScope, IngestError> {
    let root = format!("{}.{}", endpoint.class_name, endpoint.method_signature);
    let reached = reachable_method_index(&root, units)?;

    let mut scope = ReachabilityScope {
        endpoint_id: endpoint.endpoint_id.clone(),
        ..Default::default()
    };
    let mut class_file: BTreeMap<String, String> = BTreeMap::new();
    for method in &reached {
        let file = basename(&method.file_path);
        class_file.insert(method.class.clone(), file.clone());
        let (lines, branches) = executable_lines_of(&method.body, method.body_lines);
        for line in lines {
            scope.reachable_lines.insert((file.clone(), line));
        }
        for (line, idx) in branches {
            scope.reachable_branches.insert((file.clone(), line, idx));
        }
    }
    for op in &endpoint.db_ops {
        if let Some(file) = class_file.get(&op.enclosing_class) {
            let key = (file.clone(), op.line);
            if scope.reachable_lines.contains(&key) {
                scope.db_lines.insert(key);
            }
        }
    }
    Ok(scope)
}

/// Build scopes for many endpoints (parallel when enabled), in input order.
pub fn build_scopes(
    endpoints: &[Endpoint],
    units: &[SourceUnit],
) -> Result<Vec<ReachabilityScope>, IngestError> {
    crate::par::map_collect(endpoints, |e| build_reachability_scope(e, units))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HttpMethod;

    const SERVICE: &str = r#"package app;
public class Service {
    public int leaf(int x) {
        return x + 1;
    }
    public int root(int x) {
        int y = leaf(x);
        if (y > 3) {
            return y;
        }
        return 0;
    }
}
"#;

    #[test]
    fn leaf_endpoint_scope_is_its_own_lines() {
        let units = vec![SourceUnit::new("dir/Service.java", SERVICE)];
        let e = Endpoint::new("app.Service", "leaf(int)", "/leaf", HttpMethod::Get);
        let scope = build_reachability_scope(&e, &units).unwrap();
        let lines: Vec<u32> = scope.reachable_lines.iter().map(|(_, l)| *l).collect();
        assert_eq!(lines, vec![4]);
        assert!(scope.reachable_branches.is_empty());
        assert!(scope
            .reachable_lines
            .iter()
            .all(|(f, _)| f == "Service.java"));
    }

    #[test]
    fn root_scope_includes_callee_and_branches() {
        let units = vec![SourceUnit::new("Service.java", SERVICE)];
        let e = Endpoint::new("app.Service", "root(int)", "/root", HttpMethod::Get);
        let scope = build_reachability_scope(&e, &units).unwrap();
        let lines: Vec<u32> = scope.reachable_lines.iter().map(|(_, l)| *l).collect();
        assert_eq!(lines, vec![4, 7, 8, 9, 11]);
        let branches: Vec<(u32, u32)> = scope
            .reachable_branches
            .iter()
            .map(|(_, l, i)| (*l, *i))
            .collect();
        assert_eq!(branches, vec![(8, 0), (8, 1)]);
    }

    #[test]
    fn db_lines_subset_of_reachable() {
        let text = "package app;\npublic class S {\n  public void save(Owner o) {\n    ownerRepository.save(o);\n  }\n}\n";
        let units = vec![SourceUnit::new("S.java", text)];
        let mut e = Endpoint::new("app.S", "save(Owner)", "/s", HttpMethod::Post);
        e.db_ops.push(crate::model::DatabaseOperation {
            framework: "jpa".into(),
            enclosing_class: "app.S".into(),
            method_signature: "save(Owner)".into(),
            line: 4,
            crud: crate::model::CrudKind::Create,
        });
        let scope = build_reachability_scope(&e, &units).unwrap();
        assert!(scope.db_lines.is_subset(&scope.reachable_lines));
        assert_eq!(scope.db_lines.len(), 1);
    }
}
