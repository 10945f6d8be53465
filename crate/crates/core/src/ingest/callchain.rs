//! Name+arity call resolution, call-chain slices, and the registered code
//! queries exposed to agents.
//!
//! Resolution is intra-corpus only: a call site resolves to every parsed
//! method with the same name and arity. The slice used for semantic
//! extraction additionally requires that the request object or a value
//! derived from the caller's parameters flows into the call.

use super::java::{ParsedMethod, ParsedUnit};
use super::{parse_units, CallChainSlice, IngestError, SourceUnit};
use std::collections::{BTreeSet, VecDeque};

/// One method included in a reachability walk.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachedMethod {
    pub class: String,
    pub signature: String,
    pub file_path: String,
    pub body: String,
    /// Inclusive 1-based body line range.
    pub body_lines: (u32, u32),
    pub depth: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct MethodRef {
    unit: usize,
    method: usize,
}

struct MethodIndex<'a> {
    units: &'a [ParsedUnit],
    entries: Vec<(MethodRef, String, String, usize)>, // (ref, class, name, arity)
}

impl<'a> MethodIndex<'a> {
    fn build(units: &'a [ParsedUnit]) -> Self {
        let mut entries = Vec::new();
        for (ui, unit) in units.iter().enumerate() {
            for (mi, method) in unit.methods.iter().enumerate() {
                entries.push((
                    MethodRef { unit: ui, method: mi },
                    unit.qualified_class(),
                    method.name.clone(),
                    method.params.len(),
                ));
            }
        }
        Self { units, entries }
    }

    fn get(&self, r: MethodRef) -> (&ParsedUnit, &ParsedMethod) {
        let unit = &self.units[r.unit];
        (unit, &unit.methods[r.method])
    }

    /// All methods matching name+arity, in deterministic (class, name) order.
    fn resolve(&self, name: &str, arity: usize) -> Vec<MethodRef> {
        let mut hits: Vec<(&String, MethodRef)> = self
            .entries
            .iter()
            .filter(|(_, _, n, a)| n == name && *a == arity)
            .map(|(r, class, _, _)| (class, *r))
            .collect();
        hits.sort_by(|a, b| a.0.cmp(b.0));
        hits.into_iter().map(|(_, r)| r).collect()
    }

    /// Find a root by `Class.method`, bare `method`, or a full signature.
    fn find_root(&self, root: &str) -> Option<MethodRef> {
        let (class_part, method_part) = match root.rsplit_once('.') {
            Some((c, m)) => (Some(c), m),
            None => (None, root),
        };
        let method_name = method_part.split('(').next().unwrap_or(method_part);
        let mut candidates: Vec<(&String, MethodRef)> = self
            .entries
            .iter()
            .filter(|(r, class, name, _)| {
                if name != method_name {
                    return false;
                }
                match class_part {
                    Some(c) => class == c || class.ends_with(&format!(".{c}")),
                    None => true,
                }
                .then(|| {
                    let (_, m) = self.get(*r);
                    // When a full signature was given it must match exactly.
                    !method_part.contains('(') || m.signature() == method_part
                })
                .unwrap_or(false)
            })
            .map(|(r, class, _, _)| (class, *r))
            .collect();
        candidates.sort_by(|a, b| a.0.cmp(b.0));
        candidates.first().map(|(_, r)| *r)
    }
}

/// Identifiers through which endpoint input flows inside a method: its
/// parameters, conventional request-object names, and locals assigned from
/// already-tainted expressions (single forward pass).
fn tainted_idents(method: &ParsedMethod) -> BTreeSet<String> {
    let mut tainted: BTreeSet<String> = method.params.iter().map(|p| p.name.clone()).collect();
    tainted.insert("request".to_string());
    tainted.insert("req".to_string());
    for line in method.body.lines() {
        let Some(eq) = line.find('=') else { continue };
        if line[..eq].ends_with(['=', '!', '<', '>']) || line.as_bytes().get(eq + 1) == Some(&b'=')
        {
            continue;
        }
        let lhs = line[..eq].trim();
        let rhs = &line[eq + 1..];
        let Some(var) = lhs.split_whitespace().last() else {
            continue;
        };
        if var.chars().all(|c| c.is_alphanumeric() || c == '_')
            && tainted.iter().any(|t| mentions_ident(rhs, t))
        {
            tainted.insert(var.to_string());
        }
    }
    tainted
}

fn mentions_ident(expr: &str, ident: &str) -> bool {
    let bytes = expr.as_bytes();
    let mut start = 0;
    while let Some(pos) = expr[start..].find(ident) {
        let begin = start + pos;
        let end = begin + ident.len();
        let before_ok = begin == 0
            || !(bytes[begin - 1].is_ascii_alphanumeric() || bytes[begin - 1] == b'_');
        let after_ok =
            end >= bytes.len() || !(bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_');
        if before_ok && after_ok {
            return true;
        }
        start = end;
    }
    false
}

/// Breadth-first reachability from a root method.
///
/// `restrict_flow` limits edges to calls whose arguments mention a tainted
/// identifier of the caller. `depth_limit` of `None` walks to a fixpoint.
/// Returns the reached methods in BFS order plus a truncation flag.
fn walk(
    index: &MethodIndex,
    root: MethodRef,
    depth_limit: Option<u32>,
    restrict_flow: bool,
) -> (Vec<(MethodRef, u32)>, bool) {
    let mut seen: Vec<MethodRef> = vec![root];
    let mut order: Vec<(MethodRef, u32)> = vec![(root, 0)];
    let mut queue: VecDeque<(MethodRef, u32)> = VecDeque::from([(root, 0)]);
    let mut truncated = false;

    while let Some((current, depth)) = queue.pop_front() {
        let (_, method) = index.get(current);
        let tainted = restrict_flow.then(|| tainted_idents(method));
        for call in &method.calls {
            if let Some(tainted) = &tainted {
                let flows = call
                    .args
                    .iter()
                    .any(|arg| tainted.iter().any(|t| mentions_ident(arg, t)));
                if !flows {
                    continue;
                }
            }
            let targets = index.resolve(&call.name, call.args.len());
            for target in targets {
                if target == current || seen.contains(&target) {
                    continue;
                }
                if let Some(limit) = depth_limit {
                    if depth + 1 > limit {
                        truncated = true;
                        continue;
                    }
                }
                seen.push(target);
                order.push((target, depth + 1));
                queue.push_back((target, depth + 1));
            }
        }
    }
    (order, truncated)
}

fn reached(index: &MethodIndex, r: MethodRef, depth: u32) -> ReachedMethod {
    let (unit, method) = index.get(r);
    ReachedMethod {
        class: unit.qualified_class(),
        signature: format!("{}.{}", unit.qualified_class(), method.signature()),
        file_path: unit.file_path.clone(),
        body: method.body.clone(),
        body_lines: method.body_lines,
        depth,
    }
}

/// Build the flow-restricted call-chain slice for semantic extraction.
pub fn build_call_chain_slice(
    root: &str,
    units: &[SourceUnit],
    depth_limit: u32,
) -> Result<CallChainSlice, IngestError> {
    let parsed = parse_units(units)?;
    let index = MethodIndex::build(&parsed);
    let root_ref = index
        .find_root(root)
        .ok_or_else(|| IngestError::MethodNotFound(root.to_string()))?;
    let (order, truncated) = walk(&index, root_ref, Some(depth_limit), true);
    let bodies: Vec<(String, String)> = order
        .iter()
        .map(|(r, d)| {
            let m = reached(&index, *r, *d);
            (m.signature, m.body)
        })
        .collect();
    let depth = order.iter().map(|(_, d)| *d).max().unwrap_or(0);
    Ok(CallChainSlice {
        root_method: bodies[0].0.clone(),
        reachable_method_bodies: bodies,
        depth,
        truncated,
    })
}

/// Unrestricted reachability (used for coverage scopes): every method
/// reachable from the root by name+arity resolution, to a fixpoint.
pub fn reachable_method_index(
    root: &str,
    units: &[SourceUnit],
) -> Result<Vec<ReachedMethod>, IngestError> {
    let parsed = parse_units(units)?;
    let index = MethodIndex::build(&parsed);
    let root_ref = index
        .find_root(root)
        .ok_or_else(|| IngestError::MethodNotFound(root.to_string()))?;
    let (order, _) = walk(&index, root_ref, None, false);
    Ok(order.iter().map(|(r, d)| reached(&index, *r, *d)).collect())
}

/// Code queries registered for the agents' context tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeQuery {
    CalleesOf,
    BodyOf,
    CallersOf,
}

impl CodeQuery {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "callees-of" => Some(CodeQuery::CalleesOf),
            "body-of" => Some(CodeQuery::BodyOf),
            "callers-of" => Some(CodeQuery::CallersOf),
            _ => None,
        }
    }
}

/// Run one code query against the corpus. The result is a list of context
/// strings (one per method), empty when nothing matches.
pub fn run_code_query(
    query: &str,
    method: &str,
    units: &[SourceUnit],
) -> Result<Vec<String>, IngestError> {
    let query = CodeQuery::parse(query)
        .ok_or_else(|| IngestError::UnknownCodeQuery(query.to_string()))?;
    let parsed = parse_units(units)?;
    let index = MethodIndex::build(&parsed);
    let root = index
        .find_root(method)
        .ok_or_else(|| IngestError::MethodNotFound(method.to_string()))?;
    let (unit, m) = index.get(root);

    let render = |r: MethodRef| {
        let (u, m) = index.get(r);
        format!("// {}.{}\n{}", u.qualified_class(), m.signature(), m.body)
    };

    let out = match query {
        CodeQuery::BodyOf => vec![format!(
            "// {}.{}\n{}",
            unit.qualified_class(),
            m.signature(),
            m.body
        )],
        CodeQuery::CalleesOf => {
            let mut targets = Vec::new();
            for call in &m.calls {
                for t in index.resolve(&call.name, call.args.len()) {
                    if t != root && !targets.contains(&t) {
                        targets.push(t);
                    }
                }
            }
            targets.into_iter().map(render).collect()
        }
        CodeQuery::CallersOf => {
            let mut callers = Vec::new();
            for (r, _, _, _) in &index.entries {
                if *r == root {
                    continue;
                }
                let (_, candidate) = index.get(*r);
                let calls_root = candidate
                    .calls
                    .iter()
                    .any(|c| c.name == m.name && c.args.len() == m.params.len());
                if calls_root && !callers.contains(r) {
                    callers.push(*r);
                }
            }
            callers.into_iter().map(render).collect()
        }
    };
    Ok(out)
}
