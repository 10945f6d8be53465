//! Parser for the supported annotation subset of Java-like service source.
//!
//! This is not a Java frontend. It recognizes exactly the constructs listed
//! in `docs/annotation-subset.md`: package declarations, one top-level class
//! per file, class/method route annotations, parameter-binding annotations,
//! method bodies (for call sites and persistence-call detection), and local
//! assignments. Anything else is skipped with a diagnostic, never silently
//! dropped.

use super::IngestError;
use crate::diag::Diagnostic;

/// One annotation occurrence, e.g. `@GetMapping("/owners")`.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub name: String,
    /// First string literal argument, or the `value = "..."` argument.
    pub value: Option<String>,
    /// `method = ...` argument of a `@RequestMapping`, when present.
    pub method_arg: Option<String>,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedParam {
    pub annotations: Vec<Annotation>,
    pub datatype: String,
    pub name: String,
}

/// A call expression found inside a method body.
#[derive(Debug, Clone, PartialEq)]
pub struct CallSite {
    pub receiver: Option<String>,
    pub name: String,
    /// Raw argument expressions, split at top-level commas.
    pub args: Vec<String>,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedMethod {
    pub name: String,
    pub return_type: String,
    pub params: Vec<ParsedParam>,
    pub annotations: Vec<Annotation>,
    pub body: String,
    /// 1-based line of the declaration.
    pub decl_line: u32,
    /// 1-based line range of the body, inclusive.
    pub body_lines: (u32, u32),
    pub calls: Vec<CallSite>,
}

impl ParsedMethod {
    /// Canonical signature: `name(Type,Type)`.
    pub fn signature(&self) -> String {
        let types: Vec<&str> = self.params.iter().map(|p| p.datatype.as_str()).collect();
        format!("{}({})", self.name, types.join(","))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedUnit {
    pub file_path: String,
    pub package: String,
    pub class_name: String,
    pub class_annotations: Vec<Annotation>,
    pub methods: Vec<ParsedMethod>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ParsedUnit {
    pub fn qualified_class(&self) -> String {
        if self.package.is_empty() {
            self.class_name.clone()
        } else {
            format!("{}.{}", self.package, self.class_name)
        }
    }
}

/// Parse one source unit. Fails with `PARSE_ERROR` (file and line) on
/// malformed input; recoverable oddities become diagnostics on the unit.
pub fn parse_unit(file_path: &str, text: &str) -> Result<ParsedUnit, IngestError> {
    let mut unit = ParsedUnit {
        file_path: file_path.to_string(),
        package: String::new(),
        class_name: String::new(),
        class_annotations: Vec::new(),
        methods: Vec::new(),
        diagnostics: Vec::new(),
    };

    let lines: Vec<&str> = text.lines().collect();
    let mut depth: i32 = 0;
    let mut pending_annotations: Vec<Annotation> = Vec::new();
    let mut i = 0;

    while i < lines.len() {
        let line_no = (i + 1) as u32;
        let raw = lines[i];
        let trimmed = strip_line_comment(raw).trim().to_string();
        if trimmed.is_empty() {
            i += 1;
            continue;
        }

        if depth == 0 && trimmed.starts_with("package ") {
            unit.package = trimmed
                .trim_start_matches("package ")
                .trim_end_matches(';')
                .trim()
                .to_string();
            i += 1;
            continue;
        }
        if depth == 0 && trimmed.starts_with("import ") {
            i += 1;
            continue;
        }

        if trimmed.starts_with('@') {
            pending_annotations.push(parse_annotation(file_path, &trimmed, line_no)?);
            i += 1;
            continue;
        }

        if depth == 0 && is_class_decl(&trimmed) {
            unit.class_name = class_name_of(&trimmed).ok_or_else(|| IngestError::Parse {
                file: file_path.to_string(),
                line: line_no,
                message: "class declaration without a name".to_string(),
            })?;
            unit.class_annotations = std::mem::take(&mut pending_annotations);
            depth += brace_delta(&trimmed);
            i += 1;
            continue;
        }

        if depth == 1 {
            if let Some(sig_end) = find_method_decl(&trimmed) {
                let (method, consumed) =
                    parse_method(file_path, &lines, i, &trimmed, sig_end, line_no)?;
                let mut method = method;
                method.annotations = std::mem::take(&mut pending_annotations);
                unit.methods.push(method);
                i += consumed;
                continue;
            }
            // Field declarations and other members are outside the subset.
            if !pending_annotations.is_empty() {
                pending_annotations.clear();
            }
            if !trimmed.starts_with('}') && !is_field_decl(&trimmed) {
                unit.diagnostics.push(
                    Diagnostic::new(
                        "UNSUPPORTED_CONSTRUCT",
                        format!("skipped unsupported member at line {line_no}: {trimmed}"),
                    )
                    .with_subject(file_path.to_string()),
                );
            }
        }

        depth += brace_delta(&trimmed);
        if depth < 0 {
            return Err(IngestError::Parse {
                file: file_path.to_string(),
                line: line_no,
                message: "unbalanced closing brace".to_string(),
            });
        }
        i += 1;
    }

    if depth != 0 {
        return Err(IngestError::Parse {
            file: file_path.to_string(),
            line: lines.len() as u32,
            message: format!("unbalanced braces at end of file (depth {depth})"),
        });
    }
    if unit.class_name.is_empty() {
        return Err(IngestError::Parse {
            file: file_path.to_string(),
            line: 1,
            message: "no class declaration found".to_string(),
        });
    }
    Ok(unit)
}

fn strip_line_comment(line: &str) -> &str {
    // Good enough for the subset: no string literals containing `//`
    // outside annotation values, which are handled separately.
    match line.find("//") {
        Some(idx) if !line[..idx].contains('"') => &line[..idx],
        _ => line,
    }
}

fn is_class_decl(line: &str) -> bool {
    line.split_whitespace().any(|w| w == "class") && !line.contains('=')
}

fn is_field_decl(line: &str) -> bool {
    line.ends_with(';') && !line.contains('(')
}

fn class_name_of(line: &str) -> Option<String> {
    let words: Vec<&str> = line.split_whitespace().collect();
    let idx = words.iter().position(|w| *w == "class")?;
    words
        .get(idx + 1)
        .map(|w| w.trim_end_matches('{').trim().to_string())
        .filter(|s| !s.is_empty())
}

fn brace_delta(line: &str) -> i32 {
    let mut delta = 0;
    let mut in_str = false;
    for c in line.chars() {
        match c {
            '"' => in_str = !in_str,
            '{' if !in_str => delta += 1,
            '}' if !in_str => delta -= 1,
            _ => {}
        }
    }
    delta
}

fn parse_annotation(file: &str, line: &str, line_no: u32) -> Result<Annotation, IngestError> {
    let rest = &line[1..];
    let name_end = rest
        .find(|c: char| !c.is_alphanumeric() && c != '_')
        .unwrap_or(rest.len());
    let name = rest[..name_end].to_string();
    if name.is_empty() {
        return Err(IngestError::Parse {
            file: file.to_string(),
            line: line_no,
            message: "annotation without a name".to_string(),
        });
    }
    let mut value = None;
    let mut method_arg = None;
    if let Some(open) = rest.find('(') {
        let args = rest[open + 1..].trim_end_matches(')');
        if args.contains('"') && !args.matches('"').count().is_multiple_of(2) {
            return Err(IngestError::Parse {
                file: file.to_string(),
                line: line_no,
                message: format!("unterminated string in annotation @{name}"),
            });
        }
        // `value = "..."` or a bare leading string literal.
        if let Some(v) = extract_named_string(args, "value").or_else(|| leading_string(args)) {
            value = Some(v);
        }
        if let Some(m) = extract_named_bare(args, "method") {
            method_arg = Some(m.rsplit('.').next().unwrap_or(&m).to_string());
        }
    }
    Ok(Annotation {
        name,
        value,
        method_arg,
        line: line_no,
    })
}

fn extract_named_string(args: &str, key: &str) -> Option<String> {
    let idx = args.find(&format!("{key} =")).or_else(|| args.find(&format!("{key}=")))?;
    let rest = &args[idx..];
    let start = rest.find('"')? + 1;
    let end = rest[start..].find('"')? + start;
    Some(rest[start..end].to_string())
}

fn extract_named_bare(args: &str, key: &str) -> Option<String> {
    let idx = args.find(&format!("{key} =")).or_else(|| args.find(&format!("{key}=")))?;
    let rest = args[idx..].split('=').nth(1)?;
    let token = rest.split([',', ')']).next()?.trim();
    (!token.is_empty()).then(|| token.to_string())
}

fn leading_string(args: &str) -> Option<String> {
    let trimmed = args.trim_start();
    if !trimmed.starts_with('"') {
        return None;
    }
    let end = trimmed[1..].find('"')? + 1;
    Some(trimmed[1..end].to_string())
}

/// Heuristic: a member line `Ret name(...)` that is not a control keyword.
/// Returns the position of '(' on success.
fn find_method_decl(line: &str) -> Option<usize> {
    let open = line.find('(')?;
    let head = &line[..open];
    let words: Vec<&str> = head.split_whitespace().collect();
    if words.len() < 2 {
        return None;
    }
    let name = *words.last()?;
    if !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return None;
    }
    const KEYWORDS: [&str; 7] = ["if", "for", "while", "switch", "catch", "return", "new"];
    if KEYWORDS.contains(&name) || words.iter().any(|w| KEYWORDS.contains(w)) {
        return None;
    }
    Some(open)
}

fn parse_method(
    file: &str,
    lines: &[&str],
    start_idx: usize,
    first_line: &str,
    open_paren: usize,
    decl_line: u32,
) -> Result<(ParsedMethod, usize), IngestError> {
    // Signature may span lines until the parameter list closes.
    let mut sig = first_line.to_string();
    let mut idx = start_idx;
    while paren_depth(&sig) > 0 {
        idx += 1;
        if idx >= lines.len() {
            return Err(IngestError::Parse {
                file: file.to_string(),
                line: decl_line,
                message: "unterminated parameter list".to_string(),
            });
        }
        sig.push(' ');
        sig.push_str(strip_line_comment(lines[idx]).trim());
    }

    let head = &sig[..open_paren];
    let words: Vec<&str> = head.split_whitespace().collect();
    let name = words.last().unwrap().to_string();
    let return_type = if words.len() >= 2 {
        words[words.len() - 2].to_string()
    } else {
        String::new()
    };

    let close_paren = matching_paren(&sig, open_paren).ok_or_else(|| IngestError::Parse {
        file: file.to_string(),
        line: decl_line,
        message: "unterminated parameter list".to_string(),
    })?;
    let params = parse_params(file, &sig[open_paren + 1..close_paren], decl_line)?;

    // Body: from the first '{' after the signature to its matching '}'.
    let mut body_lines: Vec<String> = Vec::new();
    let mut depth = 0i32;
    let mut started = false;
    let mut body_start = 0u32;
    let mut body_end = 0u32;
    let after_sig = &sig[close_paren + 1..];
    if after_sig.trim_start().starts_with(';') {
        // Abstract/interface method: no body.
        let method = ParsedMethod {
            name,
            return_type,
            params,
            annotations: Vec::new(),
            body: String::new(),
            decl_line,
            body_lines: (decl_line, decl_line),
            calls: Vec::new(),
        };
        return Ok((method, idx - start_idx + 1));
    }

    let mut j = idx;
    while j < lines.len() {
        let text = strip_line_comment(lines[j]);
        let effective = if j == start_idx {
            // Skip the signature portion on the declaration line.
            &lines[j][close_paren.min(lines[j].len())..]
        } else {
            text
        };
        for c in effective.chars() {
            match c {
                '{' => {
                    if !started {
                        started = true;
                        body_start = (j + 1) as u32;
                    }
                    depth += 1;
                }
                '}' => {
                    depth -= 1;
                    if started && depth == 0 {
                        body_end = (j + 1) as u32;
                    }
                }
                _ => {}
            }
        }
        if started {
            body_lines.push(lines[j].to_string());
        }
        if started && depth == 0 {
            break;
        }
        j += 1;
    }
    if !started || depth != 0 {
        return Err(IngestError::Parse {
            file: file.to_string(),
            line: decl_line,
            message: format!("method '{name}' has an unterminated body"),
        });
    }

    let body = body_lines.join("\n");
    let calls = collect_calls(lines, body_start, body_end);
    let method = ParsedMethod {
        name,
        return_type,
        params,
        annotations: Vec::new(),
        body,
        decl_line,
        body_lines: (body_start, body_end),
        calls,
    };
    Ok((method, j - start_idx + 1))
}

fn paren_depth(s: &str) -> i32 {
    let mut d = 0;
    let mut in_str = false;
    for c in s.chars() {
        match c {
            '"' => in_str = !in_str,
            '(' if !in_str => d += 1,
            ')' if !in_str => d -= 1,
            _ => {}
        }
    }
    d
}

fn matching_paren(s: &str, open: usize) -> Option<usize> {
    let mut d = 0;
    let mut in_str = false;
    for (i, c) in s.char_indices().skip(open) {
        match c {
            '"' => in_str = !in_str,
            '(' if !in_str => d += 1,
            ')' if !in_str => {
                d -= 1;
                if d == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn parse_params(file: &str, text: &str, line: u32) -> Result<Vec<ParsedParam>, IngestError> {
    let mut params = Vec::new();
    for part in split_top_level(text) {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let mut annotations = Vec::new();
        let mut rest = part;
        while rest.starts_with('@') {
            let end = annotation_end(rest);
            annotations.push(parse_annotation(file, rest[..end].trim(), line)?);
            rest = rest[end..].trim_start();
        }
        let words: Vec<&str> = rest.split_whitespace().collect();
        if words.len() < 2 {
            return Err(IngestError::Parse {
                file: file.to_string(),
                line,
                message: format!("malformed parameter '{part}'"),
            });
        }
        params.push(ParsedParam {
            annotations,
            datatype: words[words.len() - 2].to_string(),
            name: words[words.len() - 1].to_string(),
        });
    }
    Ok(params)
}

fn annotation_end(s: &str) -> usize {
    match s.find('(') {
        Some(open) if s[..open].chars().skip(1).all(|c| c.is_alphanumeric() || c == '_') => {
            matching_paren(s, open).map(|i| i + 1).unwrap_or(s.len())
        }
        _ => s
            .find(|c: char| c.is_whitespace())
            .unwrap_or(s.len()),
    }
}

fn split_top_level(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut current = String::new();
    let mut in_str = false;
    for c in text.chars() {
        match c {
            '"' => {
                in_str = !in_str;
                current.push(c);
            }
            '(' | '<' | '[' if !in_str => {
                depth += 1;
                current.push(c);
            }
            ')' | '>' | ']' if !in_str => {
                depth -= 1;
                current.push(c);
            }
            ',' if depth == 0 && !in_str => {
                out.push(std::mem::take(&mut current));
            }
            _ => current.push(c),
        }
    }
    if !current.trim().is_empty() {
        out.push(current);
    }
    out
}

/// Scan body lines for call expressions `receiver.name(args)` or `name(args)`.
fn collect_calls(lines: &[&str], start: u32, end: u32) -> Vec<CallSite> {
    let mut out = Vec::new();
    for line_no in start..=end {
        let Some(raw) = lines.get(line_no as usize - 1) else {
            continue;
        };
        let text = strip_line_comment(raw);
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i] == b'(' {
                // Walk back over the identifier.
                let mut j = i;
                while j > 0 && (bytes[j - 1].is_ascii_alphanumeric() || bytes[j - 1] == b'_') {
                    j -= 1;
                }
                if j < i {
                    let name = text[j..i].to_string();
                    let keyword = matches!(
                        name.as_str(),
                        "if" | "for" | "while" | "switch" | "catch" | "return" | "new"
                    );
                    if !keyword {
                        let receiver = if j >= 1 && bytes[j - 1] == b'.' {
                            let mut k = j - 1;
                            while k > 0
                                && (bytes[k - 1].is_ascii_alphanumeric() || bytes[k - 1] == b'_')
                            {
                                k -= 1;
                            }
                            (k < j - 1).then(|| text[k..j - 1].to_string())
                        } else {
                            None
                        };
                        let args = matching_paren(text, i)
                            .map(|close| {
                                split_top_level(&text[i + 1..close])
                                    .into_iter()
                                    .map(|a| a.trim().to_string())
                                    .collect()
                            })
                            .unwrap_or_default();
                        out.push(CallSite {
                            receiver,
                            name,
                            args,
                            line: line_no,
                        });
                    }
                }
            }
            i += 1;
        }
    }
    out
}
