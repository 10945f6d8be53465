//! Fault deduplication: collapses 5xx request-response pairs into unique
//! fault records via a pattern library that grows when unseen shapes appear.
//!
//! Normalization pipeline (applied in this order, bit-exact):
//! 1. ISO timestamps -> `T`
//! 2. hex identifiers (`0x...` or standalone hex runs of 8+) -> `@`
//! 3. digit runs -> `#`
//!
//! The fault signature is the first exception/error line of the normalized
//! body plus its first stack frame (or the first 160 normalized characters
//! when no trace is present). Patterns match against signatures, so
//! full-page HTML error bodies collapse by trace head, not page text.
//! First matching pattern wins; list order is builtins first, then learned
//! patterns in insertion order.

use crate::harness::{classify, HttpResponseRecord, ResponseClass};
use crate::model::EndpointId;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::LazyLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FaultError {
    #[error("PATTERN_COMPILE_ERROR: {0}")]
    PatternCompile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("pattern library: {0}")]
    Library(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Builtin,
    Learned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultPattern {
    pub pattern_id: String,
    /// Regex over the normalized fault signature. The `exact:` prefix marks
    /// a literal-equality fallback used when a learned regex fails to
    /// compile.
    pub matcher: String,
    pub provenance: Provenance,
}

/// A pattern with its compiled form; compiled once at insertion.
#[derive(Debug, Clone)]
struct CompiledPattern {
    pattern: FaultPattern,
    regex: Option<Regex>,
}

impl CompiledPattern {
    fn new(pattern: FaultPattern) -> Self {
        let regex = if pattern.matcher.starts_with("exact:") {
            None
        } else {
            Regex::new(&pattern.matcher).ok()
        };
        Self { pattern, regex }
    }

    fn matches(&self, signature: &str) -> bool {
        match (&self.regex, self.pattern.matcher.strip_prefix("exact:")) {
            (Some(re), _) => re.is_match(signature),
            (None, Some(literal)) => literal == signature,
            (None, None) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultRecord {
    pub fault_id: String,
    pub pattern_id: String,
    pub exemplar: HttpResponseRecord,
    pub occurrence_count: u64,
    pub endpoints_involved: std::collections::BTreeSet<EndpointId>,
}

static NORMALIZERS: LazyLock<(Regex, Regex, Regex, Regex)> = LazyLock::new(|| {
    (
        Regex::new(r"\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(\.\d+)?(Z|[+-]\d{2}:?\d{2})?")
            .expect("timestamp regex"),
        Regex::new(r"0x[0-9a-fA-F]+").expect("hex prefix regex"),
        Regex::new(r"\b[0-9a-fA-F]*[0-9][0-9a-fA-F]*\b").expect("hex run regex"),
        Regex::new(r"\d+").expect("digit regex"),
    )
});

/// Strip volatile tokens from a response body.
pub fn normalize_body(body: &str) -> String {
    let (timestamps, hex_prefixed, hex_runs, digits) = &*NORMALIZERS;
    let step1 = timestamps.replace_all(body, "T");
    let step2 = hex_prefixed.replace_all(&step1, "@");
    // Standalone hex runs of 8+ that contain at least one digit.
    let step3 = hex_runs.replace_all(&step2, |caps: &regex::Captures| {
        let token = caps.get(0).map(|m| m.as_str()).unwrap_or("");
        if token.len() >= 8 && token.chars().all(|c| c.is_ascii_hexdigit()) {
            "@".to_string()
        } else {
            token.to_string()
        }
    });
    digits.replace_all(&step3, "#").into_owned()
}

static QUALIFIED_HEAD: LazyLock<Regex> = LazyLock::new(|| {
    // A package-qualified exception/error class name plus its message,
    // stopping at a newline or markup.
    Regex::new(r"\b(?:[A-Za-z_$][\w$]*\.)+[\w$]*(?:Exception|Error)\b[^\n<]*")
        .expect("qualified head regex")
});
static LOOSE_HEAD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^.*(Exception|Error)\b.*$").expect("trace head regex"));
static TRACE_FRAME: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^\s*at\s+.*$").expect("trace frame regex"));

/// The canonical fault signature of a normalized body: the trace head (the
/// exception class and message) plus the first stack frame. A qualified
/// class name is preferred so surrounding page markup never leaks into the
/// signature.
pub fn signature(normalized_body: &str) -> String {
    let head = QUALIFIED_HEAD
        .find(normalized_body)
        .or_else(|| LOOSE_HEAD.find(normalized_body));
    if let Some(head) = head {
        let mut sig = head.as_str().trim().to_string();
        if let Some(frame) = TRACE_FRAME.find(&normalized_body[head.end()..]) {
            sig.push('\n');
            sig.push_str(frame.as_str().trim());
        }
        return sig;
    }
    normalized_body.chars().take(160).collect()
}

fn builtin_patterns() -> Vec<FaultPattern> {
    let patterns = [
        ("builtin-internal-error", r"(?s)^Internal Server Error"),
        ("builtin-null-pointer", r"java\.lang\.NullPointerException"),
        ("builtin-out-of-memory", r"java\.lang\.OutOfMemoryError"),
        ("builtin-stack-overflow", r"java\.lang\.StackOverflowError"),
        ("builtin-timeout", r"(?i)request timed out"),
    ];
    patterns
        .iter()
        .map(|(id, matcher)| FaultPattern {
            pattern_id: id.to_string(),
            matcher: matcher.to_string(),
            provenance: Provenance::Builtin,
        })
        .collect()
}

/// The pattern library plus accumulated fault records. Single writer;
/// ingestion is serialized.
#[derive(Debug, Clone)]
pub struct FaultDetector {
    patterns: Vec<CompiledPattern>,
    records: BTreeMap<String, FaultRecord>,
}

impl Default for FaultDetector {
    fn default() -> Self {
        Self::new()
    }
}

impl FaultDetector {
    pub fn new() -> Self {
        Self {
            patterns: builtin_patterns().into_iter().map(CompiledPattern::new).collect(),
            records: BTreeMap::new(),
        }
    }

    /// Load learned patterns from a library file on top of the builtins.
    /// Format: one pattern per line, `provenance<TAB>id<TAB>matcher`.
    pub fn with_library(path: &Path) -> Result<Self, FaultError> {
        let mut detector = Self::new();
        if !path.exists() {
            return Ok(detector);
        }
        let text = std::fs::read_to_string(path)?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let (Some(provenance), Some(id), Some(matcher)) =
                (parts.next(), parts.next(), parts.next())
            else {
                return Err(FaultError::Library(format!(
                    "{} line {}: expected provenance<TAB>id<TAB>matcher",
                    path.display(),
                    i + 1
                )));
            };
            if provenance == "learned"
                && !detector.patterns.iter().any(|p| p.pattern.pattern_id == id)
            {
                detector.patterns.push(CompiledPattern::new(FaultPattern {
                    pattern_id: id.to_string(),
                    matcher: matcher.to_string(),
                    provenance: Provenance::Learned,
                }));
            }
        }
        Ok(detector)
    }

    /// Persist the full pattern library (builtin lines included so the file
    /// documents the complete matching order).
    pub fn save_library(&self, path: &Path) -> Result<(), FaultError> {
        let mut out = String::new();
        for p in &self.patterns {
            let provenance = match p.pattern.provenance {
                Provenance::Builtin => "builtin",
                Provenance::Learned => "learned",
            };
            out.push_str(&format!(
                "{provenance}\t{}\t{}\n",
                p.pattern.pattern_id, p.pattern.matcher
            ));
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn patterns(&self) -> Vec<&FaultPattern> {
        self.patterns.iter().map(|p| &p.pattern).collect()
    }

    pub fn records(&self) -> impl Iterator<Item = &FaultRecord> {
        self.records.values()
    }

    pub fn unique_fault_count(&self) -> usize {
        self.records.len()
    }

    /// Ingest one fault-classified response. Returns the fault id and, when
    /// the body shape was unseen, the newly learned pattern.
    pub fn ingest(
        &mut self,
        resp: &HttpResponseRecord,
    ) -> Result<(String, Option<FaultPattern>), FaultError> {
        assert_eq!(
            classify(resp),
            ResponseClass::Fault,
            "ingest precondition: response must classify as fault"
        );
        let sig = signature(&normalize_body(&resp.body));

        let matched = self
            .patterns
            .iter()
            .find(|p| p.matches(&sig))
            .map(|p| p.pattern.clone());
        let (pattern_id, learned) = match matched {
            Some(p) => (p.pattern_id, None),
            None => {
                let pattern = self.learn(&sig)?;
                let id = pattern.pattern_id.clone();
                self.patterns.push(CompiledPattern::new(pattern.clone()));
                (id, Some(pattern))
            }
        };

        let fault_id = format!("fault:{pattern_id}");
        let record = self
            .records
            .entry(fault_id.clone())
            .or_insert_with(|| FaultRecord {
                fault_id: fault_id.clone(),
                pattern_id: pattern_id.clone(),
                exemplar: resp.clone(),
                occurrence_count: 0,
                endpoints_involved: Default::default(),
            });
        record.occurrence_count += 1;
        record
            .endpoints_involved
            .insert(resp.request.endpoint_id.clone());
        Ok((fault_id, learned))
    }

    fn learn(&self, sig: &str) -> Result<FaultPattern, FaultError> {
        let digest = sha2::Sha256::digest(sig.as_bytes());
        let short: String = digest.iter().take(4).map(|b| format!("{:02x}", b)).collect();
        let pattern_id = format!("learned-{short}");
        let matcher = format!("(?s)^{}$", regex::escape(sig));
        match Regex::new(&matcher) {
            Ok(_) => Ok(FaultPattern {
                pattern_id,
                matcher,
                provenance: Provenance::Learned,
            }),
            // Escaped literals always compile; if they somehow do not, fall
            // back to an exact-equality key.
            Err(e) => {
                let _ = FaultError::PatternCompile(e.to_string());
                Ok(FaultPattern {
                    pattern_id,
                    matcher: format!("exact:{sig}"),
                    provenance: Provenance::Learned,
                })
            }
        }
    }
}

use sha2::Digest;

/// One row of the fault table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultTableRow {
    pub fault_id: String,
    pub pattern_id: String,
    pub occurrences: u64,
    pub endpoints: Vec<String>,
    pub exemplar_head: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FaultTable {
    pub unique_faults: usize,
    pub rows: Vec<FaultTableRow>,
}

/// Pure aggregation of records into the fault table.
pub fn report(detector: &FaultDetector) -> FaultTable {
    let rows: Vec<FaultTableRow> = detector
        .records()
        .map(|r| FaultTableRow {
            fault_id: r.fault_id.clone(),
            pattern_id: r.pattern_id.clone(),
            occurrences: r.occurrence_count,
            endpoints: r
                .endpoints_involved
                .iter()
                .map(|e| e.to_string())
                .collect(),
            exemplar_head: signature(&normalize_body(&r.exemplar.body)),
        })
        .collect();
    FaultTable {
        unique_faults: rows.len(),
        rows,
    }
}
