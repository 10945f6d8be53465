//! HTTP harness: turns parameter assignments into concrete requests,
//! executes them against a base URL or an in-process service, and
//! classifies responses for agent routing.

mod transport;

pub use transport::{
    HttpTransport, InProcessTransport, RawResponse, ServiceHandler, Transport, TransportFailure,
};

use crate::diag::Diagnostic;
use crate::gateway::Gateway;
use crate::model::{Assignment, Endpoint, EndpointId, HttpMethod, ParamKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Duration;
use thiserror::Error;

/// Default request timeout (seconds). The harness never retries; agents own
/// retry semantics.
pub const DEFAULT_TIMEOUT_SECS: u64 = 10;

/// Raw-body length kept when failure summarization falls back.
pub const FALLBACK_SUMMARY_LEN: usize = 200;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("MISSING_PATH_PARAM: '{0}' has no value")]
    MissingPathParam(String),
    #[error("UNKNOWN_PARAM: '{0}' is not a parameter of the endpoint")]
    UnknownParam(String),
    #[error("TRANSPORT_ERROR: {0}")]
    Transport(String),
}

impl HarnessError {
    pub fn code(&self) -> &'static str {
        match self {
            HarnessError::MissingPathParam(_) => "MISSING_PATH_PARAM",
            HarnessError::UnknownParam(_) => "UNKNOWN_PARAM",
            HarnessError::Transport(_) => "TRANSPORT_ERROR",
        }
    }
}

/// Which pipeline stage produced a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestOrigin {
    Initial,
    Repair,
    Coverage,
    Scenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestBody {
    pub content: String,
    pub content_type: String,
}

/// A fully resolved HTTP request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpRequestSpec {
    pub endpoint_id: EndpointId,
    pub method: HttpMethod,
    /// Path with all placeholders substituted and percent-encoded.
    pub resolved_path: String,
    pub query: Vec<(String, String)>,
    pub headers: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<RequestBody>,
    pub origin: RequestOrigin,
}

impl HttpRequestSpec {
    /// Path plus encoded query string.
    pub fn path_and_query(&self) -> String {
        if self.query.is_empty() {
            return self.resolved_path.clone();
        }
        let query: Vec<String> = self
            .query
            .iter()
            .map(|(k, v)| format!("{}={}", percent_encode(k), percent_encode(v)))
            .collect();
        format!("{}?{}", self.resolved_path, query.join("&"))
    }
}

/// A captured response, always produced for any HTTP status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpResponseRecord {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: String,
    pub latency_ms: f64,
    pub request: HttpRequestSpec,
    /// Condensed server message, filled by `summarize_failure`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
}

/// Response classes routing to the agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseClass {
    /// 1xx-3xx. Redirects are not followed; 3xx counts as valid.
    Valid,
    /// 4xx: the request was rejected.
    Invalid,
    /// 5xx: a server-side failure.
    Fault,
    /// No HTTP response at all (connect error or timeout).
    Transport,
}

/// Pure mapping from status band to class.
pub fn classify(resp: &HttpResponseRecord) -> ResponseClass {
    classify_status(resp.status)
}

pub fn classify_status(status: u16) -> ResponseClass {
    match status {
        100..=399 => ResponseClass::Valid,
        400..=499 => ResponseClass::Invalid,
        _ => ResponseClass::Fault,
    }
}

/// Percent-encode everything outside RFC 3986 unreserved characters
/// (uppercase hex, space becomes `%20`).
pub fn percent_encode(input: &str) -> String {
    let mut out = String::with_capacity(input.len());
    for byte in input.bytes() {
        match byte {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'.' | b'_' | b'~' => {
                out.push(byte as char)
            }
            _ => out.push_str(&format!("%{:02X}", byte)),
        }
    }
    out
}

/// Build a concrete request from an endpoint and an assignment.
///
/// Path parameters are substituted and percent-encoded; query parameters
/// attach in declaration order; body parameters serialize as a form when any
/// of them carries a form-style annotation, otherwise as a JSON object.
pub fn build_request(
    endpoint: &Endpoint,
    assignment: &Assignment,
    origin: RequestOrigin,
) -> Result<HttpRequestSpec, HarnessError> {
    for name in assignment.keys() {
        if endpoint.parameter(name).is_none() {
            return Err(HarnessError::UnknownParam(name.clone()));
        }
    }

    let mut resolved_path = endpoint.path.clone();
    for placeholder in crate::model::path_placeholders(&endpoint.path) {
        let value = assignment
            .get(&placeholder)
            .and_then(|v| v.as_ref())
            .ok_or_else(|| HarnessError::MissingPathParam(placeholder.clone()))?;
        resolved_path = resolved_path.replace(
            &format!("{{{placeholder}}}"),
            &percent_encode(value),
        );
    }

    let mut query = Vec::new();
    let mut headers = Vec::new();
    let mut body_values: Vec<(&str, &str)> = Vec::new();
    let mut form_style = false;
    for param in &endpoint.parameters {
        let Some(Some(value)) = assignment.get(&param.name) else {
            continue;
        };
        match param.kind {
            ParamKind::Path => {}
            ParamKind::Query => query.push((param.name.clone(), value.clone())),
            ParamKind::Header => headers.push((param.name.clone(), value.clone())),
            ParamKind::Body => {
                if param
                    .annotations
                    .iter()
                    .any(|a| a.contains("ModelAttribute") || a.to_lowercase().contains("form"))
                {
                    form_style = true;
                }
                body_values.push((&param.name, value));
            }
        }
    }

    let body = if body_values.is_empty() {
        None
    } else if form_style {
        let content = body_values
            .iter()
            .map(|(k, v)| format!("{}={}", percent_encode(k), percent_encode(v)))
            .collect::<Vec<_>>()
            .join("&");
        Some(RequestBody {
            content,
            content_type: "application/x-www-form-urlencoded".to_string(),
        })
    } else {
        let map: BTreeMap<&str, &str> = body_values.iter().copied().collect();
        Some(RequestBody {
            content: serde_json::to_string(&map).expect("body serializes"),
            content_type: "application/json".to_string(),
        })
    };

    Ok(HttpRequestSpec {
        endpoint_id: endpoint.endpoint_id.clone(),
        method: endpoint.http_method,
        resolved_path,
        query,
        headers,
        body,
        origin,
    })
}

/// Executes requests through a transport. Bounded to one request at a time
/// per executor; agent loops are strictly sequential by design.
pub struct Executor {
    transport: Box<dyn Transport>,
    timeout: Duration,
}

impl Executor {
    pub fn new(transport: Box<dyn Transport>) -> Self {
        Self {
            transport,
            timeout: Duration::from_secs(DEFAULT_TIMEOUT_SECS),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    /// Execute one request. Non-2xx statuses are captured, never errors;
    /// only transport failures (connect/timeout) surface as errors.
    pub fn execute(&self, request: &HttpRequestSpec) -> Result<HttpResponseRecord, HarnessError> {
        let raw = self
            .transport
            .execute(request, self.timeout)
            .map_err(|f| HarnessError::Transport(f.0))?;
        Ok(HttpResponseRecord {
            status: raw.status,
            headers: raw.headers,
            body: raw.body,
            latency_ms: raw.latency_ms,
            request: request.clone(),
            summary: None,
        })
    }
}

/// Summarize an invalid or fault response for agent planning.
///
/// An empty body short-circuits to `HTTP <status> with empty body`. A
/// gateway failure falls back to the raw body truncated to
/// [`FALLBACK_SUMMARY_LEN`], flagged with a diagnostic.
pub fn summarize_failure(
    resp: &HttpResponseRecord,
    gateway: &Gateway,
) -> (String, Vec<Diagnostic>) {
    debug_assert!(matches!(
        classify(resp),
        ResponseClass::Invalid | ResponseClass::Fault
    ));
    if resp.body.trim().is_empty() {
        return (format!("HTTP {} with empty body", resp.status), Vec::new());
    }
    let mut slots = BTreeMap::new();
    slots.insert("status".to_string(), resp.status.to_string());
    slots.insert("body".to_string(), resp.body.clone());
    slots.insert(
        "request".to_string(),
        format!("{} {}", resp.request.method, resp.request.path_and_query()),
    );
    match gateway.complete("summarize-failure", &slots) {
        Ok(exchange) if !exchange.response.trim().is_empty() => {
            (exchange.response.trim().to_string(), Vec::new())
        }
        Ok(_) | Err(_) => {
            let truncated: String = resp.body.chars().take(FALLBACK_SUMMARY_LEN).collect();
            let diag = Diagnostic::new(
                "SUMMARY_TRUNCATED",
                format!("failure summary fell back to raw body for HTTP {}", resp.status),
            );
            (truncated, vec![diag])
        }
    }
}
