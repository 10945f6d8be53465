//! Transports: plain HTTP/1.1 over the network, or a registered in-process
//! service (the hermetic test target).

use super::HttpRequestSpec;
use std::sync::Arc;
use std::time::Duration;

/// Transport-level failure: no HTTP response was obtained.
#[derive(Debug, Clone)]
pub struct TransportFailure(pub String);

#[derive(Debug, Clone)]
pub struct RawResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: String,
    pub latency_ms: f64,
}

pub trait Transport: Send + Sync {
    fn execute(
        &self,
        request: &HttpRequestSpec,
        timeout: Duration,
    ) -> Result<RawResponse, TransportFailure>;
}

/// Interface a simulated service implements to be driven in-process.
pub trait ServiceHandler: Send + Sync {
    fn handle(&self, request: &HttpRequestSpec) -> RawResponse;
}

/// Runs requests directly against an in-process handler. Latency is
/// reported as 0 so runs are byte-reproducible.
pub struct InProcessTransport {
    handler: Arc<dyn ServiceHandler>,
}

impl InProcessTransport {
    pub fn new(handler: Arc<dyn ServiceHandler>) -> Self {
        Self { handler }
    }
}

impl Transport for InProcessTransport {
    fn execute(
        &self,
        request: &HttpRequestSpec,
        _timeout: Duration,
    ) -> Result<RawResponse, TransportFailure> {
        Ok(self.handler.handle(request))
    }
}

/// Plain HTTP/1.1 over the network. Redirects are not followed (3xx is a
/// terminal, valid response).
pub struct HttpTransport {
    base_url: String,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(base_url: &str, timeout: Duration) -> Result<Self, TransportFailure> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .redirect(reqwest::redirect::Policy::none())
            .build()
            .map_err(|e| TransportFailure(e.to_string()))?;
        Ok(Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            client,
        })
    }
}

impl Transport for HttpTransport {
    fn execute(
        &self,
        request: &HttpRequestSpec,
        _timeout: Duration,
    ) -> Result<RawResponse, TransportFailure> {
        let url = format!("{}{}", self.base_url, request.path_and_query());
        let method = reqwest::Method::from_bytes(request.method.as_str().as_bytes())
            .map_err(|e| TransportFailure(e.to_string()))?;
        let started = std::time::Instant::now();
        let mut builder = self.client.request(method, &url);
        for (name, value) in &request.headers {
            builder = builder.header(name, value);
        }
        if let Some(body) = &request.body {
            builder = builder
                .header("Content-Type", &body.content_type)
                .body(body.content.clone());
        }
        let response = builder
            .send()
            .map_err(|e| TransportFailure(format!("{url}: {e}")))?;
        let status = response.status().as_u16();
        let headers = response
            .headers()
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_str().unwrap_or_default().to_string()))
            .collect();
        let body = response
            .text()
            .map_err(|e| TransportFailure(format!("{url}: reading body: {e}")))?;
        Ok(RawResponse {
            status,
            headers,
            body,
            latency_ms: started.elapsed().as_secs_f64() * 1000.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{build_request, Executor, RequestOrigin};
    use crate::model::{Assignment, Endpoint, HttpMethod};

    struct PingHandler;

    impl ServiceHandler for PingHandler {
        fn handle(&self, request: &HttpRequestSpec) -> RawResponse {
            let (status, body) = if request.resolved_path == "/ping" {
                (200, "pong".to_string())
            } else {
                (404, String::new())
            };
            RawResponse {
                status,
                headers: vec![],
                body,
                latency_ms: 0.0,
            }
        }
    }

    #[test]
    fn in_process_round_trip() {
        let endpoint = Endpoint::new("c", "ping()", "/ping", HttpMethod::Get);
        let req = build_request(&endpoint, &Assignment::new(), RequestOrigin::Initial).unwrap();
        let exec = Executor::new(Box::new(InProcessTransport::new(Arc::new(PingHandler))));
        let record = exec.execute(&req).unwrap();
        assert_eq!(record.status, 200);
        assert_eq!(record.body, "pong");
        assert_eq!(record.latency_ms, 0.0);
    }

    #[test]
    fn unroutable_host_is_transport_error() {
        let endpoint = Endpoint::new("c", "ping()", "/ping", HttpMethod::Get);
        let req = build_request(&endpoint, &Assignment::new(), RequestOrigin::Initial).unwrap();
        let transport = HttpTransport::new("http://127.0.0.1:9", Duration::from_millis(300)).unwrap();
        let exec = Executor::new(Box::new(transport)).with_timeout(Duration::from_millis(300));
        let err = exec.execute(&req).unwrap_err();
        assert_eq!(err.code(), "TRANSPORT_ERROR");
    }
}
