//! Minimal HTTP/1.1 server exposing the toy service on a real socket, plus
//! a `/__coverage` endpoint implementing the coverage-adapter protocol. One
//! thread per connection; enough for deterministic desk-scale runs.

use super::ToyService;
use crate::harness::{HttpRequestSpec, RequestBody, RequestOrigin, ServiceHandler};
use crate::model::{EndpointId, HttpMethod};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::Arc;

/// Bind and serve until the process exits. Returns the bound address once
/// listening (port 0 picks a free port).
pub fn serve(service: Arc<ToyService>, addr: &str) -> std::io::Result<std::net::SocketAddr> {
    let listener = TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { continue };
            let service = Arc::clone(&service);
            std::thread::spawn(move || {
                let _ = handle_connection(stream, &service);
            });
        }
    });
    Ok(local)
}

fn handle_connection(stream: TcpStream, service: &ToyService) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut parts = request_line.split_whitespace();
    let (Some(method), Some(target)) = (parts.next(), parts.next()) else {
        return respond_raw(stream, 400, "text/plain", "bad request");
    };

    let mut content_length = 0usize;
    let mut content_type = String::new();
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            match name.to_ascii_lowercase().as_str() {
                "content-length" => content_length = value.trim().parse().unwrap_or(0),
                "content-type" => content_type = value.trim().to_string(),
                _ => {}
            }
        }
    }
    let mut body = vec![0u8; content_length];
    if content_length > 0 {
        reader.read_exact(&mut body)?;
    }

    let (path, query_text) = match target.split_once('?') {
        Some((p, q)) => (p, q),
        None => (target, ""),
    };

    if method == "GET" && path == "/__coverage" {
        let json = service.coverage_json().to_string();
        return respond_raw(stream, 200, "application/json", &json);
    }

    let Some(http_method) = HttpMethod::parse(method) else {
        return respond_raw(stream, 405, "text/plain", "unsupported method");
    };
    let query: Vec<(String, String)> = query_text
        .split('&')
        .filter(|s| !s.is_empty())
        .filter_map(|pair| {
            pair.split_once('=')
                .map(|(k, v)| (super::percent_decode(k), super::percent_decode(v)))
        })
        .collect();
    let request = HttpRequestSpec {
        endpoint_id: EndpointId::from_raw("wire"),
        method: http_method,
        resolved_path: path.to_string(),
        query,
        headers: vec![],
        body: (!body.is_empty()).then(|| RequestBody {
            content: String::from_utf8_lossy(&body).into_owned(),
            content_type,
        }),
        origin: RequestOrigin::Initial,
    };
    let response = service.handle(&request);
    let content_type = response
        .headers
        .iter()
        .find(|(k, _)| k.eq_ignore_ascii_case("content-type"))
        .map(|(_, v)| v.as_str())
        .unwrap_or("application/json");
    respond_raw(stream, response.status, content_type, &response.body)
}

fn respond_raw(
    mut stream: TcpStream,
    status: u16,
    content_type: &str,
    body: &str,
) -> std::io::Result<()> {
    let reason = match status {
        200 => "OK",
        201 => "Created",
        400 => "Bad Request",
        404 => "Not Found",
        405 => "Method Not Allowed",
        500 => "Internal Server Error",
        _ => "Status",
    };
    let payload = format!(
        "HTTP/1.1 {status} {reason}\r\ncontent-type: {content_type}\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
        body.len(),
    );
    stream.write_all(payload.as_bytes())?;
    stream.flush()
}
