//! HTTP backend protocol tests against a minimal in-process server.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use cswitch_core::genclient::{
    generate_batch, Backend, FailureReason, GenClientError, GenerationOutcome, GenerationRequest,
    HttpBackend, HttpOptions,
};

/// Serves `hits` requests, building each response body from the request
/// body, then shuts down.
fn spawn_server(
    hits: usize,
    handler: impl Fn(usize, &str) -> ServerReply + Send + 'static,
) -> (String, std::thread::JoinHandle<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind test server");
    let url = format!("http://{}/generate", listener.local_addr().unwrap());
    let hit = Arc::new(AtomicUsize::new(0));
    let handle = std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let n = hit.fetch_add(1, Ordering::SeqCst);
            let body = read_request_body(&mut stream);
            match handler(n, &body) {
                ServerReply::Ok(response_body) => {
                    let reply = format!(
                        "HTTP/1.1 200 OK\r\ncontent-type: application/x-ndjson\r\n\
                         content-length: {}\r\nconnection: close\r\n\r\n{}",
                        response_body.len(),
                        response_body
                    );
                    let _ = stream.write_all(reply.as_bytes());
                }
                ServerReply::Status(code) => {
                    let reply = format!(
                        "HTTP/1.1 {code} ERR\r\ncontent-length: 0\r\nconnection: close\r\n\r\n"
                    );
                    let _ = stream.write_all(reply.as_bytes());
                }
                ServerReply::Hang(duration) => {
                    std::thread::sleep(duration);
                }
            }
            if n + 1 >= hits {
                break;
            }
        }
    });
    (url, handle)
}

enum ServerReply {
    Ok(String),
    Status(u16),
    Hang(Duration),
}

fn read_request_body(stream: &mut TcpStream) -> String {
    stream
        .set_read_timeout(Some(Duration::from_secs(5)))
        .unwrap();
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    let header_end;
    loop {
        let n = stream.read(&mut chunk).unwrap_or(0);
        if n == 0 {
            return String::new();
        }
        buf.extend_from_slice(&chunk[..n]);
        if let Some(pos) = find_header_end(&buf) {
            header_end = pos;
            break;
        }
    }
    let headers = String::from_utf8_lossy(&buf[..header_end]).to_string();
    let content_length: usize = headers
        .lines()
        .find_map(|line| {
            let (name, value) = line.split_once(':')?;
            name.eq_ignore_ascii_case("content-length")
                .then(|| value.trim().parse().ok())?
        })
        .unwrap_or(0);
    let mut body = buf[header_end + 4..].to_vec();
    while body.len() < content_length {
        let n = stream.read(&mut chunk).unwrap_or(0);
        if n == 0 {
            break;
        }
        body.extend_from_slice(&chunk[..n]);
    }
    String::from_utf8_lossy(&body).to_string()
}

fn find_header_end(buf: &[u8]) -> Option<usize> {
    buf.windows(4).position(|w| w == b"\r\n\r\n")
}

fn requests(n: usize) -> Vec<GenerationRequest> {
    (0..n)
        .map(|i| GenerationRequest {
            id: format!("r{i}"),
            domain: "alarm".into(),
            marked_text: format!("set [ alarm {i} ]_1"),
        })
        .collect()
}

/// Echo server: answers every request id with a candidate derived from it.
fn echo_body(request_body: &str) -> String {
    let mut out = String::new();
    for line in request_body.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let id = v["id"].as_str().unwrap();
        out.push_str(&format!(
            "{{\"id\":\"{id}\",\"candidates\":[\"cs for {id}\"],\"model_info\":\"test-model\"}}\n"
        ));
    }
    out
}

fn quick_options() -> HttpOptions {
    HttpOptions {
        batch_size: 4,
        timeout: Duration::from_secs(5),
        retries: 2,
        backoff: Duration::from_millis(1),
        concurrency: 2,
    }
}

#[test]
fn batches_and_resequences_to_input_order() {
    let (url, server) = spawn_server(3, |_, body| ServerReply::Ok(echo_body(body)));
    let backend = HttpBackend::new(url, quick_options());
    let reqs = requests(10); // 3 batches of <=4
    let records = generate_batch(&reqs, &backend).unwrap();
    server.join().unwrap();
    assert_eq!(records.len(), 10);
    for (record, req) in records.iter().zip(&reqs) {
        assert_eq!(record.request.id, req.id);
        assert_eq!(record.candidate(), Some(format!("cs for {}", req.id).as_str()));
        assert!(record.backend_info.starts_with("test-model"));
    }
}

#[test]
fn retries_after_transient_failure() {
    let (url, server) = spawn_server(2, |hit, body| {
        if hit == 0 {
            ServerReply::Status(500)
        } else {
            ServerReply::Ok(echo_body(body))
        }
    });
    let backend = HttpBackend::new(url, quick_options());
    let reqs = requests(2);
    let records = generate_batch(&reqs, &backend).unwrap();
    server.join().unwrap();
    assert_eq!(records.len(), 2);
    assert!(records.iter().all(|r| r.candidate().is_some()));
}

#[test]
fn unavailable_after_retry_budget() {
    let (url, server) = spawn_server(3, |_, _| ServerReply::Status(503));
    let backend = HttpBackend::new(url, quick_options());
    let err = generate_batch(&requests(1), &backend).unwrap_err();
    server.join().unwrap();
    match err {
        GenClientError::BackendUnavailable { attempts, .. } => assert_eq!(attempts, 3),
        other => panic!("expected BackendUnavailable, got {other:?}"),
    }
}

#[test]
fn unreachable_host_is_unavailable() {
    // Port 9 on localhost is essentially never listening.
    let backend = HttpBackend::new(
        "http://127.0.0.1:9/generate",
        HttpOptions {
            retries: 0,
            backoff: Duration::from_millis(1),
            ..quick_options()
        },
    );
    let err = generate_batch(&requests(1), &backend).unwrap_err();
    assert!(matches!(err, GenClientError::BackendUnavailable { .. }));
}

#[test]
fn missing_ids_become_markers_and_duplicates_keep_first() {
    // Every attempt answers only r0 (twice, with different texts); r1 is
    // never answered and must surface as a marker after the retry budget.
    let (url, server) = spawn_server(3, |_, _| {
        ServerReply::Ok(
            "{\"id\":\"r0\",\"candidates\":[\"first\"]}\n\
             {\"id\":\"r0\",\"candidates\":[\"second\"]}\n"
                .into(),
        )
    });
    let backend = HttpBackend::new(url, quick_options());
    let reqs = requests(2);
    let records = generate_batch(&reqs, &backend).unwrap();
    server.join().unwrap();
    assert_eq!(records[0].candidate(), Some("first"));
    assert_eq!(
        records[1].outcome,
        GenerationOutcome::Failed {
            reason: FailureReason::MissingResponse
        }
    );
}

#[test]
fn malformed_response_line_is_protocol_error() {
    let (url, server) = spawn_server(3, |_, _| ServerReply::Ok("this is not json\n".into()));
    let backend = HttpBackend::new(url, quick_options());
    let err = generate_batch(&requests(1), &backend).unwrap_err();
    server.join().unwrap();
    assert!(matches!(err, GenClientError::ProtocolError(_)));
}

#[test]
fn slow_server_times_out_per_batch() {
    let (url, _server) = spawn_server(2, |_, _| ServerReply::Hang(Duration::from_secs(3)));
    let backend = HttpBackend::new(
        url,
        HttpOptions {
            timeout: Duration::from_millis(200),
            retries: 1,
            backoff: Duration::from_millis(1),
            ..quick_options()
        },
    );
    let err = generate_batch(&requests(1), &backend).unwrap_err();
    assert!(
        matches!(
            err,
            GenClientError::TimeoutPerBatch { .. } | GenClientError::BackendUnavailable { .. }
        ),
        "expected a timeout-class error, got {err:?}"
    );
}

#[test]
fn empty_candidates_are_marked() {
    let (url, server) = spawn_server(1, |_, body| {
        let v: serde_json::Value =
            serde_json::from_str(body.lines().next().unwrap()).unwrap();
        ServerReply::Ok(format!(
            "{{\"id\":\"{}\",\"candidates\":[]}}\n",
            v["id"].as_str().unwrap()
        ))
    });
    let backend = HttpBackend::new(url, quick_options());
    let records = generate_batch(&requests(1), &backend).unwrap();
    server.join().unwrap();
    assert_eq!(
        records[0].outcome,
        GenerationOutcome::Failed {
            reason: FailureReason::EmptyCandidates
        }
    );
}

#[test]
fn backend_describe_names_the_url() {
    let backend = HttpBackend::new("http://example.test/generate", HttpOptions::default());
    assert_eq!(backend.describe(), "http:http://example.test/generate");
}
