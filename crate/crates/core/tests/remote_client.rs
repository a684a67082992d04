//! HTTP backend against a local test server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use blueprint_core::clients::{
    answer_question, batch, entail_prob, generate_question, ClientConfig, ClientError, RemoteNli,
    RemoteQa, RemoteQg,
};

type Handler = dyn Fn(usize, &str) -> (u16, String) + Send + Sync;

struct Server {
    url: String,
    requests: Arc<AtomicUsize>,
    max_concurrent: Arc<AtomicUsize>,
    bodies: Arc<Mutex<Vec<String>>>,
}

fn read_request(stream: &mut TcpStream) -> Option<String> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut len = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).ok()? == 0 {
            return None;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().ok()?;
            }
        }
    }
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body).ok()?;
    String::from_utf8(body).ok()
}

fn serve(delay: Duration, handler: Arc<Handler>) -> Server {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/predict", listener.local_addr().unwrap());
    let requests = Arc::new(AtomicUsize::new(0));
    let current = Arc::new(AtomicUsize::new(0));
    let max_concurrent = Arc::new(AtomicUsize::new(0));
    let bodies = Arc::new(Mutex::new(Vec::new()));
    let (r, m, b) = (requests.clone(), max_concurrent.clone(), bodies.clone());
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let (r, cur, m, b, h) = (r.clone(), current.clone(), m.clone(), b.clone(), handler.clone());
            thread::spawn(move || {
                let Some(body) = read_request(&mut stream) else { return };
                let n = r.fetch_add(1, Ordering::SeqCst);
                let now = cur.fetch_add(1, Ordering::SeqCst) + 1;
                m.fetch_max(now, Ordering::SeqCst);
                thread::sleep(delay);
                let (status, reply) = h(n, &body);
                b.lock().unwrap().push(body);
                cur.fetch_sub(1, Ordering::SeqCst);
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                    reply.len()
                );
            });
        }
    });
    Server {
        url,
        requests,
        max_concurrent,
        bodies,
    }
}

fn config(url: &str) -> ClientConfig {
    ClientConfig {
        max_retries: 3,
        backoff_base_secs: 0.001,
        timeout_secs: 5.0,
        ..ClientConfig::with_endpoint(url)
    }
}

#[test]
fn in_flight_requests_are_bounded() {
    let server = serve(
        Duration::from_millis(40),
        Arc::new(|_, _| (200, r#"{"entail_prob": 0.75}"#.to_string())),
    );
    let nli = RemoteNli::new(ClientConfig {
        max_in_flight: 2,
        ..config(&server.url)
    })
    .unwrap();
    let items: Vec<usize> = (0..12).collect();
    let out = batch(&items, |i| entail_prob("p", &format!("h{i}"), &nli).unwrap());
    assert!(out.iter().all(|&p| p == 0.75));
    assert_eq!(server.requests.load(Ordering::SeqCst), 12);
    let peak = server.max_concurrent.load(Ordering::SeqCst);
    assert!((1..=2).contains(&peak), "peak concurrency {peak}");
}

#[test]
fn server_errors_are_retried() {
    let server = serve(
        Duration::ZERO,
        Arc::new(|n, _| {
            if n < 2 {
                (503, "busy".to_string())
            } else {
                (200, r#"{"question": "Who built it?"}"#.to_string())
            }
        }),
    );
    let qg = RemoteQg::new(config(&server.url)).unwrap();
    assert_eq!(generate_question("Ford", "built by Ford", &qg).unwrap(), "Who built it?");
    assert_eq!(server.requests.load(Ordering::SeqCst), 3);
    let body: serde_json::Value = serde_json::from_str(&server.bodies.lock().unwrap()[2]).unwrap();
    assert_eq!(body, serde_json::json!({"answer": "Ford", "context": "built by Ford"}));
}

#[test]
fn retries_are_bounded() {
    let server = serve(Duration::ZERO, Arc::new(|_, _| (500, "down".to_string())));
    let qa = RemoteQa::new(config(&server.url)).unwrap();
    match answer_question("q", "c", &qa) {
        Err(ClientError::Transport { attempts, .. }) => assert_eq!(attempts, 4),
        other => panic!("expected transport error, got {other:?}"),
    }
    assert_eq!(server.requests.load(Ordering::SeqCst), 4);
}

#[test]
fn client_errors_are_not_retried() {
    let server = serve(Duration::ZERO, Arc::new(|_, _| (400, "bad".to_string())));
    let qa = RemoteQa::new(config(&server.url)).unwrap();
    assert!(matches!(
        answer_question("q", "c", &qa),
        Err(ClientError::Transport { attempts: 1, .. })
    ));
    assert_eq!(server.requests.load(Ordering::SeqCst), 1);
}

#[test]
fn malformed_bodies_are_reported() {
    let server = serve(Duration::ZERO, Arc::new(|_, _| (200, r#"{"nope": 1}"#.to_string())));
    let qa = RemoteQa::new(config(&server.url)).unwrap();
    assert!(matches!(
        answer_question("q", "c", &qa),
        Err(ClientError::MalformedResponse(_))
    ));
    let server = serve(
        Duration::ZERO,
        Arc::new(|_, _| (200, r#"{"answer": "x", "score": 0.5, "no_answer": true}"#.to_string())),
    );
    let qa = RemoteQa::new(config(&server.url)).unwrap();
    assert!(matches!(
        answer_question("q", "c", &qa),
        Err(ClientError::MalformedResponse(_))
    ));
}

#[test]
fn unreachable_endpoint_fails_after_retries() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let qg = RemoteQg::new(config(&format!("http://127.0.0.1:{port}/qg"))).unwrap();
    match generate_question("a", "a", &qg) {
        Err(ClientError::Transport { attempts, .. }) => assert_eq!(attempts, 4),
        other => panic!("expected transport error, got {other:?}"),
    }
}
