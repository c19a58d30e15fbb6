use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use posterkit::core::codec::{self, CORRECTION_PROMPT};
use posterkit::core::{Canvas, Element, LayoutRecord, NormBox};
use posterkit::gateway::{
    self, Attachments, BackendConfig, BackendKind, GatewayError, RemoteBackend,
};
use serde_json::{json, Value};

struct Seen {
    headers: Vec<String>,
    body: Value,
}

/// Serves canned `(status, body)` replies in order, one per connection.
fn serve(replies: Vec<(u16, String)>, delay: Duration) -> (String, Arc<Mutex<Vec<Seen>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!(
        "http://{}/v1/chat/completions",
        listener.local_addr().unwrap()
    );
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    thread::spawn(move || {
        for (status, body) in replies {
            let Ok((stream, _)) = listener.accept() else {
                return;
            };
            let mut reader = BufReader::new(stream);
            let mut headers = Vec::new();
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end().to_string();
                if line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                headers.push(line);
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push(Seen {
                headers,
                body: serde_json::from_slice(&buf).unwrap_or(Value::Null),
            });
            thread::sleep(delay);
            let mut stream = reader.into_inner();
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    (url, seen)
}

fn chat(content: &str) -> (u16, String) {
    (
        200,
        json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string(),
    )
}

fn bundle() -> codec::PromptBundle {
    let r = LayoutRecord::new("x", Canvas::new(100, 150).unwrap(), "poster").with_elements(vec![
        Element::new("text", NormBox::new(0.0, 0.0, 0.1, 0.1)),
        Element::new("logo", NormBox::new(0.0, 0.0, 0.1, 0.1)),
    ]);
    codec::build_prompt(&r, Some("PLACE logo AT top"))
}

fn config(url: &str, token_env: &str) -> BackendConfig {
    BackendConfig {
        kind: BackendKind::Remote,
        endpoint: url.to_string(),
        model: "m".into(),
        timeout_secs: 5,
        retries: 1,
        token_env: token_env.into(),
        ..BackendConfig::default()
    }
}

const GOOD: &str = r#"{"layout":[{"label":"text","box":[0.1,0.1,0.9,0.2]},{"label":"logo","box":[0.1,0.3,0.3,0.4]}]}"#;

#[test]
fn prose_wrapped_reply_with_image_and_token() {
    let (url, seen) = serve(
        vec![chat(&format!(
            "Sure! Here is the design result:\n```json\n{GOOD}\n```"
        ))],
        Duration::ZERO,
    );
    std::env::set_var("GATEWAY_TEST_TOKEN_A", "s3cret");
    let cfg = config(&url, "GATEWAY_TEST_TOKEN_A");
    let backend = RemoteBackend::new(cfg.clone()).unwrap();
    let att = Attachments {
        image: Some(("image/png".into(), vec![0x89, b'P', b'N', b'G'])),
        saliency: None,
    };
    let r = gateway::generate(&bundle(), &backend, &cfg, &att).unwrap();
    assert_eq!(r.attempts, 1);
    assert_eq!(r.repair_log.count("fenced-block-extracted"), 1);
    assert_eq!(r.fragment.elements.len(), 2);

    let seen = seen.lock().unwrap();
    let req = &seen[0];
    assert!(req
        .headers
        .iter()
        .any(|h| h == "authorization: Bearer s3cret" || h == "Authorization: Bearer s3cret"));
    assert_eq!(req.body["model"], "m");
    assert_eq!(req.body["max_tokens"], 4096);
    assert_eq!(req.body["temperature"], 0.0);
    let parts = &req.body["messages"][0]["content"];
    assert_eq!(parts[0]["text"], bundle().text);
    assert_eq!(
        parts[1]["image_url"]["url"],
        "data:image/png;base64,iVBORw=="
    );
}

#[test]
fn no_json_twice_with_one_retry_fails_after_two_attempts() {
    let (url, seen) = serve(
        vec![chat("I cannot do that."), chat("Still no.")],
        Duration::ZERO,
    );
    let cfg = config(&url, "GATEWAY_TEST_TOKEN_UNSET");
    let backend = RemoteBackend::new(cfg.clone()).unwrap();
    match gateway::generate(&bundle(), &backend, &cfg, &Attachments::default()) {
        Err(GatewayError::AllAttemptsFailed {
            attempts, last_raw, ..
        }) => {
            assert_eq!(attempts, 2);
            assert_eq!(last_raw, "Still no.");
        }
        other => panic!("unexpected {other:?}"),
    }
    let seen = seen.lock().unwrap();
    assert!(!seen[0]
        .headers
        .iter()
        .any(|h| h.to_ascii_lowercase().starts_with("authorization")));
    let msgs = seen[1].body["messages"].as_array().unwrap();
    assert_eq!(msgs.len(), 3);
    assert_eq!(msgs[1]["role"], "assistant");
    assert_eq!(msgs[1]["content"], "I cannot do that.");
    assert_eq!(msgs[2]["content"], CORRECTION_PROMPT);
}

#[test]
fn http_error_is_not_retried() {
    let (url, seen) = serve(
        vec![(503, "{\"error\":\"busy\"}".into()), chat(GOOD)],
        Duration::ZERO,
    );
    let cfg = config(&url, "GATEWAY_TEST_TOKEN_UNSET");
    let backend = RemoteBackend::new(cfg.clone()).unwrap();
    let err = gateway::generate(&bundle(), &backend, &cfg, &Attachments::default()).unwrap_err();
    assert!(
        matches!(err, GatewayError::Status { status: 503, .. }),
        "{err:?}"
    );
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn slow_endpoint_times_out() {
    let (url, _) = serve(vec![chat(GOOD)], Duration::from_secs(3));
    let cfg = BackendConfig {
        timeout_secs: 1,
        ..config(&url, "GATEWAY_TEST_TOKEN_UNSET")
    };
    let backend = RemoteBackend::new(cfg.clone()).unwrap();
    let err = gateway::generate(&bundle(), &backend, &cfg, &Attachments::default()).unwrap_err();
    assert!(matches!(err, GatewayError::Timeout(1)), "{err:?}");
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let cfg = config(&format!("http://127.0.0.1:{port}/v1/chat/completions"), "X");
    let backend = RemoteBackend::new(cfg.clone()).unwrap();
    let err = gateway::generate(&bundle(), &backend, &cfg, &Attachments::default()).unwrap_err();
    assert!(matches!(err, GatewayError::Transport(_)), "{err:?}");
}
