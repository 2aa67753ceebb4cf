//! Wire-contract tests for the chat backend against a local stub server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};
use sod_core::prompting::{
    summarize, BackendConfig, BackendError, BackendKind, ChatMessage, PromptBundle, RemoteChat, Role, SummarizeError,
    Summarizer,
};

struct Seen {
    auth: Option<String>,
    body: Value,
}

/// Serve the canned `(status, body, delay)` replies in order, reporting
/// each request seen.
fn stub(replies: Vec<(u16, String, u64)>) -> (String, mpsc::Receiver<Seen>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body, delay) in replies {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            let mut auth = None;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    match k.to_ascii_lowercase().as_str() {
                        "content-length" => len = v.trim().parse().unwrap(),
                        "authorization" => auth = Some(v.trim().to_string()),
                        _ => {}
                    }
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            let _ = tx.send(Seen {
                auth,
                body: serde_json::from_slice(&buf).unwrap(),
            });
            thread::sleep(Duration::from_millis(delay));
            let mut stream = stream;
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    (url, rx)
}

fn completion(text: &str) -> String {
    json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
}

fn bundle(timeout: u64) -> PromptBundle {
    PromptBundle {
        messages: vec![
            ChatMessage::new(Role::Developer, "Summarize."),
            ChatMessage::new(Role::User, "- - CreateSheet(sheetName=\"Sheet2\")"),
        ],
        shot_count: 0,
        temperature: 0.5,
        max_new_tokens: 256,
        timeout_seconds: timeout,
    }
}

#[test]
fn request_shape_and_response() {
    let (url, rx) = stub(vec![(200, completion("- Step 1. Add a sheet named Sheet2."), 0)]);
    let chat = RemoteChat::new("m", &url, "gpt-test", "secret", 0);
    let s = summarize(&bundle(5), &chat).unwrap();
    assert_eq!(s.steps, ["Add a sheet named Sheet2."]);
    assert_eq!(s.raw, "- Step 1. Add a sheet named Sheet2.");
    let seen = rx.recv().unwrap();
    assert_eq!(seen.auth.as_deref(), Some("Bearer secret"));
    assert_eq!(
        seen.body,
        json!({
            "model": "gpt-test",
            "messages": [
                {"role": "developer", "content": "Summarize."},
                {"role": "user", "content": "- - CreateSheet(sheetName=\"Sheet2\")"}
            ],
            "temperature": 0.5,
            "max_tokens": 256
        })
    );
}

#[test]
fn slow_server_times_out() {
    let (url, _rx) = stub(vec![(200, completion("- Step 1. x"), 3000)]);
    let chat = RemoteChat::new("m", &url, "gpt-test", "k", 2);
    let err = chat.complete(&bundle(1)).unwrap_err();
    assert!(matches!(err, BackendError::Timeout(1)), "{err:?}");
}

#[test]
fn server_errors_are_retried() {
    let (url, rx) = stub(vec![(500, "{}".into(), 0), (200, completion("- Step 1. ok"), 0)]);
    let chat = RemoteChat::new("m", &url, "gpt-test", "k", 1);
    assert_eq!(chat.complete(&bundle(5)).unwrap(), "- Step 1. ok");
    assert_eq!(rx.iter().take(2).count(), 2);

    let (url, _rx) = stub(vec![(503, "busy".into(), 0)]);
    let chat = RemoteChat::new("m", &url, "gpt-test", "k", 0);
    assert!(matches!(chat.complete(&bundle(5)), Err(BackendError::Transport(m)) if m.contains("503")));
}

#[test]
fn malformed_and_stepless_replies() {
    let (url, _rx) = stub(vec![(200, "{\"choices\": []}".into(), 0), (200, completion("I cannot help."), 0)]);
    let chat = RemoteChat::new("m", &url, "gpt-test", "k", 0);
    assert!(matches!(chat.complete(&bundle(5)), Err(BackendError::Parse(_))));
    match summarize(&bundle(5), &chat) {
        Err(SummarizeError::NoSteps { raw }) => assert_eq!(raw, "I cannot help."),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unreachable_endpoint_is_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let chat = RemoteChat::new("m", &format!("http://127.0.0.1:{port}/"), "gpt-test", "k", 0);
    assert!(matches!(chat.complete(&bundle(5)), Err(BackendError::Transport(_))));
}

#[test]
fn token_comes_from_named_variable() {
    let mut c = BackendConfig::template("remote");
    c.kind = BackendKind::RemoteChat;
    c.endpoint = Some("http://127.0.0.1:9/".into());
    c.auth_env = Some("SOD_TEST_SURELY_UNSET_KEY".into());
    assert!(matches!(c.build(), Err(BackendError::MissingAuth(v)) if v == "SOD_TEST_SURELY_UNSET_KEY"));
}
