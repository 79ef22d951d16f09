mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use common::fixture;
use proofsmith::oracle::wire::*;
use proofsmith::oracle::{Embedder, GenerationMode, Generator, Judge, RemoteOracle};
use proofsmith::text::{PosTag, Tagger};
use proofsmith::Error;

fn golden(name: &str) -> String {
    std::fs::read_to_string(fixture(&format!("wire/{name}.json"))).unwrap()
}

fn round_trips<T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug>(name: &str) -> T {
    let text = golden(name);
    let parsed: T = serde_json::from_str(&text).unwrap();
    let expected: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_value(&parsed).unwrap(), expected, "{name}");
    parsed
}

#[test]
fn golden_bodies_round_trip() {
    let g: GenerateRequest = round_trips("generate_request");
    assert_eq!(g.mode, GenerationMode::Entail);
    round_trips::<GenerateResponse>("generate_response");
    round_trips::<EmbedRequest>("embed_request");
    round_trips::<EmbedResponse>("embed_response");
    round_trips::<JudgeRequest>("judge_request");
    round_trips::<JudgeResponse>("judge_response");
    round_trips::<TagRequest>("tag_request");
    let t: TagResponse = round_trips("tag_response");
    assert_eq!(t.tags[0][1], ("dog".to_string(), "noun".to_string()));
}

#[test]
fn every_mode_has_a_wire_name() {
    for m in GenerationMode::ALL {
        let v = serde_json::to_value(m).unwrap();
        assert_eq!(v, Value::String(m.name().to_string()));
    }
}

/// Serves one scripted `(status, body)` reply per connection and reports
/// each received `(path, body)`.
fn serve(script: Vec<(u16, String)>) -> (String, mpsc::Receiver<(String, Value)>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in script {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let path = request_line.split_whitespace().nth(1).unwrap_or("").to_string();
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line.trim().is_empty() {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        length = v.trim().parse().unwrap();
                    }
                }
            }
            let mut buf = vec![0; length];
            reader.read_exact(&mut buf).unwrap();
            let _ = tx.send((path, serde_json::from_slice(&buf).unwrap_or(Value::Null)));
            let mut stream = stream;
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
    });
    (url, rx)
}

fn client(url: &str) -> RemoteOracle {
    RemoteOracle::with_timeout(url, Duration::from_secs(5)).unwrap().with_backoff(Duration::from_millis(1))
}

#[test]
fn generate_sends_golden_request() {
    let (url, rx) = serve(vec![(200, golden("generate_response"))]);
    let out = client(&url).generate_raw(GenerationMode::Entail, &["a puppy runs"], 10, 10).unwrap();
    assert_eq!(out.len(), 2);
    assert_eq!(out[0].text, "a dog runs");
    let (path, body) = rx.recv().unwrap();
    assert_eq!(path, "/v1/generate");
    assert_eq!(body, serde_json::from_str::<Value>(&golden("generate_request")).unwrap());
}

#[test]
fn embed_judge_and_tag() {
    let (url, rx) = serve(vec![
        (200, golden("embed_response")),
        (200, golden("judge_response")),
        (200, golden("tag_response")),
    ]);
    let o = client(&url);
    let v = o.embed_raw(&["a dog runs", "an animal runs"]).unwrap();
    assert!((v[0][1] - 0.8).abs() < 1e-12);
    let j = o.judge_raw(&[("a dog runs", "an animal runs")]).unwrap();
    assert_eq!(j, vec![(0.9, 0.07, 0.03)]);
    let tags = o.tag(&["a".into(), "dog".into(), "runs".into()]).unwrap();
    assert_eq!(tags.iter().map(|t| t.tag).collect::<Vec<_>>(), vec![PosTag::Other, PosTag::Noun, PosTag::Verb]);
    let paths: Vec<String> = rx.iter().take(3).map(|(p, _)| p).collect();
    assert_eq!(paths, ["/v1/embed", "/v1/judge", "/v1/tag"]);
}

#[test]
fn server_error_is_retried_once() {
    let (url, rx) = serve(vec![(503, "{}".into()), (200, golden("generate_response"))]);
    assert!(client(&url).generate_raw(GenerationMode::Entail, &["a puppy runs"], 10, 10).is_ok());
    assert_eq!(rx.iter().take(2).count(), 2);
}

#[test]
fn repeated_server_error_is_unavailable() {
    let (url, _rx) = serve(vec![(500, "{}".into()), (502, "{}".into())]);
    let err = client(&url).generate_raw(GenerationMode::Entail, &["a puppy runs"], 10, 10).unwrap_err();
    assert!(matches!(err, Error::OracleUnavailable(_)), "{err:?}");
}

#[test]
fn client_error_is_protocol_and_not_retried() {
    let (url, rx) = serve(vec![(422, "{\"detail\":\"bad\"}".into())]);
    let err = client(&url).embed_raw(&["x"]).unwrap_err();
    assert!(matches!(err, Error::Protocol(_)), "{err:?}");
    assert_eq!(rx.iter().count(), 1);
}

#[test]
fn malformed_or_inconsistent_replies_are_protocol_errors() {
    let (url, _rx) = serve(vec![
        (200, "{\"candidates\": 3}".into()),
        (200, golden("embed_response")),
        (200, "{\"dim\": 2, \"vectors\": [[1.0, 0.0, 0.0]]}".into()),
    ]);
    let o = client(&url);
    assert!(matches!(o.generate_raw(GenerationMode::Neutral, &["x"], 1, 1), Err(Error::Protocol(_))));
    assert!(matches!(o.embed_raw(&["only one"]), Err(Error::Protocol(_))));
    assert!(matches!(o.embed_raw(&["x"]), Err(Error::Protocol(_))));
}

#[test]
fn refused_connection_is_unavailable() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = client(&format!("http://127.0.0.1:{port}")).judge_raw(&[("a", "b")]).unwrap_err();
    assert!(matches!(err, Error::OracleUnavailable(_)), "{err:?}");
}

#[test]
fn rejects_non_http_url() {
    assert!(RemoteOracle::new("ftp://example.org").is_err());
}
