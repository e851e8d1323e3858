//! Minimal HTTP/1.1 server speaking the backend protocol, for client tests.
//!
//! A [`Responder::Script`] answers from a fixed list of request/response
//! exchanges and rejects anything unscripted with 400. A
//! [`Responder::Mock`] serves an in-process backend suite, which is how the
//! scripted fixtures were recorded. Every exchange is logged.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use hallu_core::backends::{BackendSuite, Capability, NliPair, PromptId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request: Option<Value>,
    pub status: u16,
    pub response: Value,
}

pub enum Responder {
    Script(Vec<Exchange>),
    Mock(BackendSuite),
    /// Answers every request with this status and an error body.
    Fail(u16),
}

pub struct Stub {
    pub url: String,
    pub log: Arc<Mutex<Vec<Exchange>>>,
}

impl Stub {
    pub fn start(responder: Responder) -> Stub {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub");
        let url = format!("http://{}", listener.local_addr().unwrap());
        let log = Arc::new(Mutex::new(Vec::new()));
        let responder = Arc::new(responder);
        let server_log = log.clone();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let responder = responder.clone();
                let log = server_log.clone();
                thread::spawn(move || {
                    let _ = serve(stream, &responder, &log);
                });
            }
        });
        Stub { url, log }
    }

    pub fn exchanges(&self) -> Vec<Exchange> {
        self.log.lock().unwrap().clone()
    }
}

fn serve(mut stream: TcpStream, responder: &Responder, log: &Mutex<Vec<Exchange>>) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut parts = request_line.split_whitespace();
    let method = parts.next().unwrap_or_default().to_owned();
    let path = parts.next().unwrap_or_default().to_owned();
    let mut content_length = 0;
    loop {
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let header = header.trim_end();
        if header.is_empty() {
            break;
        }
        if let Some((name, value)) = header.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0; content_length];
    reader.read_exact(&mut body)?;
    let request: Option<Value> = if method == "POST" {
        serde_json::from_slice(&body).ok()
    } else {
        None
    };

    let (status, response) = respond(responder, &path, request.as_ref());
    log.lock().unwrap().push(Exchange {
        path,
        request,
        status,
        response: response.clone(),
    });
    let payload = response.to_string();
    let reason = if status == 200 { "OK" } else { "Error" };
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    )?;
    stream.flush()
}

fn respond(responder: &Responder, path: &str, request: Option<&Value>) -> (u16, Value) {
    match responder {
        Responder::Fail(status) => (*status, json!({ "error": "scripted failure" })),
        Responder::Script(exchanges) => exchanges
            .iter()
            .find(|e| e.path == path && e.request.as_ref() == request)
            .map(|e| (e.status, e.response.clone()))
            .unwrap_or_else(|| (400, json!({ "error": format!("unscripted request to {path}") }))),
        Responder::Mock(suite) => match mock_response(suite, path, request) {
            Ok(body) => (200, body),
            Err(message) => (400, json!({ "error": message })),
        },
    }
}

fn strings(value: &Value) -> Vec<&str> {
    value
        .as_array()
        .map(|a| a.iter().filter_map(Value::as_str).collect())
        .unwrap_or_default()
}

fn mock_response(suite: &BackendSuite, path: &str, request: Option<&Value>) -> Result<Value, String> {
    let empty = json!({});
    let request = request.unwrap_or(&empty);
    match path {
        "/v1/health" => Ok(json!({ "status": "ok", "capabilities": Capability::ALL })),
        "/v1/ner" => {
            let texts = strings(&request["texts"]);
            let entities = suite.extractor.extract_entities(&texts).map_err(|e| e.to_string())?;
            let wire: Vec<Vec<Value>> = entities
                .into_iter()
                .map(|list| {
                    list.into_iter()
                        .map(|e| json!({ "text": e.surface, "start": e.start, "end": e.end }))
                        .collect()
                })
                .collect();
            Ok(json!({ "entities": wire }))
        }
        "/v1/similarity" => {
            let pairs: Vec<(&str, &str)> = request["pairs"]
                .as_array()
                .map(|a| {
                    a.iter()
                        .map(|p| (p[0].as_str().unwrap_or(""), p[1].as_str().unwrap_or("")))
                        .collect()
                })
                .unwrap_or_default();
            let scores = suite.similarity.score_similarity(&pairs).map_err(|e| e.to_string())?;
            Ok(json!({ "scores": scores }))
        }
        "/v1/nli" => {
            let pairs: Vec<NliPair<'_>> = request["pairs"]
                .as_array()
                .map(|a| {
                    a.iter()
                        .map(|p| {
                            NliPair::new(
                                p["premise"].as_str().unwrap_or(""),
                                p["hypothesis"].as_str().unwrap_or(""),
                            )
                        })
                        .collect()
                })
                .unwrap_or_default();
            let verdicts = suite.entailment.judge_entailment(&pairs).map_err(|e| e.to_string())?;
            Ok(json!({ "verdicts": verdicts }))
        }
        "/v1/augment" => {
            let texts = strings(&request["texts"]);
            let prompt: PromptId = request["prompt_id"]
                .as_str()
                .unwrap_or("")
                .parse()
                .map_err(|e: hallu_core::backends::BackendError| e.to_string())?;
            let seed = request["seed"].as_u64().ok_or("missing seed")?;
            let texts = suite.augmenter.augment_text(&texts, prompt, seed).map_err(|e| e.to_string())?;
            Ok(json!({ "texts": texts }))
        }
        other => Err(format!("unknown path {other}")),
    }
}
