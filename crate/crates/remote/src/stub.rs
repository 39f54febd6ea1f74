//! Loopback test double for remote tools.
//!
//! Script format:
//!
//! ```json
//! { "tools": {
//!     "transcribe_qwenasr": { "body": { "text": "hello" } },
//!     "diarize_diarizen":   { "status": 500, "raw_body": "boom", "delay_ms": 50 },
//!     "verify_speaker":     [ { "body": {...} }, { "body": {...} } ]
//!   },
//!   "chat": [ { "raw_body": "{...}" } ] }
//! ```
//!
//! A scripted `body` is wrapped as `{"request_id": <echoed>, "result": body}`;
//! `raw_body` is sent verbatim. A list is served in order and its last entry
//! repeats. Unscripted tools get 404.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::wire::ToolRequest;

pub const TOOL_ROUTE_PREFIX: &str = "/v1/tools/";
pub const CHAT_ROUTE: &str = "/v1/chat/completions";

#[derive(Debug, Error)]
pub enum StubError {
    #[error("reading stub script: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing stub script: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("binding loopback listener: {0}")]
    Bind(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StubResponse {
    #[serde(default = "ok_status")]
    pub status: u16,
    #[serde(default)]
    pub body: Option<Value>,
    #[serde(default)]
    pub raw_body: Option<String>,
    #[serde(default)]
    pub delay_ms: u64,
}

fn ok_status() -> u16 {
    200
}

impl StubResponse {
    pub fn ok(body: Value) -> Self {
        StubResponse {
            status: 200,
            body: Some(body),
            raw_body: None,
            delay_ms: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StubEntry {
    One(StubResponse),
    Sequence(Vec<StubResponse>),
}

impl StubEntry {
    fn pick(&self, nth: usize) -> Option<&StubResponse> {
        match self {
            StubEntry::One(r) => Some(r),
            StubEntry::Sequence(v) => v.get(nth).or_else(|| v.last()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StubScript {
    #[serde(default)]
    pub tools: BTreeMap<String, StubEntry>,
    #[serde(default)]
    pub chat: Vec<StubResponse>,
}

impl StubScript {
    pub fn from_file(path: &Path) -> Result<Self, StubError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn with_tool(mut self, tool: &str, response: StubResponse) -> Self {
        self.tools.insert(tool.to_string(), StubEntry::One(response));
        self
    }
}

#[derive(Default)]
struct Counters {
    per_tool: BTreeMap<String, usize>,
    chat: usize,
    total: usize,
}

/// A running stub server; shuts down on drop.
pub struct StubServer {
    base_url: String,
    server: Arc<tiny_http::Server>,
    counters: Arc<Mutex<Counters>>,
    stopping: Arc<AtomicBool>,
    worker: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(script: StubScript) -> Result<Self, StubError> {
        let server = tiny_http::Server::http("127.0.0.1:0").map_err(|e| StubError::Bind(e.to_string()))?;
        let port = server
            .server_addr()
            .to_ip()
            .map(|a| a.port())
            .ok_or_else(|| StubError::Bind("listener has no IP address".into()))?;
        let server = Arc::new(server);
        let counters = Arc::new(Mutex::new(Counters::default()));
        let stopping = Arc::new(AtomicBool::new(false));
        let script = Arc::new(script);

        let worker = {
            let server = Arc::clone(&server);
            let counters = Arc::clone(&counters);
            let stopping = Arc::clone(&stopping);
            std::thread::spawn(move || {
                for request in server.incoming_requests() {
                    if stopping.load(Ordering::SeqCst) {
                        break;
                    }
                    let script = Arc::clone(&script);
                    let counters = Arc::clone(&counters);
                    // One thread per request so scripted delays overlap.
                    std::thread::spawn(move || handle(request, &script, &counters));
                }
            })
        };

        Ok(StubServer {
            base_url: format!("http://127.0.0.1:{port}"),
            server,
            counters,
            stopping,
            worker: Some(worker),
        })
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    pub fn tool_url(&self, tool: &str) -> String {
        format!("{}{TOOL_ROUTE_PREFIX}{tool}", self.base_url)
    }

    pub fn chat_url(&self) -> String {
        format!("{}{CHAT_ROUTE}", self.base_url)
    }

    pub fn request_count(&self, tool: &str) -> usize {
        let c = self.counters.lock().unwrap_or_else(|e| e.into_inner());
        c.per_tool.get(tool).copied().unwrap_or(0)
    }

    pub fn chat_request_count(&self) -> usize {
        self.counters.lock().unwrap_or_else(|e| e.into_inner()).chat
    }

    pub fn total_requests(&self) -> usize {
        self.counters.lock().unwrap_or_else(|e| e.into_inner()).total
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stopping.store(true, Ordering::SeqCst);
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn respond(request: tiny_http::Request, status: u16, body: String) {
    let header = tiny_http::Header::from_bytes("Content-Type", "application/json")
        .expect("static header is valid");
    let _ = request.respond(
        tiny_http::Response::from_string(body)
            .with_status_code(status)
            .with_header(header),
    );
}

fn handle(mut request: tiny_http::Request, script: &StubScript, counters: &Mutex<Counters>) {
    let url = request.url().to_string();
    let mut body = String::new();
    if request.as_reader().read_to_string(&mut body).is_err() {
        return respond(request, 400, json!({"error": "unreadable body"}).to_string());
    }

    if url == "/__stub/counts" {
        let c = counters.lock().unwrap_or_else(|e| e.into_inner());
        let out = json!({"tools": c.per_tool, "chat": c.chat, "total": c.total});
        drop(c);
        return respond(request, 200, out.to_string());
    }

    if url == CHAT_ROUTE {
        let nth = {
            let mut c = counters.lock().unwrap_or_else(|e| e.into_inner());
            c.total += 1;
            c.chat += 1;
            c.chat - 1
        };
        let Some(r) = script.chat.get(nth).or_else(|| script.chat.last()) else {
            return respond(request, 404, json!({"error": "chat not scripted"}).to_string());
        };
        sleep_ms(r.delay_ms);
        let text = match (&r.raw_body, &r.body) {
            (Some(raw), _) => raw.clone(),
            (None, Some(v)) => v.to_string(),
            (None, None) => String::new(),
        };
        return respond(request, r.status, text);
    }

    let Some(tool) = url.strip_prefix(TOOL_ROUTE_PREFIX).map(str::to_string) else {
        return respond(request, 404, json!({"error": "unknown route"}).to_string());
    };
    let nth = {
        let mut c = counters.lock().unwrap_or_else(|e| e.into_inner());
        c.total += 1;
        let n = c.per_tool.entry(tool.clone()).or_insert(0);
        *n += 1;
        *n - 1
    };
    let Some(r) = script.tools.get(&tool).and_then(|e| e.pick(nth)) else {
        return respond(request, 404, json!({"error": format!("tool {tool} not scripted")}).to_string());
    };
    sleep_ms(r.delay_ms);
    let text = match (&r.raw_body, &r.body) {
        (Some(raw), _) => raw.clone(),
        (None, result) => {
            let parsed: Result<ToolRequest, _> = serde_json::from_str(&body);
            match parsed {
                Ok(req) => json!({"request_id": req.request_id, "result": result}).to_string(),
                Err(e) => {
                    return respond(request, 400, json!({"error": e.to_string()}).to_string())
                }
            }
        }
    };
    respond(request, r.status, text);
}

fn sleep_ms(ms: u64) {
    if ms > 0 {
        std::thread::sleep(Duration::from_millis(ms));
    }
}
