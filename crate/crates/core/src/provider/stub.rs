//! In-process HTTP stub of a chat-completions endpoint, used by integration
//! tests to exercise [`super::HttpChatProvider`] without a network.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use tiny_http::{Header, Response, Server};

/// One canned reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StubReply {
    /// 200 with a chat-completions body whose content is the given text.
    Chat(String),
    /// Arbitrary status and raw body.
    Raw { status: u16, body: String },
}

impl StubReply {
    pub fn chat(text: impl Into<String>) -> Self {
        StubReply::Chat(text.into())
    }

    pub fn status(status: u16) -> Self {
        StubReply::Raw {
            status,
            body: format!("{{\"error\": \"stub status {status}\"}}"),
        }
    }
}

/// A request the stub received.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedRequest {
    pub path: String,
    pub authorization: Option<String>,
    pub body: String,
}

impl RecordedRequest {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_str(&self.body).unwrap_or(serde_json::Value::Null)
    }
}

#[derive(Default)]
struct StubState {
    queue: VecDeque<StubReply>,
    requests: Vec<RecordedRequest>,
}

/// Serves queued replies in order, then `fallback` forever. Shuts down when
/// dropped.
pub struct StubServer {
    server: Arc<Server>,
    state: Arc<Mutex<StubState>>,
    port: u16,
    handle: Option<JoinHandle<()>>,
}

/// Body of a successful chat-completions response carrying `text`.
pub fn chat_body(text: &str) -> String {
    serde_json::json!({
        "id": "stub",
        "object": "chat.completion",
        "choices": [{
            "index": 0,
            "message": {"role": "assistant", "content": text},
            "finish_reason": "stop"
        }]
    })
    .to_string()
}

impl StubServer {
    pub fn start(replies: Vec<StubReply>, fallback: StubReply) -> std::io::Result<Self> {
        let server = Server::http("127.0.0.1:0").map_err(std::io::Error::other)?;
        let port = server
            .server_addr()
            .to_ip()
            .map(|a| a.port())
            .ok_or_else(|| std::io::Error::other("stub bound to a non-IP address"))?;
        let server = Arc::new(server);
        let state = Arc::new(Mutex::new(StubState {
            queue: replies.into(),
            requests: Vec::new(),
        }));

        let handle = {
            let server = Arc::clone(&server);
            let state = Arc::clone(&state);
            std::thread::spawn(move || {
                for mut request in server.incoming_requests() {
                    let mut body = String::new();
                    let _ = request.as_reader().read_to_string(&mut body);
                    let authorization = request
                        .headers()
                        .iter()
                        .find(|h| h.field.equiv("Authorization"))
                        .map(|h| h.value.to_string());
                    let reply = {
                        let mut state = state.lock().expect("stub state");
                        state.requests.push(RecordedRequest {
                            path: request.url().to_string(),
                            authorization,
                            body,
                        });
                        state.queue.pop_front().unwrap_or_else(|| fallback.clone())
                    };
                    let (status, body) = match reply {
                        StubReply::Chat(text) => (200, chat_body(&text)),
                        StubReply::Raw { status, body } => (status, body),
                    };
                    let header = Header::from_bytes("Content-Type", "application/json")
                        .expect("static header");
                    let _ = request.respond(
                        Response::from_string(body)
                            .with_status_code(status)
                            .with_header(header),
                    );
                }
            })
        };

        Ok(Self {
            server,
            state,
            port,
            handle: Some(handle),
        })
    }

    /// Always answers with the same reply.
    pub fn fixed(reply: StubReply) -> std::io::Result<Self> {
        Self::start(Vec::new(), reply)
    }

    pub fn endpoint(&self) -> String {
        format!("http://127.0.0.1:{}/v1/chat/completions", self.port)
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.state.lock().expect("stub state").requests.clone()
    }

    pub fn hits(&self) -> usize {
        self.state.lock().expect("stub state").requests.len()
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}
