use std::time::Duration;

use serde::{Deserialize, Serialize};
use ureq::Agent;

use super::{ChatMessage, ChatProvider, ChatTurnRequest, Completion, ProviderError};
use crate::room::ProviderKind;

/// Environment variable holding the bearer token for HTTP providers.
pub const API_KEY_ENV: &str = "WRITERS_ROOM_API_KEY";

/// Exponential backoff between attempts: `initial * 2^k`, scaled by a random
/// factor in `[0.5, 1.0]` when jitter is on, capped at `max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backoff {
    pub initial: Duration,
    pub max: Duration,
    pub jitter: bool,
}

impl Default for Backoff {
    fn default() -> Self {
        Self {
            initial: Duration::from_millis(500),
            max: Duration::from_secs(30),
            jitter: true,
        }
    }
}

impl Backoff {
    /// Delay before retry number `retry` (0-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let base = self
            .initial
            .saturating_mul(2u32.saturating_pow(retry))
            .min(self.max);
        if self.jitter {
            base.mul_f64(rand::random_range(0.5..=1.0))
        } else {
            base
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    content: Option<String>,
}

/// Serializes the chat-completions request body for `request`.
pub fn wire_body(request: &ChatTurnRequest) -> String {
    serde_json::to_string(&WireRequest {
        model: &request.binding.model_id,
        messages: &request.messages,
        temperature: request.binding.temperature,
    })
    .expect("wire request serializes")
}

fn parse_wire_response(body: &str) -> Result<String, ProviderError> {
    let parsed: WireResponse =
        serde_json::from_str(body).map_err(|e| ProviderError::Protocol(e.to_string()))?;
    parsed
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| ProviderError::Protocol("response has no choices[0].message.content".into()))
}

enum AttemptError {
    Transient(String),
    Fatal(ProviderError),
}

/// OpenAI-compatible chat-completions client. Endpoint, model, temperature,
/// timeout and retry budget come from each request's binding.
#[derive(Debug, Clone)]
pub struct HttpChatProvider {
    api_key: Option<String>,
    backoff: Backoff,
}

impl HttpChatProvider {
    pub fn new(api_key: Option<String>) -> Self {
        Self {
            api_key,
            backoff: Backoff::default(),
        }
    }

    /// Reads the bearer token from [`API_KEY_ENV`]; `None` when unset or empty.
    pub fn from_env() -> Option<Self> {
        std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.is_empty())
            .map(|k| Self::new(Some(k)))
    }

    pub fn with_backoff(mut self, backoff: Backoff) -> Self {
        self.backoff = backoff;
        self
    }

    fn attempt(&self, agent: &Agent, url: &str, body: &str) -> Result<String, AttemptError> {
        let mut call = agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", format!("Bearer {key}"));
        }
        let mut response = call
            .send(body)
            .map_err(|e| AttemptError::Transient(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| AttemptError::Transient(e.to_string()))?;
        match status {
            200..=299 => parse_wire_response(&text).map_err(AttemptError::Fatal),
            408 | 429 | 500..=599 => Err(AttemptError::Transient(format!("HTTP {status}: {text}"))),
            _ => Err(AttemptError::Fatal(ProviderError::Rejected {
                status,
                body: text,
            })),
        }
    }
}

impl ChatProvider for HttpChatProvider {
    fn complete(&self, request: &ChatTurnRequest) -> Result<Completion, ProviderError> {
        let binding = &request.binding;
        if binding.provider_kind != ProviderKind::HttpChat {
            return Err(ProviderError::InvalidRequest(format!(
                "writer {} is not bound to an http_chat provider",
                request.tag.writer
            )));
        }
        let url = binding.endpoint.as_deref().ok_or_else(|| {
            ProviderError::InvalidRequest("http_chat binding without endpoint".into())
        })?;
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(binding.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let body = wire_body(request);

        let max_attempts = binding.max_retries.saturating_add(1);
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(&agent, url, &body) {
                Ok(text) => return Ok(Completion { text, attempts }),
                Err(AttemptError::Fatal(e)) => return Err(e),
                Err(AttemptError::Transient(reason)) if attempts >= max_attempts => {
                    return Err(ProviderError::Unavailable { attempts, reason })
                }
                Err(AttemptError::Transient(_)) => {
                    std::thread::sleep(self.backoff.delay(attempts - 1));
                }
            }
        }
    }
}
