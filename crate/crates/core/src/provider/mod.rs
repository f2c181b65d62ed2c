//! Chat-completion providers.
//!
//! Every model call goes through [`ChatProvider::complete`]. Two
//! implementations ship: [`HttpChatProvider`] speaks the OpenAI-compatible
//! chat-completions wire format, and [`ScriptedProvider`] answers from a
//! [`Script`] keyed by request tag for offline, deterministic runs.

mod http;
mod scripted;
pub mod stub;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::room::ProviderBinding;

pub use http::{Backoff, HttpChatProvider, API_KEY_ENV};
pub use scripted::{Script, ScriptError, ScriptedProvider, LENIENT_FILLER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
        }
    }
}

/// The protocol step a request belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    Ideation,
    Consensus,
    Decisions,
    Summary,
    Writing,
}

impl Step {
    pub fn as_str(self) -> &'static str {
        match self {
            Step::Ideation => "ideation",
            Step::Consensus => "consensus",
            Step::Decisions => "decisions",
            Step::Summary => "summary",
            Step::Writing => "writing",
        }
    }
}

impl FromStr for Step {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "ideation" => Step::Ideation,
            "consensus" => Step::Consensus,
            "decisions" => Step::Decisions,
            "summary" => Step::Summary,
            "writing" => Step::Writing,
            other => return Err(format!("unknown step {other:?}")),
        })
    }
}

/// Identifies a call as `(step, round, writer)`, plus a repair attempt
/// number for writing-phase retries.
///
/// The textual key is `step/round/writer`, or `step/round/writer/attempt`
/// when `attempt > 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RequestTag {
    pub step: Step,
    pub round: u32,
    pub writer: String,
    pub attempt: u32,
}

impl RequestTag {
    pub fn new(step: Step, round: u32, writer: impl Into<String>) -> Self {
        Self {
            step,
            round,
            writer: writer.into(),
            attempt: 0,
        }
    }

    pub fn with_attempt(mut self, attempt: u32) -> Self {
        self.attempt = attempt;
        self
    }
}

impl fmt::Display for RequestTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.step.as_str(), self.round, self.writer)?;
        if self.attempt > 0 {
            write!(f, "/{}", self.attempt)?;
        }
        Ok(())
    }
}

impl FromStr for RequestTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('/').collect();
        if !(3..=4).contains(&parts.len()) || parts[2].is_empty() {
            return Err(format!("tag {s:?} is not step/round/writer[/attempt]"));
        }
        let step = parts[0].parse()?;
        let round = parts[1]
            .parse()
            .map_err(|_| format!("tag {s:?} has a non-numeric round"))?;
        let attempt = match parts.get(3) {
            Some(a) => a
                .parse()
                .map_err(|_| format!("tag {s:?} has a non-numeric attempt"))?,
            None => 0,
        };
        Ok(Self {
            step,
            round,
            writer: parts[2].to_string(),
            attempt,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatTurnRequest {
    pub binding: ProviderBinding,
    pub messages: Vec<ChatMessage>,
    pub tag: RequestTag,
}

impl ChatTurnRequest {
    pub fn new(
        binding: ProviderBinding,
        messages: Vec<ChatMessage>,
        tag: RequestTag,
    ) -> Result<Self, ProviderError> {
        match messages.first() {
            None => Err(ProviderError::InvalidRequest("no messages".into())),
            Some(m) if m.role != Role::System => Err(ProviderError::InvalidRequest(
                "first message must be the system prompt".into(),
            )),
            Some(_) => Ok(Self {
                binding,
                messages,
                tag,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    /// Transport attempts spent on this completion (1 when no retry happened).
    pub attempts: u32,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    #[error("provider unavailable after {attempts} attempt(s): {reason}")]
    Unavailable { attempts: u32, reason: String },
    #[error("provider rejected the request with HTTP {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    Protocol(String),
    #[error("script has no entry for {tag}")]
    ScriptMiss { tag: String },
    #[error("invalid chat request: {0}")]
    InvalidRequest(String),
}

/// A chat-completion backend. Implementations must tolerate concurrent
/// calls; responses are matched to requests by the caller.
pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &ChatTurnRequest) -> Result<Completion, ProviderError>;
}

impl<P: ChatProvider + ?Sized> ChatProvider for &P {
    fn complete(&self, request: &ChatTurnRequest) -> Result<Completion, ProviderError> {
        (**self).complete(request)
    }
}

impl<P: ChatProvider + ?Sized> ChatProvider for Box<P> {
    fn complete(&self, request: &ChatTurnRequest) -> Result<Completion, ProviderError> {
        (**self).complete(request)
    }
}
