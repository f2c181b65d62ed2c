//! Room configuration: writer profiles, provider bindings, the story-shape
//! catalog and room validation.

use std::collections::HashSet;
use std::fmt;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::text::word_count;

/// Inclusive word range reported for the human-authored position statements.
pub const STATEMENT_WORD_RANGE: (usize, usize) = (164, 455);

pub const DEFAULT_TEMPERATURE: f64 = 0.9;
pub const DEFAULT_CONSENSUS_MAX_ROUNDS: u32 = 8;
pub const DEFAULT_SENTENCE_BUDGET: usize = 32;
pub const DEFAULT_REPAIR_ATTEMPTS: u32 = 2;
pub const DEFAULT_DUPLICATION_NGRAM: usize = 10;
pub const DEFAULT_TIMEOUT_SECS: u64 = 60;

static SHAPES: LazyLock<Vec<StoryShape>> = LazyLock::new(|| {
    serde_json::from_str(include_str!("../assets/shapes.json")).expect("bundled shape catalog")
});

const TOPIC_BRIEF: &str = include_str!("../assets/prompts/topic.txt");
const STATEMENT_JW: &str = include_str!("../assets/statements/jw.txt");
const STATEMENT_MM: &str = include_str!("../assets/statements/mm.txt");
const STATEMENT_KV: &str = include_str!("../assets/statements/kv.txt");
const STATEMENT_AI: &str = include_str!("../assets/statements/ai.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    HttpChat,
    Scripted,
}

/// Which model serves a writer and how it is sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderBinding {
    pub provider_kind: ProviderKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    pub model_id: String,
    pub temperature: f64,
    #[serde(default)]
    pub max_retries: u32,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_timeout_secs() -> u64 {
    DEFAULT_TIMEOUT_SECS
}

impl ProviderBinding {
    pub fn scripted(model_id: impl Into<String>) -> Self {
        Self {
            provider_kind: ProviderKind::Scripted,
            endpoint: None,
            model_id: model_id.into(),
            temperature: DEFAULT_TEMPERATURE,
            max_retries: 0,
            timeout_secs: DEFAULT_TIMEOUT_SECS,
        }
    }

    pub fn http_chat(endpoint: impl Into<String>, model_id: impl Into<String>) -> Self {
        Self {
            provider_kind: ProviderKind::HttpChat,
            endpoint: Some(endpoint.into()),
            model_id: model_id.into(),
            temperature: DEFAULT_TEMPERATURE,
            max_retries: 3,
            timeout_secs: DEFAULT_TIMEOUT_SECS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WriterProfile {
    pub name: String,
    pub position_statement: String,
    pub binding: ProviderBinding,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub persona_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryShape {
    pub shape_id: String,
    pub title: String,
    pub description: String,
}

/// The default ten-entry catalog of story shapes, in a fixed order.
pub fn shape_catalog() -> Vec<StoryShape> {
    SHAPES.clone()
}

/// One writer's ideation output.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NarrativeProposal {
    pub author: String,
    pub genre: String,
    pub setting: String,
    pub characters: String,
    pub shape: String,
    pub plot: String,
    pub conflict: String,
    pub extras: Vec<(String, String)>,
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomConfig {
    pub writers: Vec<WriterProfile>,
    pub topic_brief: String,
    #[serde(default = "default_max_rounds")]
    pub consensus_max_rounds: u32,
    #[serde(default = "default_budget")]
    pub writing_sentence_budget: usize,
    #[serde(default = "default_repair_attempts")]
    pub repair_attempts: u32,
    #[serde(default = "default_ngram")]
    pub duplication_ngram: usize,
    #[serde(default)]
    pub seed: u64,
    /// Replaces the default shape catalog when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shapes: Option<Vec<StoryShape>>,
    /// Stop writing early once every writer ends a full cycle with `END`.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub end_marker_early_stop: bool,
}

fn default_max_rounds() -> u32 {
    DEFAULT_CONSENSUS_MAX_ROUNDS
}
fn default_budget() -> usize {
    DEFAULT_SENTENCE_BUDGET
}
fn default_repair_attempts() -> u32 {
    DEFAULT_REPAIR_ATTEMPTS
}
fn default_ngram() -> usize {
    DEFAULT_DUPLICATION_NGRAM
}

impl RoomConfig {
    /// The four-writer reference room (JW, MM, KV, AI) with the published
    /// position statements, one distinct model per writer and temperature 0.9.
    pub fn reference() -> Self {
        let endpoint = "http://localhost:8000/v1/chat/completions";
        let writer = |name: &str, statement: &str, model: &str| WriterProfile {
            name: name.to_string(),
            position_statement: statement.trim_end_matches('\n').to_string(),
            binding: ProviderBinding::http_chat(endpoint, model),
            persona_note: None,
        };
        Self {
            writers: vec![
                writer("JW", STATEMENT_JW, "mistral-large"),
                writer("MM", STATEMENT_MM, "phi-4"),
                writer("KV", STATEMENT_KV, "granite-3.3-instruct"),
                writer("AI", STATEMENT_AI, "llama-4-maverick"),
            ],
            topic_brief: TOPIC_BRIEF.trim_end_matches('\n').to_string(),
            consensus_max_rounds: DEFAULT_CONSENSUS_MAX_ROUNDS,
            writing_sentence_budget: DEFAULT_SENTENCE_BUDGET,
            repair_attempts: DEFAULT_REPAIR_ATTEMPTS,
            duplication_ngram: DEFAULT_DUPLICATION_NGRAM,
            seed: 0,
            shapes: None,
            end_marker_early_stop: false,
        }
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("room config serializes")
    }

    pub fn writer(&self, name: &str) -> Option<&WriterProfile> {
        self.writers.iter().find(|w| w.name == name)
    }

    pub fn writer_names(&self) -> Vec<String> {
        self.writers.iter().map(|w| w.name.clone()).collect()
    }

    /// Catalog offered during ideation.
    pub fn shapes(&self) -> Vec<StoryShape> {
        self.shapes.clone().unwrap_or_else(shape_catalog)
    }
}

/// An invariant violation, located by a field path such as `writers[1].name`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Result of [`validate_room`]. Notes are informational and never make a
/// room invalid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
    pub notes: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

pub fn validate_room(config: &RoomConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut fail = |path: String, message: String| {
        report.diagnostics.push(Diagnostic { path, message });
    };

    if config.writers.len() < 2 {
        fail(
            "writers".into(),
            format!(
                "a room needs at least 2 writers, found {}",
                config.writers.len()
            ),
        );
    }

    let mut seen = HashSet::new();
    for (i, writer) in config.writers.iter().enumerate() {
        let at = |field: &str| format!("writers[{i}].{field}");
        let name = writer.name.trim();
        if name.is_empty() {
            fail(at("name"), "name must not be empty".into());
        } else if name != writer.name
            || writer
                .name
                .contains(|c: char| c.is_whitespace() || c == '/')
        {
            fail(
                at("name"),
                format!("name {:?} must not contain whitespace or '/'", writer.name),
            );
        } else if !seen.insert(writer.name.as_str()) {
            fail(
                at("name"),
                format!("duplicate writer name {:?}", writer.name),
            );
        }
        if writer.position_statement.trim().is_empty() {
            fail(
                at("position_statement"),
                "position statement must not be empty".into(),
            );
        }

        let binding = &writer.binding;
        if !(0.0..=2.0).contains(&binding.temperature) {
            fail(
                at("binding.temperature"),
                format!("temperature {} is outside [0, 2]", binding.temperature),
            );
        }
        match (binding.provider_kind, &binding.endpoint) {
            (ProviderKind::HttpChat, None) => fail(
                at("binding.endpoint"),
                "http_chat bindings need an endpoint".into(),
            ),
            (ProviderKind::HttpChat, Some(url))
                if !(url.starts_with("http://") || url.starts_with("https://")) =>
            {
                fail(
                    at("binding.endpoint"),
                    format!("endpoint {url:?} is not an http(s) URL"),
                )
            }
            (ProviderKind::Scripted, Some(_)) => fail(
                at("binding.endpoint"),
                "scripted bindings take no endpoint".into(),
            ),
            _ => {}
        }
        if binding.model_id.trim().is_empty() {
            fail(at("binding.model_id"), "model_id must not be empty".into());
        }
    }

    if config.topic_brief.trim().is_empty() {
        fail("topic_brief".into(), "topic brief must not be empty".into());
    }
    if config.consensus_max_rounds == 0 {
        fail("consensus_max_rounds".into(), "must be positive".into());
    }
    if config.writing_sentence_budget == 0 || config.writing_sentence_budget < config.writers.len()
    {
        fail(
            "writing_sentence_budget".into(),
            format!(
                "budget {} must be positive and at least the number of writers ({})",
                config.writing_sentence_budget,
                config.writers.len()
            ),
        );
    }
    if config.duplication_ngram < 3 {
        fail(
            "duplication_ngram".into(),
            format!(
                "n-gram length {} must be at least 3",
                config.duplication_ngram
            ),
        );
    }
    if let Some(shapes) = &config.shapes {
        let mut ids = HashSet::new();
        for (i, shape) in shapes.iter().enumerate() {
            if shape.shape_id.trim().is_empty() || !ids.insert(shape.shape_id.as_str()) {
                fail(
                    format!("shapes[{i}].shape_id"),
                    format!("shape id {:?} is empty or duplicated", shape.shape_id),
                );
            }
            if shape.description.trim().is_empty() {
                fail(
                    format!("shapes[{i}].description"),
                    "description must not be empty".into(),
                );
            }
        }
    }

    let (lo, hi) = STATEMENT_WORD_RANGE;
    for (i, writer) in config.writers.iter().enumerate() {
        let words = word_count(&writer.position_statement);
        if !(lo..=hi).contains(&words) {
            report.notes.push(Diagnostic {
                path: format!("writers[{i}].position_statement"),
                message: format!(
                    "position statement has {words} words; reference statements ran {lo}-{hi} words"
                ),
            });
        }
    }
    report
}
